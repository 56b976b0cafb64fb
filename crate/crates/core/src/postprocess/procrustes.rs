use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::State;

fn to_na(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn centered(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    let means: Vec<f64> = (0..m.ncols()).map(|j| m.column(j).sum() / n).collect();
    let c = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - means[j]);
    (c, means)
}

/// Aligns `sample` to `reference` over translation, rotation, reflection
/// and positive scaling, minimizing the summed squared distance.
pub fn procrustes_align(sample: &Array2<f64>, reference: &Array2<f64>) -> Result<Array2<f64>> {
    if sample.dim() != reference.dim() {
        return Err(Error::dim(format!(
            "sample is {:?} but reference is {:?}",
            sample.dim(),
            reference.dim()
        )));
    }
    if sample.iter().chain(reference.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("configurations must be finite"));
    }
    let (r, r_mean) = centered(&to_na(reference));
    if r.norm_squared() == 0.0 {
        return Err(Error::invalid("reference configuration has all points identical"));
    }
    let (s, _) = centered(&to_na(sample));
    let s_norm2 = s.norm_squared();
    let (n, k) = sample.dim();
    if s_norm2 == 0.0 {
        return Ok(Array2::from_shape_fn((n, k), |(_, j)| r_mean[j]));
    }
    // M = S^T R = U D V^T; rotation U V^T maximizes tr(R^T S Q).
    let m = s.transpose() * &r;
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let rot = u * v_t;
    let scale = svd.singular_values.sum() / s_norm2;
    let out = (&s * rot) * scale;
    Ok(Array2::from_shape_fn((n, k), |(i, j)| out[(i, j)] + r_mean[j]))
}

/// Element-wise mean of every draw's positions after alignment to
/// `reference`, which defaults to the last draw.
pub fn posterior_mean_positions(draws: &[State], reference: Option<&Array2<f64>>) -> Result<Array2<f64>> {
    let last = draws.last().ok_or_else(|| Error::invalid("empty chain"))?;
    let reference = reference.unwrap_or(&last.z);
    let mut sum = Array2::<f64>::zeros(reference.dim());
    for d in draws {
        sum += &procrustes_align(&d.z, reference)?;
    }
    Ok(sum / draws.len() as f64)
}

/// Summed squared distance between two configurations.
pub fn procrustes_objective(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
