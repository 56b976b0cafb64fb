use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};

/// First principal component of the standardized columns (correlation
/// PCA). Returns the scores and the share of total variance the component
/// explains. The loading on the first column is made non-negative.
pub fn pca_first_component(columns: &Array2<f64>) -> Result<(Vec<f64>, f64)> {
    let (n, p) = columns.dim();
    if p < 2 {
        return Err(Error::invalid("PCA needs at least two columns"));
    }
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two rows"));
    }
    let mut std = DMatrix::<f64>::zeros(n, p);
    for c in 0..p {
        let col = columns.column(c);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if !(var > 0.0) {
            return Err(Error::invalid(format!("column {} has zero variance", c + 1)));
        }
        let sd = var.sqrt();
        for r in 0..n {
            std[(r, c)] = (col[r] - mean) / sd;
        }
    }
    let corr = std.transpose() * &std / (n - 1) as f64;
    let eig = SymmetricEigen::new(corr);
    let (top, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("p >= 2");
    let mut loading = eig.eigenvectors.column(top).into_owned();
    if loading[0] < 0.0 {
        loading = -loading;
    }
    let scores = &std * &loading;
    Ok((scores.iter().copied().collect(), lambda / p as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_columns_explain_everything() {
        let m = Array2::from_shape_fn((6, 2), |(r, _)| (r * r) as f64);
        let (scores, ve) = pca_first_component(&m).unwrap();
        assert!((ve - 1.0).abs() < 1e-12);
        // Scores increase with the first column.
        assert!(scores.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn independent_columns_split_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Array2::from_shape_fn((20_000, 2), |_| StandardNormal.sample(&mut rng));
        let (_, ve) = pca_first_component(&m).unwrap();
        assert!((ve - 0.5).abs() < 0.05, "{ve}");
    }

    #[test]
    fn two_column_closed_form() {
        // For two standardized columns the top eigenvalue is 1 + |r|.
        let m = ndarray::array![[1.0, 2.0], [2.0, 1.0], [3.0, 5.0], [4.0, 3.0], [5.0, 6.0]];
        let (x, y) = (m.column(0), m.column(1));
        let (mx, my) = (x.mean().unwrap(), y.mean().unwrap());
        let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let r = sxy / (sxx * syy).sqrt();
        let (scores, ve) = pca_first_component(&m).unwrap();
        assert!((ve - (1.0 + r.abs()) / 2.0).abs() < 1e-12);
        assert!(scores.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn sign_follows_first_column() {
        let m = ndarray::array![[1.0, 9.0], [2.0, 7.0], [3.0, 8.0], [4.0, 1.0]];
        let (scores, _) = pca_first_component(&m).unwrap();
        assert!(scores[3] > scores[0]);
    }

    #[test]
    fn rejects_degenerate_input() {
        let m = ndarray::array![[1.0, 2.0], [1.0, 3.0], [1.0, 4.0]];
        assert!(pca_first_component(&m).is_err());
        assert!(pca_first_component(&Array2::zeros((3, 1))).is_err());
    }
}
