//! Helpers shared by the statistical unit tests.

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means(values: &[f64], n_batches: usize) -> (f64, f64) {
    let size = values.len() / n_batches;
    assert!(size > 0, "series shorter than batch count");
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(n_batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n_batches - 1) as f64;
    (m, (var / n_batches as f64).sqrt())
}

/// Asserts `|mean - expected| <= z * se`, with a small absolute floor.
pub fn assert_within_se(label: &str, values: &[f64], expected: f64, z: f64) {
    let (m, se) = batch_means(values, 50);
    assert!(
        (m - expected).abs() <= z * se + 1e-12,
        "{label}: mean {m} vs {expected}, se {se}"
    );
}

/// A valid single-layer, single-group state around the given positions.
pub fn state_with_z(z: ndarray::Array2<f64>) -> crate::State {
    let (n, k) = z.dim();
    crate::State {
        z,
        g: vec![0; n],
        a: vec![0.0],
        b: vec![0.0],
        theta: vec![1.0],
        beta: 0.0,
        sigma2: 1.0,
        tau2: 1.0,
        phi: 0.5,
        omega: vec![1.0],
        mu: ndarray::Array2::zeros((1, k)),
        kappa2: vec![1.0],
    }
}
