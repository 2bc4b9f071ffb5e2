//! Finite-difference / interpolation weights on arbitrary nodes (Fornberg's
//! recurrence). Used for local differentiation of sampled data where the
//! global spectral basis is not applicable, and for off-grid interpolation
//! of one-dimensional profiles.

/// Weights w such that Σ w_j f(xs[j]) ≈ f^{(m)}(x0), exact for polynomials of
/// degree ≤ xs.len() - 1. Order m = 0 gives Lagrange interpolation weights.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > m, "need more than m+1 nodes for an m-th derivative");
    // c[k][j]: weight of node j for derivative order k.
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.pop().unwrap()
}

/// Interpolate (or differentiate) sampled 1-D data at a point using the p
/// nearest nodes. `xs` must be sorted ascending.
pub fn local_apply(x0: f64, xs: &[f64], fs: &[f64], p: usize, m: usize) -> f64 {
    assert_eq!(xs.len(), fs.len());
    let n = xs.len();
    let p = p.min(n);
    // Center the window on the insertion point of x0.
    let pos = xs.partition_point(|&x| x < x0);
    let half = p / 2;
    let start = pos.saturating_sub(half).min(n - p);
    let w = fd_weights(x0, &xs[start..start + p], m);
    w.iter()
        .zip(&fs[start..start + p])
        .map(|(wi, fi)| wi * fi)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_derivatives_of_polynomials_exactly() {
        let xs = [-1.3, -0.4, 0.1, 0.9, 2.0, 2.2];
        let f = |x: f64| 2.0 - x + 3.0 * x.powi(3);
        let fs: Vec<f64> = xs.iter().map(|&x| f(&x as &f64 * 1.0)).collect();
        let x0 = 0.37;
        let w0 = fd_weights(x0, &xs, 0);
        let v: f64 = w0.iter().zip(&fs).map(|(w, f)| w * f).sum();
        assert!((v - f(x0)).abs() < 1e-12);
        let w2 = fd_weights(x0, &xs, 2);
        let d2: f64 = w2.iter().zip(&fs).map(|(w, f)| w * f).sum();
        assert!((d2 - 18.0 * x0).abs() < 1e-10);
    }

    #[test]
    fn local_window_tracks_smooth_functions() {
        let xs: Vec<f64> = (0..60).map(|i| -1.0 + i as f64 * 0.0339).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let d = local_apply(0.25, &xs, &fs, 9, 1);
        assert!((d - 0.25f64.cos()).abs() < 1e-9);
        let d2 = local_apply(0.25, &xs, &fs, 11, 2);
        assert!((d2 + 0.25f64.sin()).abs() < 1e-7);
    }
}
