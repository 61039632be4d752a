use nalgebra::DMatrix;

/// Elementwise soft threshold at `a_ij = (γ/ρ)·W_ij`.
pub fn g_min_shrinkage(v: &DMatrix<f64>, gamma: f64, rho: f64, w: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = gamma / rho;
    v.zip_map(w, |x, wij| {
        let a = scale * wij;
        if x > a {
            x - a
        } else if x < -a {
            x + a
        } else {
            0.0
        }
    })
}

/// Elementwise hard threshold at `b = sqrt(2γ/ρ)`; `|V_ij| = b` maps to zero.
pub fn g_min_truncate(v: &DMatrix<f64>, gamma: f64, rho: f64) -> DMatrix<f64> {
    let b = (2.0 * gamma / rho).sqrt();
    v.map(|x| if x.abs() <= b { 0.0 } else { x })
}

/// Reweighting `W_ij = 1 / (|F_ij| + eps)`.
pub fn update_weights(f: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    f.map(|x| 1.0 / (x.abs() + eps))
}
