//! Gaussian-mixture intensities: density evaluation, the closed-form
//! mixture inner product, and linear-Gaussian propagation.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::dynamics::LinearPlant;
use crate::error::{check_dims, Error, Result};
use crate::mateq::symmetric_eigen;

/// Covariances whose smallest eigenvalue falls at or below this level get a
/// diagonal jitter of the same size before factorization.
pub const COV_JITTER: f64 = 1e-12;

/// One weighted Gaussian of an intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { weight, mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// A finite Gaussian mixture, the first moment of the swarm's random set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GmIntensity {
    pub components: Vec<GaussianComponent>,
}

impl GmIntensity {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Σ weights: the expected number of agents.
    pub fn mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.components.first().map(|c| c.dim())
    }

    /// Intensity value at `x`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.components {
            total += c.weight * eval_gaussian(x, &c.mean, &c.cov)?;
        }
        Ok(total)
    }
}

/// Cholesky factorization with the jitter rule for nearly singular covariances.
pub fn factor_covariance(p: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    check_dims(p.is_square(), || format!("covariance is {}x{}", p.nrows(), p.ncols()))?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance".into()));
    }
    let sym = (p + p.transpose()) * 0.5;
    let n = sym.nrows();
    let min_eig = symmetric_eigen(&sym).eigenvalues.min();
    let scale = sym.amax().max(1.0);
    if min_eig > COV_JITTER {
        if let Some(c) = Cholesky::new(sym.clone()) {
            return Ok(c);
        }
    }
    if min_eig < -f64::EPSILON * scale * n as f64 {
        return Err(Error::NotPositiveDefinite(format!("min eigenvalue {min_eig:e}")));
    }
    Cholesky::new(sym + DMatrix::identity(n, n) * COV_JITTER)
        .ok_or_else(|| Error::NotPositiveDefinite(format!("min eigenvalue {min_eig:e} after jitter")))
}

/// A fixed-covariance Gaussian kernel with cached inverse and log-normalizer.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    pub inv: DMatrix<f64>,
    /// `−½(d·ln 2π + ln det S)`
    pub log_norm: f64,
}

impl GaussianKernel {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let chol = factor_covariance(cov)?;
        let d = cov.nrows() as f64;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            inv: chol.inverse(),
            log_norm: -0.5 * (d * (2.0 * PI).ln() + log_det),
        })
    }

    /// Log density of the offset `delta = x − m`.
    pub fn log_density(&self, delta: &DVector<f64>) -> f64 {
        self.log_norm - 0.5 * quad_form(&self.inv, delta)
    }
}

pub(crate) fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += m[(i, j)] * v[i];
        }
        acc += col * v[j];
    }
    acc
}

/// Log of the multivariate normal density `N(x; m, P)`.
pub fn log_gaussian(x: &DVector<f64>, m: &DVector<f64>, p: &DMatrix<f64>) -> Result<f64> {
    check_dims(x.len() == m.len() && p.nrows() == x.len(), || {
        format!("x {}, m {}, P {}x{}", x.len(), m.len(), p.nrows(), p.ncols())
    })?;
    let chol = factor_covariance(p)?;
    let delta = x - m;
    let z = chol.l_dirty().solve_lower_triangular(&delta).ok_or_else(|| Error::NotPositiveDefinite("triangular solve".into()))?;
    let d = x.len() as f64;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (d * (2.0 * PI).ln() + log_det + z.norm_squared()))
}

/// Multivariate normal density `N(x; m, P)`, evaluated in the log domain.
pub fn eval_gaussian(x: &DVector<f64>, m: &DVector<f64>, p: &DMatrix<f64>) -> Result<f64> {
    Ok(log_gaussian(x, m, p)?.exp())
}

/// `∫ f(x) g(x) dx = Σ_j Σ_i w_g^j w_f^i N(m_g^j; m_f^i, P_g^j + P_f^i)`.
///
/// Terms are summed in ascending order so the result does not depend on
/// which argument comes first.
pub fn mixture_l2_inner(f: &GmIntensity, g: &GmIntensity) -> Result<f64> {
    if let (Some(df), Some(dg)) = (f.dim(), g.dim()) {
        check_dims(df == dg, || format!("mixture dims {df} vs {dg}"))?;
    }
    let mut terms = Vec::with_capacity(f.len() * g.len());
    for cg in &g.components {
        for cf in &f.components {
            let s = &cg.cov + &cf.cov;
            let val = eval_gaussian(&cg.mean, &cf.mean, &s)?;
            terms.push(cg.weight * cf.weight * val);
        }
    }
    Ok(sorted_sum(terms))
}

/// `‖f − g‖₂²` through the three inner products.
pub fn mixture_l2_distance_sq(f: &GmIntensity, g: &GmIntensity) -> Result<f64> {
    Ok(mixture_l2_inner(f, f)? + mixture_l2_inner(g, g)? - 2.0 * mixture_l2_inner(f, g)?)
}

pub(crate) fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

/// Propagate one component through the linear plant under control `u`.
pub fn predict_component(c: &GaussianComponent, u: &DVector<f64>, plant: &LinearPlant) -> Result<GaussianComponent> {
    check_dims(c.dim() == plant.state_dim() && u.len() == plant.control_dim(), || {
        format!(
            "component dim {}, control dim {}, plant {}x{}",
            c.dim(),
            u.len(),
            plant.state_dim(),
            plant.control_dim()
        )
    })?;
    let mean = &plant.a * &c.mean + &plant.b * u;
    let cov = &plant.a * &c.cov * plant.a.transpose() + &plant.qn;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianComponent { weight: c.weight, mean, cov })
}
