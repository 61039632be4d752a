//! The distributional swarm objective: L2² distance between the current
//! and desired Gaussian mixtures, a weighted log cross term, and a
//! quadratic control penalty, with analytic derivatives in the stacked
//! component means.
//!
//! Covariances inside the distance terms are fixed; only the means are
//! decision variables.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::mateq::symmetric_eigen;
use crate::gaussmix::{quad_form, sorted_sum, GaussianKernel, GmIntensity};

/// Concatenated means of all current components plus their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    pub means: DVector<f64>,
    pub weights: Vec<f64>,
    pub agent_dim: usize,
}

impl StackedState {
    pub fn new(means: DVector<f64>, weights: Vec<f64>, agent_dim: usize) -> Result<Self> {
        check_dims(agent_dim > 0 && means.len() == weights.len() * agent_dim, || {
            format!("{} stacked entries for {} components of dim {agent_dim}", means.len(), weights.len())
        })?;
        Ok(Self { means, weights, agent_dim })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self, i: usize) -> DVector<f64> {
        self.means.rows(i * self.agent_dim, self.agent_dim).into_owned()
    }

    pub fn with_means(&self, means: DVector<f64>) -> Self {
        Self { means, weights: self.weights.clone(), agent_dim: self.agent_dim }
    }
}

/// The four mixture sums of the objective at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureTerms {
    /// Σ_ij w_f w_f N(m_f^j; m_f^i, P_f^i + P_f^j)
    pub ff: f64,
    /// Σ_ij w_g w_g N(m_g^j; m_g^i, P_g^i + P_g^j)
    pub gg: f64,
    /// Σ_ji w_g w_f N(m_g^j; m_f^i, P_g^j + P_f^i)
    pub fg: f64,
    /// Σ_ji w_g w_f ln N(m_g^j; m_f^i, P_g^j + P_f^i)
    pub log_cross: f64,
}

impl MixtureTerms {
    /// `‖f − g‖₂²`
    pub fn distance(&self) -> f64 {
        self.ff + self.gg - 2.0 * self.fg
    }

    pub fn total(&self, alpha: f64) -> f64 {
        self.distance() - alpha * self.log_cross
    }
}

/// First and second derivatives of one stage cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDerivatives {
    pub l_x: DVector<f64>,
    pub l_u: DVector<f64>,
    pub l_xx: DMatrix<f64>,
    pub l_uu: DMatrix<f64>,
    pub l_ux: DMatrix<f64>,
}

/// `l_xx` as computed, and its projection onto the PSD cone.
#[derive(Debug, Clone, PartialEq)]
pub struct RfsDerivatives {
    pub l_x: DVector<f64>,
    pub l_u: DVector<f64>,
    pub l_xx_raw: DMatrix<f64>,
    pub l_xx_psd: DMatrix<f64>,
    pub l_uu: DMatrix<f64>,
    pub l_ux: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    #[default]
    Projected,
    Raw,
}

impl RfsDerivatives {
    pub fn select(self, mode: HessianMode) -> CostDerivatives {
        CostDerivatives {
            l_x: self.l_x,
            l_u: self.l_u,
            l_xx: match mode {
                HessianMode::Projected => self.l_xx_psd,
                HessianMode::Raw => self.l_xx_raw,
            },
            l_uu: self.l_uu,
            l_ux: self.l_ux,
        }
    }
}

/// Objective data for one time step with cached pairwise kernels.
#[derive(Debug, Clone)]
pub struct RfsObjective {
    pub desired: GmIntensity,
    pub r: DMatrix<f64>,
    pub alpha: f64,
    pub fixed_covs: Vec<DMatrix<f64>>,
    ff_kernels: Vec<GaussianKernel>,
    fg_kernels: Vec<GaussianKernel>,
    gg: f64,
}

impl RfsObjective {
    pub fn new(desired: GmIntensity, r: DMatrix<f64>, alpha: f64, fixed_covs: Vec<DMatrix<f64>>) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Config(format!("alpha = {alpha} must be nonnegative")));
        }
        if !(desired.mass() > 0.0) {
            return Err(Error::Config("desired intensity must have positive mass".into()));
        }
        check_dims(r.is_square(), || "R must be square".into())?;
        if Cholesky::new((&r + r.transpose()) * 0.5).is_none() {
            return Err(Error::NotPositiveDefinite("control weight R".into()));
        }
        let d = desired.dim().unwrap_or(0);
        for p in &fixed_covs {
            check_dims(p.shape() == (d, d), || "fixed covariance dimension".into())?;
        }
        let nf = fixed_covs.len();
        let mut ff_kernels = Vec::with_capacity(nf * nf);
        for j in 0..nf {
            for i in 0..nf {
                ff_kernels.push(GaussianKernel::new(&(&fixed_covs[i] + &fixed_covs[j]))?);
            }
        }
        let mut fg_kernels = Vec::with_capacity(desired.len() * nf);
        for cg in &desired.components {
            for pf in &fixed_covs {
                fg_kernels.push(GaussianKernel::new(&(&cg.cov + pf))?);
            }
        }
        let mut gg_terms = Vec::new();
        for cj in &desired.components {
            for ci in &desired.components {
                let k = GaussianKernel::new(&(&ci.cov + &cj.cov))?;
                gg_terms.push(cj.weight * ci.weight * k.log_density(&(&cj.mean - &ci.mean)).exp());
            }
        }
        Ok(Self {
            desired,
            r,
            alpha,
            fixed_covs,
            ff_kernels,
            fg_kernels,
            gg: sorted_sum(gg_terms),
        })
    }

    /// Same covariances and weights, new desired means (for moving formations).
    pub fn with_desired_means(&self, means: &[DVector<f64>]) -> Result<Self> {
        check_dims(means.len() == self.desired.len(), || "desired mean count".into())?;
        let mut desired = self.desired.clone();
        for (c, m) in desired.components.iter_mut().zip(means) {
            c.mean = m.clone();
        }
        Self::new(desired, self.r.clone(), self.alpha, self.fixed_covs.clone())
    }

    pub fn n_current(&self) -> usize {
        self.fixed_covs.len()
    }

    fn check_state(&self, x: &StackedState) -> Result<()> {
        check_dims(x.n_components() == self.n_current(), || {
            format!("{} current components, objective expects {}", x.n_components(), self.n_current())
        })?;
        check_dims(self.desired.dim().map_or(true, |d| d == x.agent_dim), || "state dimension vs desired".into())
    }

    /// Evaluate the four mixture sums at `x`.
    pub fn mixture_terms(&self, x: &StackedState) -> Result<MixtureTerms> {
        self.check_state(x)?;
        let nf = self.n_current();
        let means: Vec<DVector<f64>> = (0..nf).map(|i| x.mean(i)).collect();
        let mut ff = Vec::with_capacity(nf * nf);
        for j in 0..nf {
            for i in 0..nf {
                let k = &self.ff_kernels[j * nf + i];
                ff.push(x.weights[j] * x.weights[i] * k.log_density(&(&means[j] - &means[i])).exp());
            }
        }
        let mut fg = Vec::with_capacity(self.desired.len() * nf);
        let mut lg = Vec::with_capacity(self.desired.len() * nf);
        for (j, cg) in self.desired.components.iter().enumerate() {
            for i in 0..nf {
                let k = &self.fg_kernels[j * nf + i];
                let ln = k.log_density(&(&cg.mean - &means[i]));
                let w = cg.weight * x.weights[i];
                fg.push(w * ln.exp());
                lg.push(w * ln);
            }
        }
        Ok(MixtureTerms {
            ff: sorted_sum(ff),
            gg: self.gg,
            fg: sorted_sum(fg),
            log_cross: sorted_sum(lg),
        })
    }

    /// Mixture part of the stage cost (no control term).
    pub fn state_cost(&self, x: &StackedState) -> Result<f64> {
        Ok(self.mixture_terms(x)?.total(self.alpha))
    }

    /// Gradient and raw Hessian of the mixture part with respect to the means.
    pub fn state_derivatives(&self, x: &StackedState) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_state(x)?;
        let nf = self.n_current();
        let d = x.agent_dim;
        let n = nf * d;
        let means: Vec<DVector<f64>> = (0..nf).map(|i| x.mean(i)).collect();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        // current-current repulsion; the (i, j) and (j, i) terms coincide
        for i in 0..nf {
            for j in (i + 1)..nf {
                let k = &self.ff_kernels[j * nf + i];
                let delta = &means[i] - &means[j];
                let c = 2.0 * x.weights[i] * x.weights[j] * k.log_density(&delta).exp();
                if c == 0.0 {
                    continue;
                }
                let sd = &k.inv * &delta;
                let g = &sd * (-c);
                let h = (&sd * sd.transpose() - &k.inv) * c;
                {
                    let mut gi = grad.rows_mut(i * d, d);
                    gi += &g;
                }
                {
                    let mut gj = grad.rows_mut(j * d, d);
                    gj -= &g;
                }
                add_block(&mut hess, i, i, d, &h, 1.0);
                add_block(&mut hess, j, j, d, &h, 1.0);
                add_block(&mut hess, i, j, d, &h, -1.0);
                add_block(&mut hess, j, i, d, &h, -1.0);
            }
        }
        // attraction to the desired mixture and the log cross term
        for (jg, cg) in self.desired.components.iter().enumerate() {
            for i in 0..nf {
                let k = &self.fg_kernels[jg * nf + i];
                let delta = &cg.mean - &means[i];
                let w = cg.weight * x.weights[i];
                let nval = k.log_density(&delta).exp();
                let sd = &k.inv * &delta;
                let g = &sd * (-2.0 * w * nval) - &sd * (self.alpha * w);
                let h = (&sd * sd.transpose() - &k.inv) * (-2.0 * w * nval) + &k.inv * (self.alpha * w);
                let mut gi = grad.rows_mut(i * d, d);
                gi += &g;
                add_block(&mut hess, i, i, d, &h, 1.0);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        Ok((grad, hess))
    }
}

fn add_block(m: &mut DMatrix<f64>, bi: usize, bj: usize, d: usize, block: &DMatrix<f64>, sign: f64) {
    let mut v = m.view_mut((bi * d, bj * d), (d, d));
    v.zip_apply(block, |a, b| *a += sign * b);
}

/// Clip negative eigenvalues of a symmetric matrix to zero.
///
/// Matrices that already factor by Cholesky are returned unchanged, so the
/// zero pattern of a block-structured PD Hessian is preserved exactly.
pub fn project_psd(h: &DMatrix<f64>) -> DMatrix<f64> {
    if Cholesky::new(h.clone()).is_some() {
        return h.clone();
    }
    let eig = symmetric_eigen(h);
    let mut neg = DMatrix::zeros(h.nrows(), h.ncols());
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < 0.0 {
            let v = eig.eigenvectors.column(k);
            neg += &v * v.transpose() * lam;
        }
    }
    let out = h - neg;
    (&out + out.transpose()) * 0.5
}

/// `uᵀRu + D(ν, ν_des) − α·Σ w w ln N`.
pub fn running_cost(x: &StackedState, u: &DVector<f64>, obj: &RfsObjective) -> Result<f64> {
    check_dims(u.len() == obj.r.nrows(), || format!("control length {} vs R {}", u.len(), obj.r.nrows()))?;
    Ok(quad_form(&obj.r, u) + obj.state_cost(x)?)
}

pub fn cost_derivatives(x: &StackedState, u: &DVector<f64>, obj: &RfsObjective) -> Result<RfsDerivatives> {
    check_dims(u.len() == obj.r.nrows(), || "control length vs R".into())?;
    let (l_x, l_xx_raw) = obj.state_derivatives(x)?;
    let l_xx_psd = project_psd(&l_xx_raw);
    let r2 = &obj.r + obj.r.transpose();
    Ok(RfsDerivatives {
        l_x,
        l_u: &r2 * u,
        l_xx_raw,
        l_xx_psd,
        l_uu: r2,
        l_ux: DMatrix::zeros(u.len(), x.means.len()),
    })
}
