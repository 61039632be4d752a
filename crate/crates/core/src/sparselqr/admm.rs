use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fmin::{f_min_step, FminOptions};
use super::gmin::{g_min_shrinkage, g_min_truncate, update_weights};
use super::{lqr_evaluate, FeedbackGain, SparseLqrProblem};
use crate::error::{Error, Result};

/// Sparsity penalty handled by the G-step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GType {
    L1,
    #[default]
    WeightedL1,
    /// Cardinality penalty, solved by truncation.
    Nnz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmOptions {
    pub rho: f64,
    pub eps_abs: f64,
    pub max_iter: usize,
    pub g_type: GType,
    pub reweight_eps: f64,
    pub max_reweight: usize,
    pub fmin: FminOptions,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            rho: 100.0,
            eps_abs: 1e-4,
            max_iter: 1000,
            g_type: GType::WeightedL1,
            reweight_eps: 1e-3,
            max_reweight: 5,
            fmin: FminOptions::default(),
        }
    }
}

impl AdmmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.eps_abs > 0.0) || !(self.reweight_eps > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("admm: rho, eps_abs, reweight_eps must be positive and max_iter >= 1".into()));
        }
        if !(self.fmin.grad_tol > 0.0) || !(self.fmin.armijo_contraction > 0.0 && self.fmin.armijo_contraction < 1.0) {
            return Err(Error::Config("admm.fmin: grad_tol > 0 and armijo_contraction in (0, 1) required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdmmResult {
    /// F restricted to the sparsity pattern of G.
    pub gain: FeedbackGain,
    /// Unprojected F iterate, used to warm-start the next γ.
    pub f_raw: DMatrix<f64>,
    pub j: f64,
    pub iterations: usize,
    /// `(‖F − G‖_F, ‖G⁺ − G‖_F)` per iteration.
    pub history: Vec<(f64, f64)>,
    pub converged: bool,
    pub reweights: usize,
    /// Number of F-steps that stopped short of their gradient tolerance.
    pub fmin_stalls: usize,
}

struct Pass {
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    iterations: usize,
    converged: bool,
    stalls: usize,
}

fn admm_pass(
    prob: &SparseLqrProblem,
    gamma: f64,
    f0: &DMatrix<f64>,
    w: &DMatrix<f64>,
    opts: &AdmmOptions,
    history: &mut Vec<(f64, f64)>,
) -> Result<Pass> {
    let rho = opts.rho;
    let mut f = f0.clone();
    let mut g = f0.clone();
    let mut lambda = DMatrix::zeros(f.nrows(), f.ncols());
    let mut stalls = 0;
    for k in 0..opts.max_iter {
        let out = f_min_step(prob, &g, &lambda, &f, rho, &opts.fmin)?;
        stalls += out.stalled as usize;
        f = out.f;
        let v = &f + &lambda / rho;
        let g_next = match opts.g_type {
            GType::Nnz => g_min_truncate(&v, gamma, rho),
            GType::L1 | GType::WeightedL1 => g_min_shrinkage(&v, gamma, rho, w),
        };
        lambda += (&f - &g_next) * rho;
        let primal = (&f - &g_next).norm();
        let dual = (&g_next - &g).norm();
        g = g_next;
        history.push((primal, dual));
        if primal <= opts.eps_abs && dual <= opts.eps_abs {
            debug!("admm: γ = {gamma:e} converged in {} iterations", k + 1);
            return Ok(Pass { f, g, iterations: k + 1, converged: true, stalls });
        }
    }
    Ok(Pass { f, g, iterations: opts.max_iter, converged: false, stalls })
}

/// ADMM for `J(F) + γ·g(F)`; the returned gain carries the pattern of G.
pub fn admm_sparsify(prob: &SparseLqrProblem, gamma: f64, f0: &FeedbackGain, opts: &AdmmOptions) -> Result<AdmmResult> {
    opts.validate()?;
    if !(gamma >= 0.0) {
        return Err(Error::NonPositiveInput(format!("gamma = {gamma}")));
    }
    if !prob.is_stabilizing(&f0.f) {
        return Err(Error::NoStabilizingF0);
    }
    let ones = DMatrix::from_element(f0.f.nrows(), f0.f.ncols(), 1.0);
    let rounds = match opts.g_type {
        GType::WeightedL1 => opts.max_reweight.max(1),
        _ => 1,
    };
    let mut history = Vec::new();
    let mut start = f0.f.clone();
    let mut last: Option<Pass> = None;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut reweights = 0;
    for round in 0..rounds {
        let w = match opts.g_type {
            GType::WeightedL1 => update_weights(&start, opts.reweight_eps),
            _ => ones.clone(),
        };
        let pass = admm_pass(prob, gamma, &start, &w, opts, &mut history)?;
        iterations += pass.iterations;
        stalls += pass.stalls;
        let same_pattern = last
            .as_ref()
            .is_some_and(|p| p.g.iter().zip(pass.g.iter()).all(|(a, b)| (*a == 0.0) == (*b == 0.0)));
        start = pass.f.clone();
        last = Some(pass);
        reweights = round;
        if same_pattern {
            break;
        }
    }
    let pass = last.expect("at least one ADMM round");
    if !pass.converged {
        warn!("admm: γ = {gamma:e} hit max_iter without meeting eps_abs");
    }
    let pattern = pass.g.map(|v| v != 0.0);
    let projected = FeedbackGain::with_pattern(pass.f.clone(), pattern.clone())?.with_partition(f0.partition)?;
    let gain = if prob.is_stabilizing(&projected.f) {
        projected
    } else {
        let from_g = FeedbackGain::with_pattern(pass.g.clone(), pattern)?.with_partition(f0.partition)?;
        if !prob.is_stabilizing(&from_g.f) {
            return Err(Error::PatternDestabilizes);
        }
        from_g
    };
    let j = lqr_evaluate(&gain.f, prob)?.j;
    Ok(AdmmResult {
        gain,
        f_raw: pass.f,
        j,
        iterations,
        history,
        converged: pass.converged,
        reweights,
        fmin_stalls: stalls,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{centralized_gain, TimeMode};
    use super::*;

    #[test]
    fn zero_gamma_keeps_centralized_gain() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
        let prob = SparseLqrProblem::new(a, b, DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(1, 1), TimeMode::Discrete).unwrap();
        let fc = centralized_gain(&prob).unwrap();
        let out = admm_sparsify(&prob, 0.0, &fc, &AdmmOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.gain.nnz(), 2);
        assert!((&out.gain.f - &fc.f).norm() <= 1e-6 * fc.f.norm());
    }

    #[test]
    fn unstable_start_rejected() {
        let one = DMatrix::identity(1, 1);
        let prob = SparseLqrProblem::new(one.clone() * 2.0, one.clone(), one.clone(), one.clone(), one, TimeMode::Discrete).unwrap();
        let f0 = FeedbackGain::full(DMatrix::zeros(1, 1));
        assert!(matches!(admm_sparsify(&prob, 1.0, &f0, &AdmmOptions::default()), Err(Error::NoStabilizingF0)));
    }
}
