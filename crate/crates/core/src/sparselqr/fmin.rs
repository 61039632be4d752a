use log::debug;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{frob_dot, lqr_evaluate, LqrEval, SparseLqrProblem};
use crate::error::{check_dims, Error, Result};
use crate::mateq::solve_sylvester_symmetric;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FminOptions {
    pub max_iter: usize,
    /// Stop once `‖∇φ‖_F < grad_tol·(1 + ‖F‖_F)`.
    pub grad_tol: f64,
    pub armijo_slope: f64,
    pub armijo_contraction: f64,
    pub max_backtracks: usize,
}

impl Default for FminOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-4,
            armijo_slope: 0.01,
            armijo_contraction: 0.5,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FminOutcome {
    pub f: DMatrix<f64>,
    /// `φ(F) = J(F) + (ρ/2)‖F − U‖²_F`
    pub phi: f64,
    pub eval: LqrEval,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Gradient tolerance not reached; `f` is the best iterate found.
    pub stalled: bool,
}

fn phi(eval: &LqrEval, f: &DMatrix<f64>, u: &DMatrix<f64>, rho: f64) -> f64 {
    eval.j + 0.5 * rho * (f - u).norm_squared()
}

/// Anderson-Moore descent on `J(F) + (ρ/2)‖F − U‖²_F` with `U = G − Λ/ρ`.
pub fn f_min_step(
    prob: &SparseLqrProblem,
    g: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    f_init: &DMatrix<f64>,
    rho: f64,
    opts: &FminOptions,
) -> Result<FminOutcome> {
    if !(rho >= 0.0) {
        return Err(Error::NonPositiveInput(format!("rho = {rho}")));
    }
    check_dims(g.shape() == f_init.shape() && lambda.shape() == f_init.shape(), || "G, Λ and F shapes differ".into())?;
    let u = if rho > 0.0 { g - lambda / rho } else { DMatrix::zeros(g.nrows(), g.ncols()) };
    let mut f = f_init.clone();
    let mut eval = lqr_evaluate(&f, prob)?;
    let mut value = phi(&eval, &f, &u, rho);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        let grad = eval.gradient(&f) + (&f - &u) * rho;
        grad_norm = grad.norm();
        if grad_norm < opts.grad_tol * (1.0 + f.norm()) {
            return Ok(FminOutcome { f, phi: value, eval, iterations: it, grad_norm, stalled: false });
        }
        let f_bar = anderson_moore_target(&eval, &u, rho)?;
        let dir = &f_bar - &f;
        let slope = frob_dot(&grad, &dir);
        if !(slope < 0.0) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = &f + &dir * step;
            if let Ok(e) = lqr_evaluate(&trial, prob) {
                let v = phi(&e, &trial, &u, rho);
                if v <= value + opts.armijo_slope * step * slope {
                    accepted = Some((trial, e, v));
                    break;
                }
            }
            step *= opts.armijo_contraction;
        }
        let Some((trial, e, v)) = accepted else {
            debug!("f-min: Armijo search exhausted at iteration {it}");
            break;
        };
        f = trial;
        eval = e;
        value = v;
        iterations = it + 1;
    }
    let grad = eval.gradient(&f) + (&f - &u) * rho;
    grad_norm = grad_norm.min(grad.norm());
    let stalled = !(grad.norm() < opts.grad_tol * (1.0 + f.norm()));
    Ok(FminOutcome { f, phi: value, eval, iterations, grad_norm, stalled })
}

/// Solve `(ρ/2)R̃⁻¹F̄ + F̄L = R̃⁻¹(BᵀPA·L) + (ρ/2)R̃⁻¹U` at fixed `(P, L)`.
fn anderson_moore_target(eval: &LqrEval, u: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let rt_chol = eval
        .r_tilde
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("R̃".into()))?;
    let rhs = rt_chol.solve(&(&eval.bpa * &eval.l + u * (0.5 * rho)));
    let m = rt_chol.inverse() * (0.5 * rho);
    solve_sylvester_symmetric(&m, &eval.l, &rhs)
}
