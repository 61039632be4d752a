use log::debug;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{frob_dot, lqr_evaluate, project, FeedbackGain, LqrEval, SparseLqrProblem};
use crate::error::{check_dims, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolishOptions {
    pub max_iter: usize,
    /// Stop once the projected gradient satisfies `‖Π∇J‖_F < grad_tol·(1 + ‖F‖_F)`.
    pub grad_tol: f64,
    pub armijo_slope: f64,
    pub armijo_contraction: f64,
    pub max_backtracks: usize,
    /// Relative residual for the conjugate-gradient solve on the pattern.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for PolishOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-5,
            armijo_slope: 0.01,
            armijo_contraction: 0.5,
            max_backtracks: 30,
            cg_tol: 1e-12,
            cg_max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolishOutcome {
    pub gain: FeedbackGain,
    pub j: f64,
    /// Cost of the pattern-projected starting gain.
    pub j_init: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub stalled: bool,
}

/// Minimize `J(F)` over gains supported on `pattern`.
pub fn polish_structured(
    prob: &SparseLqrProblem,
    pattern: &DMatrix<bool>,
    f_init: &FeedbackGain,
    opts: &PolishOptions,
) -> Result<PolishOutcome> {
    check_dims(pattern.shape() == f_init.f.shape(), || "pattern shape differs from F".into())?;
    let mut f = project(&f_init.f, pattern);
    let mut eval = lqr_evaluate(&f, prob).map_err(|e| match e {
        Error::Unstable => Error::PatternDestabilizes,
        other => other,
    })?;
    let j_init = eval.j;
    let full = pattern.iter().all(|&p| p);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..opts.max_iter {
        let grad = project(&eval.gradient(&f), pattern);
        grad_norm = grad.norm();
        if grad_norm < opts.grad_tol * (1.0 + f.norm()) {
            converged = true;
            break;
        }
        let target = if full {
            eval.r_tilde
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NotPositiveDefinite("R̃".into()))?
                .solve(&eval.bpa)
        } else {
            structured_target(&eval, pattern, &f, opts)
        };
        let dir = &target - &f;
        let slope = frob_dot(&grad, &dir);
        if !(slope < 0.0) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = &f + &dir * step;
            if let Ok(e) = lqr_evaluate(&trial, prob) {
                if e.j <= eval.j + opts.armijo_slope * step * slope {
                    accepted = Some((trial, e));
                    break;
                }
            }
            step *= opts.armijo_contraction;
        }
        let Some((trial, e)) = accepted else {
            debug!("polish: Armijo search exhausted at iteration {it}");
            break;
        };
        f = trial;
        eval = e;
        iterations = it + 1;
    }
    if !converged {
        let grad = project(&eval.gradient(&f), pattern);
        grad_norm = grad.norm();
        converged = grad_norm < opts.grad_tol * (1.0 + f.norm());
    }
    let gain = FeedbackGain { f, pattern: pattern.clone(), partition: f_init.partition };
    Ok(PolishOutcome { gain, j: eval.j, j_init, iterations, grad_norm, stalled: !converged })
}

/// Solve `Π(R̃ X L) = Π(BᵀPA·L)` for X supported on the pattern by
/// Jacobi-preconditioned conjugate gradients, starting from `x0`.
fn structured_target(eval: &LqrEval, pattern: &DMatrix<bool>, x0: &DMatrix<f64>, opts: &PolishOptions) -> DMatrix<f64> {
    let op = |x: &DMatrix<f64>| project(&(&eval.r_tilde * x * &eval.l), pattern);
    let rhs = project(&(&eval.bpa * &eval.l), pattern);
    let diag = DMatrix::from_fn(x0.nrows(), x0.ncols(), |i, j| {
        if pattern[(i, j)] {
            1.0 / (eval.r_tilde[(i, i)] * eval.l[(j, j)])
        } else {
            0.0
        }
    });
    let mut x = project(x0, pattern);
    let mut r = &rhs - op(&x);
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return DMatrix::zeros(x0.nrows(), x0.ncols());
    }
    let mut z = r.component_mul(&diag);
    let mut p = z.clone();
    let mut rz = frob_dot(&r, &z);
    for _ in 0..opts.cg_max_iter {
        if r.norm() <= opts.cg_tol * rhs_norm {
            break;
        }
        let ap = op(&p);
        let pap = frob_dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        x += &p * alpha;
        r -= &ap * alpha;
        z = r.component_mul(&diag);
        let rz_next = frob_dot(&r, &z);
        p = &z + &p * (rz_next / rz);
        rz = rz_next;
    }
    x
}
