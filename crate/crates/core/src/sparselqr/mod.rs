//! Sparsity-promoting state feedback: LQR trace cost and its gradient,
//! Riccati baselines, ADMM with Anderson-Moore F-steps, shrinkage and
//! truncation G-steps, structured polishing, and γ sweeps.

mod admm;
mod fmin;
mod gmin;
mod polish;
mod riccati;
mod sweep;

pub use admm::{admm_sparsify, AdmmOptions, AdmmResult, GType};
pub use fmin::{f_min_step, FminOptions, FminOutcome};
pub use gmin::{g_min_shrinkage, g_min_truncate, update_weights};
pub use polish::{polish_structured, PolishOptions, PolishOutcome};
pub use riccati::{centralized_gain, solve_care, solve_dare};
pub use sweep::{gamma_sweep, SweepEntry, SweepRecord};

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::mateq::{symmetric_eigen, LyapunovSolver, DEFAULT_STABILITY_TOL};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    Continuous,
    #[default]
    Discrete,
}

/// Plant `(A, B, B2)` with quadratic weights `(Q, R)`; the feedback law is `u = −F x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLqrProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub time_mode: TimeMode,
}

impl SparseLqrProblem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        b2: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        time_mode: TimeMode,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        check_dims(a.is_square(), || "A must be square".into())?;
        check_dims(b.nrows() == n, || format!("B has {} rows, A is {n}x{n}", b.nrows()))?;
        check_dims(b2.nrows() == n, || format!("B2 has {} rows, A is {n}x{n}", b2.nrows()))?;
        check_dims(q.shape() == (n, n), || "Q must be n x n".into())?;
        check_dims(r.shape() == (m, m), || "R must be m x m".into())?;
        let q = (&q + q.transpose()) * 0.5;
        let r = (&r + r.transpose()) * 0.5;
        let qmin = symmetric_eigen(&q).eigenvalues.min();
        if qmin < -1e-10 * q.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::NotPositiveDefinite(format!("Q has eigenvalue {qmin:e}")));
        }
        if Cholesky::new(r.clone()).is_none() {
            return Err(Error::NotPositiveDefinite("R".into()));
        }
        Ok(Self { a, b, b2, q, r, time_mode })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a - &self.b * f
    }

    fn check_gain(&self, f: &DMatrix<f64>) -> Result<()> {
        check_dims(f.shape() == (self.control_dim(), self.state_dim()), || {
            format!("F is {}x{}, expected {}x{}", f.nrows(), f.ncols(), self.control_dim(), self.state_dim())
        })
    }

    fn lyapunov(&self, f: &DMatrix<f64>) -> Result<LyapunovSolver> {
        let acl = self.closed_loop(f);
        let solver = match self.time_mode {
            TimeMode::Continuous => LyapunovSolver::continuous(&acl, DEFAULT_STABILITY_TOL),
            TimeMode::Discrete => LyapunovSolver::discrete(&acl, DEFAULT_STABILITY_TOL),
        };
        solver.map_err(|e| match e {
            Error::NotHurwitz { .. } | Error::NotSchurStable { .. } => Error::Unstable,
            other => other,
        })
    }

    /// True when `A − BF` is stable in the problem's time mode.
    pub fn is_stabilizing(&self, f: &DMatrix<f64>) -> bool {
        self.check_gain(f).is_ok() && self.lyapunov(f).is_ok()
    }
}

/// Agent block sizes: each agent owns `control_block` rows and `state_block` columns of F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub control_block: usize,
    pub state_block: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGain {
    pub f: DMatrix<f64>,
    pub pattern: DMatrix<bool>,
    pub partition: BlockPartition,
}

impl FeedbackGain {
    /// Full pattern, single block.
    pub fn full(f: DMatrix<f64>) -> Self {
        let (m, n) = f.shape();
        let pattern = DMatrix::from_element(m, n, true);
        Self { f, pattern, partition: BlockPartition { control_block: m.max(1), state_block: n.max(1) } }
    }

    /// Zero `f` outside `pattern`.
    pub fn with_pattern(f: DMatrix<f64>, pattern: DMatrix<bool>) -> Result<Self> {
        check_dims(f.shape() == pattern.shape(), || "pattern shape differs from F".into())?;
        let mut g = Self::full(f);
        g.f.zip_apply(&pattern, |v, keep| {
            if !keep {
                *v = 0.0
            }
        });
        g.pattern = pattern;
        Ok(g)
    }

    /// Pattern taken from the nonzero entries of `f`.
    pub fn from_nonzeros(f: DMatrix<f64>) -> Self {
        let pattern = f.map(|v| v != 0.0);
        Self { pattern, ..Self::full(f) }
    }

    pub fn with_partition(mut self, partition: BlockPartition) -> Result<Self> {
        let (m, n) = self.f.shape();
        check_dims(
            partition.control_block > 0
                && partition.state_block > 0
                && m % partition.control_block == 0
                && n % partition.state_block == 0
                && m / partition.control_block == n / partition.state_block,
            || format!("partition {partition:?} does not tile a {m}x{n} gain into agent blocks"),
        )?;
        self.partition = partition;
        Ok(self)
    }

    pub fn nnz(&self) -> usize {
        self.pattern.iter().filter(|&&p| p).count()
    }

    pub fn n_blocks(&self) -> usize {
        self.f.nrows() / self.partition.control_block
    }
}

pub(crate) fn project(m: &DMatrix<f64>, pattern: &DMatrix<bool>) -> DMatrix<f64> {
    m.zip_map(pattern, |v, keep| if keep { v } else { 0.0 })
}

pub(crate) fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Trace cost, its grammians, and the pieces of its gradient at one F.
#[derive(Debug, Clone)]
pub struct LqrEval {
    pub j: f64,
    /// Closed-loop observability grammian.
    pub p: DMatrix<f64>,
    /// Closed-loop controllability grammian.
    pub l: DMatrix<f64>,
    /// `R` (continuous) or `R + BᵀPB` (discrete).
    pub r_tilde: DMatrix<f64>,
    /// `BᵀP` (continuous) or `BᵀPA` (discrete).
    pub bpa: DMatrix<f64>,
}

impl LqrEval {
    /// `∇J = 2(R̃F − BᵀP·A)L`.
    pub fn gradient(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.r_tilde * f - &self.bpa) * &self.l * 2.0
    }
}

pub fn lqr_evaluate(f: &DMatrix<f64>, prob: &SparseLqrProblem) -> Result<LqrEval> {
    prob.check_gain(f)?;
    let solver = prob.lyapunov(f)?;
    let weight = &prob.q + f.transpose() * &prob.r * f;
    let p = solver.observability(&weight)?;
    let l = solver.controllability(&(&prob.b2 * prob.b2.transpose()))?;
    let j = (prob.b2.transpose() * &p * &prob.b2).trace();
    let btp = prob.b.transpose() * &p;
    let (r_tilde, bpa) = match prob.time_mode {
        TimeMode::Continuous => (prob.r.clone(), btp),
        TimeMode::Discrete => {
            let rt = &prob.r + &btp * &prob.b;
            ((&rt + rt.transpose()) * 0.5, btp * &prob.a)
        }
    };
    if !j.is_finite() {
        return Err(Error::NonFinite("LQR cost".into()));
    }
    Ok(LqrEval { j, p, l, r_tilde, bpa })
}

/// `J(F) = tr(B2ᵀ P(F) B2)`.
pub fn lqr_cost(f: &FeedbackGain, prob: &SparseLqrProblem) -> Result<f64> {
    Ok(lqr_evaluate(&f.f, prob)?.j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(a: f64, mode: TimeMode) -> SparseLqrProblem {
        let one = DMatrix::identity(1, 1);
        SparseLqrProblem::new(DMatrix::from_element(1, 1, a), one.clone(), one.clone(), one.clone(), one, mode).unwrap()
    }

    #[test]
    fn scalar_continuous_cost() {
        let prob = scalar(0.0, TimeMode::Continuous);
        let j = lqr_cost(&FeedbackGain::full(DMatrix::identity(1, 1)), &prob).unwrap();
        assert_relative_eq!(j, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_disturbance_costs_nothing() {
        let mut prob = scalar(0.0, TimeMode::Continuous);
        prob.b2 = DMatrix::zeros(1, 1);
        assert_eq!(lqr_cost(&FeedbackGain::full(DMatrix::identity(1, 1)), &prob).unwrap(), 0.0);
    }

    #[test]
    fn destabilizing_gain_rejected() {
        let prob = scalar(0.0, TimeMode::Continuous);
        assert_eq!(lqr_cost(&FeedbackGain::full(-DMatrix::identity(1, 1)), &prob), Err(Error::Unstable));
        let prob = scalar(1.0, TimeMode::Discrete);
        assert_eq!(lqr_cost(&FeedbackGain::full(DMatrix::zeros(1, 1)), &prob), Err(Error::Unstable));
    }

    #[test]
    fn discrete_scalar_cost_closed_form() {
        // a_cl = 0.5 - 0.3 = 0.2: P = (1 + 0.09) / (1 - 0.04)
        let prob = scalar(0.5, TimeMode::Discrete);
        let j = lqr_cost(&FeedbackGain::full(DMatrix::from_element(1, 1, 0.3)), &prob).unwrap();
        assert_relative_eq!(j, 1.09 / 0.96, max_relative = 1e-14);
    }

    #[test]
    fn pattern_zeroes_entries() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let p = DMatrix::from_row_slice(2, 2, &[true, false, false, true]);
        let g = FeedbackGain::with_pattern(f, p).unwrap();
        assert_eq!(g.f, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]));
        assert_eq!(g.nnz(), 2);
        assert!(g.clone().with_partition(BlockPartition { control_block: 1, state_block: 1 }).is_ok());
        assert!(g.with_partition(BlockPartition { control_block: 2, state_block: 1 }).is_err());
    }

    #[test]
    fn rejects_indefinite_weights() {
        let one = DMatrix::identity(1, 1);
        assert!(SparseLqrProblem::new(one.clone(), one.clone(), one.clone(), -one.clone(), one.clone(), TimeMode::Discrete).is_err());
        assert!(SparseLqrProblem::new(one.clone(), one.clone(), one.clone(), one.clone(), -one, TimeMode::Discrete).is_err());
    }
}
