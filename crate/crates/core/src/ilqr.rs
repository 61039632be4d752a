//! Iterative LQR for linear dynamics: backward Q-function recursion,
//! regularized gain computation, line-searched forward rollouts.

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::SwarmPlant;
use crate::error::{check_dims, Error, Result};
use crate::gaussmix::quad_form;
use crate::rfscost::{cost_derivatives, running_cost, CostDerivatives, HessianMode, RfsObjective, StackedState};

/// Per-step cost interface consumed by the solver.
pub trait StageCost {
    fn running(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64>;
    fn terminal(&self, x: &DVector<f64>) -> Result<f64>;
    fn running_derivatives(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<CostDerivatives>;
    /// Gradient and Hessian of the terminal cost.
    fn terminal_derivatives(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>;
}

/// `xᵀQx + uᵀRu` per step and `xᵀQ_f x` at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub qf: DMatrix<f64>,
}

impl StageCost for QuadraticCost {
    fn running(&self, _k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        Ok(quad_form(&self.q, x) + quad_form(&self.r, u))
    }

    fn terminal(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(quad_form(&self.qf, x))
    }

    fn running_derivatives(&self, _k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<CostDerivatives> {
        let q2 = &self.q + self.q.transpose();
        let r2 = &self.r + self.r.transpose();
        Ok(CostDerivatives {
            l_x: &q2 * x,
            l_u: &r2 * u,
            l_xx: q2,
            l_uu: r2,
            l_ux: DMatrix::zeros(u.len(), x.len()),
        })
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let q2 = &self.qf + self.qf.transpose();
        Ok((&q2 * x, q2))
    }
}

/// RFS objective along a horizon; `stages[k]` holds the desired mixture at
/// step k and the last entry is the terminal objective.
#[derive(Debug, Clone)]
pub struct RfsTrackingCost {
    pub stages: Vec<RfsObjective>,
    pub weights: Vec<f64>,
    pub agent_dim: usize,
    pub hessian: HessianMode,
}

impl RfsTrackingCost {
    pub fn new(stages: Vec<RfsObjective>, weights: Vec<f64>, agent_dim: usize, hessian: HessianMode) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Config("tracking cost needs at least the terminal stage".into()));
        }
        Ok(Self { stages, weights, agent_dim, hessian })
    }

    pub fn horizon(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn stacked(&self, x: &DVector<f64>) -> Result<StackedState> {
        StackedState::new(x.clone(), self.weights.clone(), self.agent_dim)
    }

    fn stage(&self, k: usize) -> Result<&RfsObjective> {
        self.stages.get(k).ok_or_else(|| Error::DimensionMismatch(format!("step {k} beyond horizon {}", self.horizon())))
    }
}

impl StageCost for RfsTrackingCost {
    fn running(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        running_cost(&self.stacked(x)?, u, self.stage(k)?)
    }

    fn terminal(&self, x: &DVector<f64>) -> Result<f64> {
        self.stage(self.horizon())?.state_cost(&self.stacked(x)?)
    }

    fn running_derivatives(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<CostDerivatives> {
        Ok(cost_derivatives(&self.stacked(x)?, u, self.stage(k)?)?.select(self.hessian))
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let obj = self.stage(self.horizon())?;
        let (g, h) = obj.state_derivatives(&self.stacked(x)?)?;
        let h = match self.hessian {
            HessianMode::Projected => crate::rfscost::project_psd(&h),
            HessianMode::Raw => h,
        };
        Ok((g, h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    pub k_fb: Vec<DMatrix<f64>>,
    pub k_ff: Vec<DVector<f64>>,
    /// Expected cost change of a full step: `[Σ kᵀQ_u, ½ Σ kᵀQ_uu k]`.
    pub dv: [f64; 2],
    /// Regularization that made every Q_uu positive definite.
    pub reg: f64,
}

impl GainSchedule {
    /// Predicted cost change for line-search step `s`.
    pub fn expected_change(&self, s: f64) -> f64 {
        s * self.dv[0] + s * s * self.dv[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IlqrOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Smallest line-search step is 2^-backtrack.
    pub backtrack: u32,
    pub reg_init: f64,
    pub reg_max_escalations: u32,
    pub hessian: HessianMode,
}

impl Default for IlqrOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            backtrack: 10,
            reg_init: 1e-8,
            reg_max_escalations: 8,
            hessian: HessianMode::Projected,
        }
    }
}

impl IlqrOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.tol > 0.0) || !(self.reg_init >= 0.0) {
            return Err(Error::Config("ilqr: max_iter >= 1, tol > 0, reg_init >= 0 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlqrSolution {
    pub trajectory: Trajectory,
    pub gains: GainSchedule,
    /// Cost after each accepted iteration, starting with the initial rollout.
    pub cost_history: Vec<f64>,
    /// Number of backward passes performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Roll `controls` out from `x0` and evaluate the total cost.
pub fn rollout(x0: &DVector<f64>, controls: &[DVector<f64>], plant: &SwarmPlant, cost: &impl StageCost) -> Result<Trajectory> {
    check_dims(x0.len() == plant.state_dim(), || format!("x0 has length {}, plant state {}", x0.len(), plant.state_dim()))?;
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x0.clone());
    let mut total = 0.0;
    for (k, u) in controls.iter().enumerate() {
        check_dims(u.len() == plant.control_dim(), || format!("control {k} has length {}", u.len()))?;
        let x = &states[k];
        total += cost.running(k, x, u)?;
        let next = &plant.a * x + &plant.b * u;
        states.push(next);
    }
    let last = states.last().expect("nonempty");
    total += cost.terminal(last)?;
    if !total.is_finite() || !last.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("rollout diverged".into()));
    }
    Ok(Trajectory { states, controls: controls.to_vec(), cost: total })
}

/// One backward recursion at regularization `reg`, escalating by 10× while
/// some Q_uu fails to factor.
pub fn backward_pass(traj: &Trajectory, plant: &SwarmPlant, cost: &impl StageCost, reg: f64, max_escalations: u32) -> Result<GainSchedule> {
    if !(reg >= 0.0) {
        return Err(Error::NonPositiveInput(format!("regularization {reg}")));
    }
    let n_steps = traj.controls.len();
    let derivs = (0..n_steps)
        .map(|k| cost.running_derivatives(k, &traj.states[k], &traj.controls[k]))
        .collect::<Result<Vec<_>>>()?;
    let terminal = cost.terminal_derivatives(&traj.states[n_steps])?;
    let mut reg = reg;
    for _ in 0..=max_escalations {
        if let Some(g) = backward_recursion(&derivs, &terminal, plant, reg) {
            return Ok(g);
        }
        reg = if reg == 0.0 { 1e-8 } else { reg * 10.0 };
        debug!("ilqr: Q_uu not positive definite, reg -> {reg:e}");
    }
    Err(Error::RegularizationExhausted(max_escalations as usize))
}

fn backward_recursion(
    derivs: &[CostDerivatives],
    terminal: &(DVector<f64>, DMatrix<f64>),
    plant: &SwarmPlant,
    reg: f64,
) -> Option<GainSchedule> {
    let a = &plant.a;
    let b = &plant.b;
    let at = a.transpose();
    let bt = b.transpose();
    let m = b.ncols();
    let mut v_x = terminal.0.clone();
    let mut v_xx = terminal.1.clone();
    let n_steps = derivs.len();
    let mut k_fb = vec![DMatrix::zeros(0, 0); n_steps];
    let mut k_ff = vec![DVector::zeros(0); n_steps];
    let mut dv = [0.0, 0.0];
    for k in (0..n_steps).rev() {
        let d = &derivs[k];
        let vb = &v_xx * b;
        let va = &v_xx * a;
        let q_x = &d.l_x + &at * &v_x;
        let q_u = &d.l_u + &bt * &v_x;
        let q_xx = &d.l_xx + &at * &va;
        let q_uu = &d.l_uu + &bt * &vb;
        let q_ux = &d.l_ux + &bt * &va;
        let mut q_uu_reg = (&q_uu + q_uu.transpose()) * 0.5;
        for i in 0..m {
            q_uu_reg[(i, i)] += reg;
        }
        let chol = Cholesky::new(q_uu_reg)?;
        let kk = -chol.solve(&q_ux);
        let kf = -chol.solve(&q_u);
        let kt = kk.transpose();
        let q_uu_k = &q_uu * &kf;
        v_x = &q_x + &kt * &q_uu_k + &kt * &q_u + q_ux.transpose() * &kf;
        let cross = &kt * &q_ux;
        let vxx = &q_xx + &kt * &q_uu * &kk + &cross + cross.transpose();
        v_xx = (&vxx + vxx.transpose()) * 0.5;
        dv[0] += kf.dot(&q_u);
        dv[1] += 0.5 * kf.dot(&q_uu_k);
        k_fb[k] = kk;
        k_ff[k] = kf;
    }
    Some(GainSchedule { k_fb, k_ff, dv, reg })
}

/// `û_k = u_k + s·k_k + K_k(x̂_k − x_k)` rolled through the plant.
pub fn forward_pass(traj: &Trajectory, gains: &GainSchedule, step: f64, plant: &SwarmPlant, cost: &impl StageCost) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&step) {
        return Err(Error::NonPositiveInput(format!("line-search step {step} outside [0, 1]")));
    }
    let n_steps = traj.controls.len();
    check_dims(gains.k_fb.len() == n_steps && gains.k_ff.len() == n_steps, || "gain schedule length".into())?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut controls = Vec::with_capacity(n_steps);
    states.push(traj.states[0].clone());
    let mut total = 0.0;
    for k in 0..n_steps {
        let x = &states[k];
        let dx = x - &traj.states[k];
        let u = &traj.controls[k] + &gains.k_ff[k] * step + &gains.k_fb[k] * dx;
        total += cost.running(k, x, &u)?;
        let next = &plant.a * x + &plant.b * &u;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("forward pass state blowup at step {k}")));
        }
        states.push(next);
        controls.push(u);
    }
    total += cost.terminal(&states[n_steps])?;
    if !total.is_finite() {
        return Err(Error::NonFinite("forward pass cost".into()));
    }
    Ok(Trajectory { states, controls, cost: total })
}

pub fn ilqr_solve(
    x0: &DVector<f64>,
    u0: &[DVector<f64>],
    plant: &SwarmPlant,
    cost: &impl StageCost,
    opts: &IlqrOptions,
) -> Result<IlqrSolution> {
    opts.validate()?;
    if u0.iter().any(|u| !u.iter().all(|v| v.is_finite())) {
        return Err(Error::NonFinite("initial control sequence".into()));
    }
    let mut traj = rollout(x0, u0, plant, cost)?;
    let mut history = vec![traj.cost];
    let mut reg = opts.reg_init;
    let mut iterations = 0;
    let mut converged = false;
    let mut gains = backward_pass(&traj, plant, cost, reg, opts.reg_max_escalations)?;
    while iterations < opts.max_iter {
        iterations += 1;
        let scale = traj.cost.abs().max(f64::MIN_POSITIVE);
        if -gains.expected_change(1.0) <= opts.tol * scale {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..=opts.backtrack {
            match forward_pass(&traj, &gains, step, plant, cost) {
                Ok(t) if t.cost < traj.cost => {
                    accepted = Some(t);
                    break;
                }
                Ok(_) | Err(Error::NonFinite(_)) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            if gains.reg < 1e8 * opts.reg_init.max(1e-8) {
                reg = gains.reg.max(1e-8) * 10.0;
                debug!("ilqr: line search failed, reg -> {reg:e}");
                gains = backward_pass(&traj, plant, cost, reg, opts.reg_max_escalations)?;
                continue;
            }
            if history.len() == 1 {
                return Err(Error::LineSearchFailed);
            }
            warn!("ilqr: line search stalled after {iterations} iterations");
            break;
        };
        let rel = (traj.cost - next.cost).abs() / next.cost.abs().max(f64::MIN_POSITIVE);
        debug!("ilqr: iter {iterations} cost {:.6e} step {step} reg {:.1e}", next.cost, gains.reg);
        traj = next;
        history.push(traj.cost);
        reg = (gains.reg * 0.1).max(opts.reg_init);
        gains = backward_pass(&traj, plant, cost, reg, opts.reg_max_escalations)?;
        if rel < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(IlqrSolution { trajectory: traj, gains, cost_history: history, iterations, converged })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticGainMode {
    #[default]
    Terminal,
    SteadyState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticGain {
    /// Feedback in the `δu = K δx` convention.
    pub k: DMatrix<f64>,
    pub step: usize,
    /// Set when steady-state mode found no settled step and fell back to K_0.
    pub fallback: bool,
}

pub fn extract_static_gain(gains: &GainSchedule, mode: StaticGainMode) -> Result<StaticGain> {
    let first = gains.k_fb.first().ok_or_else(|| Error::DimensionMismatch("empty gain schedule".into()))?;
    let terminal = StaticGain { k: first.clone(), step: 0, fallback: false };
    match mode {
        StaticGainMode::Terminal => Ok(terminal),
        StaticGainMode::SteadyState => {
            if gains.k_fb.len() == 1 {
                return Ok(terminal);
            }
            for (k, w) in gains.k_fb.windows(2).enumerate() {
                let norm = w[0].norm();
                if norm == 0.0 && w[1].norm() == 0.0 || (&w[0] - &w[1]).norm() < 1e-6 * norm {
                    return Ok(StaticGain { k: w[0].clone(), step: k, fallback: false });
                }
            }
            warn!("steady-state gain not reached; using K_0");
            Ok(StaticGain { fallback: true, ..terminal })
        }
    }
}
