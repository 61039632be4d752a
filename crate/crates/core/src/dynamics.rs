//! Clohessy-Wiltshire relative motion and block-diagonal swarm plants.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::mateq::zoh_discretize;

/// Earth's standard gravitational parameter, m³/s².
pub const EARTH_MU: f64 = 3.986e14;
/// Circular LEO radius of roughly 400 km altitude, m.
pub const LEO_RADIUS: f64 = 6.778e6;

/// Linear agent model: continuous pair, its ZOH discretization, and the
/// noise and measurement matrices used by the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPlant {
    pub ac: DMatrix<f64>,
    pub bc: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Measurement map.
    pub h: DMatrix<f64>,
    /// Process-noise covariance added on every prediction.
    pub qn: DMatrix<f64>,
    /// Measurement-noise covariance.
    pub rn: DMatrix<f64>,
    pub dt: f64,
}

impl LinearPlant {
    /// Discretize `(ac, bc)` with step `dt` and attach noise/measurement models.
    pub fn new(
        ac: DMatrix<f64>,
        bc: DMatrix<f64>,
        h: DMatrix<f64>,
        qn: DMatrix<f64>,
        rn: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        let n = ac.nrows();
        check_dims(h.ncols() == n, || format!("H has {} columns, state dim {n}", h.ncols()))?;
        check_dims(qn.shape() == (n, n), || "Qn must be n x n".into())?;
        check_dims(rn.shape() == (h.nrows(), h.nrows()), || "Rn must match H rows".into())?;
        let (a, b) = zoh_discretize(&ac, &bc, dt)?;
        Ok(Self { ac, bc, a, b, h, qn, rn, dt })
    }

    /// Discrete-only plant, for tests and toy problems.
    pub fn from_discrete(a: DMatrix<f64>, b: DMatrix<f64>, h: DMatrix<f64>, qn: DMatrix<f64>, rn: DMatrix<f64>) -> Self {
        let n = a.nrows();
        let m = b.ncols();
        Self {
            ac: DMatrix::zeros(n, n),
            bc: DMatrix::zeros(n, m),
            a,
            b,
            h,
            qn,
            rn,
            dt: 1.0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn measurement_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

/// Mean motion of a circular orbit, `sqrt(mu / a³)`.
pub fn orbital_rate(mu: f64, a: f64) -> Result<f64> {
    if !(mu > 0.0) || !(a > 0.0) {
        return Err(Error::NonPositiveInput(format!("mu = {mu}, a = {a}")));
    }
    Ok((mu / (a * a * a)).sqrt())
}

/// Continuous CW matrices for state `[x, y, z, ẋ, ẏ, ż]` and acceleration input.
pub fn cw_matrices(n: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut ac = DMatrix::zeros(6, 6);
    for i in 0..3 {
        ac[(i, i + 3)] = 1.0;
    }
    ac[(3, 0)] = 3.0 * n * n;
    ac[(3, 4)] = 2.0 * n;
    ac[(4, 3)] = -2.0 * n;
    ac[(5, 2)] = -n * n;
    let mut bc = DMatrix::zeros(6, 3);
    for i in 0..3 {
        bc[(i + 3, i)] = 1.0;
    }
    (ac, bc)
}

/// Position-only measurement map `[I₃ | 0]`.
pub fn position_measurement() -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, 6);
    for i in 0..3 {
        h[(i, i)] = 1.0;
    }
    h
}

/// Per-agent CW plant with diagonal noise models.
pub fn cw_plant(mu: f64, radius: f64, dt: f64, pos_noise_std: f64, vel_noise_std: f64, meas_std: f64) -> Result<LinearPlant> {
    let n = orbital_rate(mu, radius)?;
    let (ac, bc) = cw_matrices(n);
    let mut qn = DMatrix::zeros(6, 6);
    for i in 0..3 {
        qn[(i, i)] = pos_noise_std * pos_noise_std;
        qn[(i + 3, i + 3)] = vel_noise_std * vel_noise_std;
    }
    let rn = DMatrix::identity(3, 3) * (meas_std * meas_std);
    LinearPlant::new(ac, bc, position_measurement(), qn, rn, dt)
}

/// Decoupled swarm: `n_agents` copies of one agent plant.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmPlant {
    pub per_agent: LinearPlant,
    pub n_agents: usize,
    /// Stacked discrete state matrix (block diagonal).
    pub a: DMatrix<f64>,
    /// Stacked discrete input matrix (block diagonal).
    pub b: DMatrix<f64>,
}

impl SwarmPlant {
    pub fn agent_state_dim(&self) -> usize {
        self.per_agent.state_dim()
    }

    pub fn agent_control_dim(&self) -> usize {
        self.per_agent.control_dim()
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Stacked continuous matrices, for continuous-time synthesis.
    pub fn continuous(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            block_diag(&self.per_agent.ac, self.n_agents),
            block_diag(&self.per_agent.bc, self.n_agents),
        )
    }
}

pub fn build_swarm_plant(per_agent: LinearPlant, n_agents: usize) -> Result<SwarmPlant> {
    if n_agents == 0 {
        return Err(Error::NonPositiveInput("n_agents must be at least 1".into()));
    }
    let a = block_diag(&per_agent.a, n_agents);
    let b = block_diag(&per_agent.b, n_agents);
    Ok(SwarmPlant { per_agent, n_agents, a, b })
}

/// Repeat `block` `count` times along the diagonal.
pub fn block_diag(block: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(r * count, c * count);
    for k in 0..count {
        out.view_mut((k * r, k * c), (r, c)).copy_from(block);
    }
    out
}
