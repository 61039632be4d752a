use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{EARTH_MU, LEO_RADIUS};
use crate::error::{Error, Result};
use crate::ilqr::{IlqrOptions, StaticGainMode};
use crate::phd::PhdConfig;
use crate::sparselqr::{AdmmOptions, PolishOptions, TimeMode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    #[default]
    TrueState,
    PhdEstimate,
}

impl std::str::FromStr for LoopMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true_state" => Ok(Self::TrueState),
            "phd_estimate" => Ok(Self::PhdEstimate),
            other => Err(Error::Config(format!("unknown loop mode `{other}`"))),
        }
    }
}

/// Desired swarm shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Formation {
    /// `n_agents` points alternating between radii `radius` and `radius/2`,
    /// evenly spaced in angle in the x–y plane and rotating at `spin_rate`
    /// (defaults to the orbital rate).
    Star {
        radius: f64,
        #[serde(default)]
        spin_rate: Option<f64>,
    },
    /// Fixed desired states `[x, y, z, ẋ, ẏ, ż]`.
    Explicit { means: Vec<[f64; 6]> },
}

/// Position/velocity standard deviations of a diagonal 6×6 covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagStd {
    pub pos: f64,
    pub vel: f64,
}

impl DiagStd {
    pub fn covariance(&self) -> nalgebra::DMatrix<f64> {
        let mut p = nalgebra::DMatrix::zeros(6, 6);
        for i in 0..3 {
            p[(i, i)] = self.pos * self.pos;
            p[(i + 3, i + 3)] = self.vel * self.vel;
        }
        p
    }

    fn validate(&self, what: &str, allow_zero: bool) -> Result<()> {
        let ok = |v: f64| v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
        if !ok(self.pos) || !ok(self.vel) {
            return Err(Error::Config(format!("{what}: standard deviations must be {}", if allow_zero { "nonnegative" } else { "positive" })));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    pub mu: f64,
    /// Chief orbit radius.
    pub radius: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { mu: EARTH_MU, radius: LEO_RADIUS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub pd: f64,
    pub clutter_rate: f64,
    /// Lower corner of the clutter region, m.
    pub region_lo: [f64; 3],
    /// Upper corner of the clutter region, m.
    pub region_hi: [f64; 3],
    /// Position measurement noise standard deviation, m.
    pub meas_std: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            pd: 0.98,
            clutter_rate: 1.0,
            region_lo: [-2.0, -2.0, -1.0],
            region_hi: [2.0, 2.0, 1.0],
            meas_std: 0.01,
        }
    }
}

impl SensorConfig {
    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.region_hi[i] - self.region_lo[i]).product()
    }
}

/// Weights defining the LQR problem handed to the sparsifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparseConfig {
    pub time_mode: TimeMode,
    /// Disturbance input `B2 = b2_scale · I`.
    pub b2_scale: f64,
    /// Solve in coordinates where R = I and J(F_c) = 1.
    pub normalize: bool,
}

impl Default for SparseConfig {
    fn default() -> Self {
        Self { time_mode: TimeMode::Discrete, b2_scale: 1.0, normalize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    /// Initial positions uniform in ±init_box per axis, m.
    pub init_box: f64,
    /// Initial velocities uniform in ±init_velocity per axis, m/s.
    pub init_velocity: f64,
    pub formation: Formation,
    /// Covariance of each desired component.
    pub desired_std: DiagStd,
    /// Fixed covariance of each current component inside the distance terms.
    pub distance_std: DiagStd,
    pub dt: f64,
    pub horizon: usize,
    /// Control weight: R = r_weight · I.
    pub r_weight: f64,
    pub alpha: f64,
    pub gamma_list: Vec<f64>,
    pub plant: PlantConfig,
    /// Process noise of the filter model and (if enabled) of the rollouts.
    pub process_std: DiagStd,
    /// Inject process noise into closed-loop rollouts.
    pub rollout_noise: bool,
    /// Initial filter covariance around the initial states.
    pub init_std: DiagStd,
    pub sensor: SensorConfig,
    pub phd: PhdConfig,
    pub ilqr: IlqrOptions,
    pub static_gain: StaticGainMode,
    pub sparse: SparseConfig,
    pub admm: AdmmOptions,
    pub polish: PolishOptions,
    pub rng_seed: u64,
    pub loop_mode: LoopMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_agents: 12,
            init_box: 1.0,
            init_velocity: 0.0,
            formation: Formation::Star { radius: 1.0, spin_rate: None },
            desired_std: DiagStd { pos: 0.05, vel: 0.01 },
            distance_std: DiagStd { pos: 0.05, vel: 0.01 },
            dt: 10.0,
            horizon: 240,
            r_weight: 1e10,
            alpha: 1.0,
            gamma_list: vec![0.0, 1e-19, 1e-8, 1e-7, 3e-7, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3],
            plant: PlantConfig::default(),
            process_std: DiagStd { pos: 1e-4, vel: 1e-6 },
            rollout_noise: false,
            init_std: DiagStd { pos: 0.05, vel: 0.001 },
            sensor: SensorConfig::default(),
            phd: PhdConfig::default(),
            ilqr: IlqrOptions::default(),
            static_gain: StaticGainMode::Terminal,
            sparse: SparseConfig::default(),
            admm: AdmmOptions::default(),
            polish: PolishOptions::default(),
            rng_seed: 1,
            loop_mode: LoopMode::TrueState,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: &str| Err(Error::Config(m.into()));
        if self.n_agents == 0 {
            return cfg_err("n_agents must be at least 1");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return cfg_err("dt must be positive");
        }
        if self.horizon == 0 {
            return cfg_err("horizon must be at least 1 step");
        }
        if !(self.init_box >= 0.0) || !(self.init_velocity >= 0.0) {
            return cfg_err("init_box and init_velocity must be nonnegative");
        }
        if !(self.r_weight > 0.0) || !self.r_weight.is_finite() {
            return cfg_err("r_weight must be positive");
        }
        if !(self.alpha >= 0.0) {
            return cfg_err("alpha must be nonnegative");
        }
        if self.gamma_list.first().is_some_and(|&g| g != 0.0) {
            return cfg_err("gamma_list must start with 0");
        }
        if self.gamma_list.windows(2).any(|w| !(w[0] <= w[1])) || self.gamma_list.iter().any(|g| !g.is_finite()) {
            return cfg_err("gamma_list must be finite and ascending");
        }
        match &self.formation {
            Formation::Star { radius, spin_rate } => {
                if !(*radius > 0.0) || spin_rate.is_some_and(|w| !w.is_finite()) {
                    return cfg_err("star formation needs a positive radius and finite spin rate");
                }
            }
            Formation::Explicit { means } => {
                if means.len() != self.n_agents {
                    return cfg_err("explicit formation must list one mean per agent");
                }
            }
        }
        self.desired_std.validate("desired_std", false)?;
        self.distance_std.validate("distance_std", false)?;
        self.process_std.validate("process_std", true)?;
        self.init_std.validate("init_std", false)?;
        let s = &self.sensor;
        if !(0.0..=1.0).contains(&s.pd) || !(s.clutter_rate >= 0.0) || !(s.meas_std >= 0.0) {
            return cfg_err("sensor: pd in [0, 1], clutter_rate >= 0, meas_std >= 0 required");
        }
        if (0..3).any(|i| !(s.region_hi[i] > s.region_lo[i])) {
            return cfg_err("sensor region must have positive extent on every axis");
        }
        if !(self.sparse.b2_scale > 0.0) {
            return cfg_err("sparse.b2_scale must be positive");
        }
        if !(self.plant.mu > 0.0) || !(self.plant.radius > 0.0) {
            return cfg_err("plant mu and radius must be positive");
        }
        self.phd.validate()?;
        self.ilqr.validate()?;
        self.admm.validate()?;
        Ok(())
    }
}
