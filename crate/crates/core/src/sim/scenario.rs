use std::f64::consts::PI;
use std::time::Instant;

use log::info;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Formation, LoopMode, ScenarioConfig};
use super::graph::{edge_count, information_graph};
use super::measure::{covariance_factor, gaussian_sample, generate_measurements, match_estimates, Region};
use crate::dynamics::{build_swarm_plant, cw_plant, orbital_rate, SwarmPlant};
use crate::error::{Error, Result};
use crate::gaussmix::{GaussianComponent, GmIntensity};
use crate::ilqr::{extract_static_gain, ilqr_solve, RfsTrackingCost, StageCost, Trajectory};
use crate::phd::{BirthModel, PhdFilter, SensorModel};
use crate::rfscost::{project_psd, RfsObjective, StackedState};
use crate::sparselqr::{gamma_sweep, lqr_evaluate, BlockPartition, FeedbackGain, SparseLqrProblem};

pub const AGENT_STATE_DIM: usize = 6;
pub const AGENT_CONTROL_DIM: usize = 3;

const INIT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const SENSOR_STREAM: u64 = 2;

/// Everything derived from the config before any optimization.
#[derive(Debug, Clone)]
pub struct ScenarioSetup {
    pub cfg: ScenarioConfig,
    pub plant: SwarmPlant,
    pub orbital_rate: f64,
    /// Stacked initial state, agents sorted by initial polar angle.
    pub x0: DVector<f64>,
    /// Desired intensity at every step `0..=horizon`.
    pub desired: Vec<GmIntensity>,
    pub cost: RfsTrackingCost,
}

impl ScenarioSetup {
    pub fn partition(&self) -> BlockPartition {
        BlockPartition { control_block: AGENT_CONTROL_DIM, state_block: AGENT_STATE_DIM }
    }

    /// Mixture distance between the agents at `x` and the desired intensity at step `k`.
    pub fn distance(&self, k: usize, x: &DVector<f64>) -> Result<f64> {
        let obj = &self.cost.stages[k];
        Ok(obj.mixture_terms(&StackedState::new(x.clone(), self.cost.weights.clone(), AGENT_STATE_DIM)?)?.distance())
    }
}

/// Desired component means at time `t`.
pub fn formation_means(formation: &Formation, n_agents: usize, default_spin: f64, t: f64) -> Vec<DVector<f64>> {
    match formation {
        Formation::Star { radius, spin_rate } => {
            let w = spin_rate.unwrap_or(default_spin);
            (0..n_agents)
                .map(|i| {
                    let rho = if i % 2 == 0 { *radius } else { radius * 0.5 };
                    let th = 2.0 * PI * i as f64 / n_agents as f64 + w * t;
                    let (s, c) = th.sin_cos();
                    DVector::from_column_slice(&[rho * c, rho * s, 0.0, -rho * w * s, rho * w * c, 0.0])
                })
                .collect()
        }
        Formation::Explicit { means } => means.iter().map(|m| DVector::from_column_slice(m)).collect(),
    }
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Result<ScenarioSetup> {
    cfg.validate()?;
    let n = cfg.n_agents;
    let agent = cw_plant(
        cfg.plant.mu,
        cfg.plant.radius,
        cfg.dt,
        cfg.process_std.pos,
        cfg.process_std.vel,
        cfg.sensor.meas_std,
    )?;
    let plant = build_swarm_plant(agent, n)?;
    let rate = orbital_rate(cfg.plant.mu, cfg.plant.radius)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(INIT_STREAM);
    let mut agents: Vec<[f64; 6]> = (0..n)
        .map(|_| {
            let mut s = [0.0; 6];
            for v in s.iter_mut().take(3) {
                *v = cfg.init_box * (2.0 * rng.gen::<f64>() - 1.0);
            }
            for v in s.iter_mut().skip(3) {
                *v = cfg.init_velocity * (2.0 * rng.gen::<f64>() - 1.0);
            }
            s
        })
        .collect();
    agents.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let x0 = DVector::from_iterator(n * AGENT_STATE_DIM, agents.iter().flatten().copied());

    let desired_cov = cfg.desired_std.covariance();
    let desired: Vec<GmIntensity> = (0..=cfg.horizon)
        .map(|k| {
            let means = formation_means(&cfg.formation, n, rate, k as f64 * cfg.dt);
            GmIntensity::new(means.into_iter().map(|m| GaussianComponent::new(1.0, m, desired_cov.clone())).collect())
        })
        .collect();
    let r = DMatrix::identity(n * AGENT_CONTROL_DIM, n * AGENT_CONTROL_DIM) * cfg.r_weight;
    let fixed = vec![cfg.distance_std.covariance(); n];
    let first = RfsObjective::new(desired[0].clone(), r, cfg.alpha, fixed)?;
    let mut stages = Vec::with_capacity(desired.len());
    for d in &desired {
        let means: Vec<DVector<f64>> = d.components.iter().map(|c| c.mean.clone()).collect();
        stages.push(first.with_desired_means(&means)?);
    }
    let cost = RfsTrackingCost::new(stages, vec![1.0; n], AGENT_STATE_DIM, cfg.ilqr.hessian)?;
    Ok(ScenarioSetup { cfg: cfg.clone(), plant, orbital_rate: rate, x0, desired, cost })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    /// Objective accumulated along the rollout (secondary performance figure).
    pub rfs_cost: f64,
    pub initial_distance: f64,
    pub final_distance: f64,
}

impl Rollout {
    pub fn distance_reduction(&self) -> f64 {
        1.0 - self.final_distance / self.initial_distance
    }
}

fn split(x: &DVector<f64>, dim: usize) -> Vec<DVector<f64>> {
    (0..x.len() / dim).map(|i| x.rows(i * dim, dim).into_owned()).collect()
}

fn stack(parts: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

/// Closed loop `u = u_ref − F(x̂ − x_ref)` about the nominal trajectory.
pub fn rollout_closed_loop(setup: &ScenarioSetup, nominal: &Trajectory, f: &DMatrix<f64>, mode: LoopMode) -> Result<Rollout> {
    let cfg = &setup.cfg;
    let plant = &setup.plant;
    let n_steps = nominal.controls.len();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    noise_rng.set_stream(NOISE_STREAM);
    let mut sensor_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    sensor_rng.set_stream(SENSOR_STREAM);
    let noise = covariance_factor(&plant.per_agent.qn);

    let region = Region { lo: cfg.sensor.region_lo, hi: cfg.sensor.region_hi };
    let mut filter = match mode {
        LoopMode::TrueState => None,
        LoopMode::PhdEstimate => {
            let sensor = SensorModel::from_plant(&plant.per_agent, cfg.sensor.pd, cfg.sensor.clutter_rate, 1.0 / cfg.sensor.volume())?;
            let p0 = cfg.init_std.covariance();
            let initial = GmIntensity::new(
                split(&setup.x0, AGENT_STATE_DIM).into_iter().map(|m| GaussianComponent::new(1.0, m, p0.clone())).collect(),
            );
            Some(PhdFilter::new(initial, plant.per_agent.clone(), BirthModel::none(), sensor, cfg.phd.clone()))
        }
    };

    let mut x = setup.x0.clone();
    let mut x_hat_pred = setup.x0.clone();
    let mut states = vec![x.clone()];
    let mut controls = Vec::with_capacity(n_steps);
    let mut total = 0.0;
    for k in 0..n_steps {
        let x_hat = match filter.as_mut() {
            None => x.clone(),
            Some(filt) => {
                let z = generate_measurements(&split(&x, AGENT_STATE_DIM), &filt.sensor, &region, &mut sensor_rng)?;
                filt.update(&z)?;
                let est = filt.estimates();
                let pred = split(&x_hat_pred, AGENT_STATE_DIM);
                let assign = match_estimates(&est, &pred);
                let merged: Vec<DVector<f64>> =
                    assign.iter().zip(&pred).map(|(a, p)| a.map_or_else(|| p.clone(), |e| est[e].mean.clone())).collect();
                stack(&merged)
            }
        };
        let u = &nominal.controls[k] - f * (&x_hat - &nominal.states[k]);
        total += setup.cost.running(k, &x, &u)?;
        let mut next = &plant.a * &x + &plant.b * &u;
        if cfg.rollout_noise {
            for i in 0..cfg.n_agents {
                let w = gaussian_sample(&noise, &mut noise_rng);
                let mut block = next.rows_mut(i * AGENT_STATE_DIM, AGENT_STATE_DIM);
                block += w;
            }
        }
        if let Some(filt) = filter.as_mut() {
            let est = split(&x_hat, AGENT_STATE_DIM);
            let per_agent_u = split(&u, AGENT_CONTROL_DIM);
            let u_comp: Vec<DVector<f64>> = filt
                .intensity
                .components
                .iter()
                .map(|c| {
                    let nearest = (0..est.len())
                        .min_by(|&a, &b| {
                            let da = (&est[a] - &c.mean).rows(0, 3).norm_squared();
                            let db = (&est[b] - &c.mean).rows(0, 3).norm_squared();
                            da.total_cmp(&db)
                        })
                        .unwrap_or(0);
                    per_agent_u[nearest].clone()
                })
                .collect();
            filt.predict(&u_comp)?;
        }
        x_hat_pred = &plant.a * &x_hat + &plant.b * &u;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("closed-loop rollout diverged at step {k}")));
        }
        x = next;
        states.push(x.clone());
        controls.push(u);
    }
    total += setup.cost.terminal(&x)?;
    Ok(Rollout {
        initial_distance: setup.distance(0, &states[0])?,
        final_distance: setup.distance(n_steps, &x)?,
        states,
        controls,
        rfs_cost: total,
    })
}

/// Centralized reference: the ILQR gain and the γ = 0 polished gain.
#[derive(Debug, Clone)]
pub struct Baseline {
    /// ILQR static gain in the `u = −F x` convention.
    pub ilqr_gain: FeedbackGain,
    pub ilqr_nnz: usize,
    /// Trace cost of the ILQR gain (None if it does not stabilize the LQR plant).
    pub ilqr_j: Option<f64>,
    pub ilqr_iterations: usize,
    pub ilqr_converged: bool,
    pub ilqr_cost_history: Vec<f64>,
    pub static_gain_step: usize,
    pub static_gain_fallback: bool,
    /// Trace cost of the γ = 0 entry; denominator of every J ratio.
    pub j_c: Option<f64>,
    pub rollout: Rollout,
}

#[derive(Debug, Clone)]
pub struct GammaRecord {
    pub gamma: f64,
    pub gain: FeedbackGain,
    pub nnz: usize,
    pub nnz_ratio: f64,
    pub j: f64,
    pub j_ratio: Option<f64>,
    pub j_admm: f64,
    pub adjacency: DMatrix<bool>,
    pub edges: usize,
    pub admm_iterations: usize,
    pub admm_converged: bool,
    pub fmin_stalls: usize,
    pub polish_iterations: usize,
    pub polish_stalled: bool,
    pub rollout: Rollout,
}

#[derive(Debug, Clone)]
pub struct GammaEntry {
    pub gamma: f64,
    pub record: std::result::Result<GammaRecord, String>,
}

/// How the sparsifier's LQR problem was scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub enabled: bool,
    /// Physical J = cost_scale · normalized J.
    pub cost_scale: f64,
    /// Physical F = input_scale · normalized F.
    pub input_scale: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub setup: ScenarioSetup,
    pub nominal: Trajectory,
    pub baseline: Baseline,
    pub entries: Vec<GammaEntry>,
    pub normalization: Normalization,
    /// Wall-clock seconds per stage; reported but never exported.
    pub timings: Vec<(&'static str, f64)>,
}

/// LQR problem for the sparsifier: Q from the PSD-projected terminal
/// Hessian, R = 2·r_weight·I, B2 = b2_scale·I.
pub fn sparse_problem(setup: &ScenarioSetup, terminal_state: &DVector<f64>) -> Result<SparseLqrProblem> {
    let cfg = &setup.cfg;
    let obj = setup.cost.stages.last().expect("terminal stage");
    let (_, h) = obj.state_derivatives(&setup.cost.stacked(terminal_state)?)?;
    let q = project_psd(&h);
    let q = (&q + q.transpose()) * 0.5;
    let n = setup.plant.state_dim();
    let m = setup.plant.control_dim();
    SparseLqrProblem::new(
        setup.plant.a.clone(),
        setup.plant.b.clone(),
        DMatrix::identity(n, n) * cfg.sparse.b2_scale,
        q,
        DMatrix::identity(m, m) * (2.0 * cfg.r_weight),
        cfg.sparse.time_mode,
    )
}

/// Rescales the sparse problem so the centralized cost is 1 and R = I.
/// Physical values are recovered as `F = input_scale·F̃`, `J = cost_scale·J̃`.
pub fn normalize_problem(prob: &SparseLqrProblem, enabled: bool) -> Result<(SparseLqrProblem, Normalization)> {
    if !enabled {
        return Ok((prob.clone(), Normalization { enabled, cost_scale: 1.0, input_scale: 1.0 }));
    }
    let fc = crate::sparselqr::centralized_gain(prob)?;
    let c = lqr_evaluate(&fc.f, prob)?.j;
    if !(c > 0.0) {
        return Ok((prob.clone(), Normalization { enabled: false, cost_scale: 1.0, input_scale: 1.0 }));
    }
    // R is a multiple of I, so a scalar input scaling maps R/c to I
    let r0 = prob.r[(0, 0)];
    let su = (c / r0).sqrt();
    let m = prob.control_dim();
    let scaled = SparseLqrProblem::new(
        prob.a.clone(),
        &prob.b * su,
        prob.b2.clone(),
        &prob.q / c,
        DMatrix::identity(m, m),
        prob.time_mode,
    )?;
    Ok((scaled, Normalization { enabled, cost_scale: c, input_scale: su }))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let mut timings = Vec::new();
    let t0 = Instant::now();
    let setup = build_scenario(cfg)?;
    let u0 = vec![DVector::zeros(setup.plant.control_dim()); cfg.horizon];
    let sol = ilqr_solve(&setup.x0, &u0, &setup.plant, &setup.cost, &cfg.ilqr)?;
    timings.push(("ilqr", t0.elapsed().as_secs_f64()));
    info!("ilqr: {} iterations, cost {:.6e}, converged {}", sol.iterations, sol.trajectory.cost, sol.converged);

    let stat = extract_static_gain(&sol.gains, cfg.static_gain)?;
    let ilqr_gain = FeedbackGain::from_nonzeros(-&stat.k).with_partition(setup.partition())?;
    let prob = sparse_problem(&setup, sol.trajectory.states.last().expect("terminal state"))?;
    let ilqr_j = lqr_evaluate(&ilqr_gain.f, &prob).ok().map(|e| e.j);

    let t1 = Instant::now();
    let (scaled, norm) = normalize_problem(&prob, cfg.sparse.normalize)?;
    let sweep = gamma_sweep(&scaled, &cfg.gamma_list, setup.partition(), &cfg.admm, &cfg.polish)?;
    timings.push(("sparsify", t1.elapsed().as_secs_f64()));

    let t2 = Instant::now();
    let baseline_rollout = rollout_closed_loop(&setup, &sol.trajectory, &ilqr_gain.f, cfg.loop_mode)?;
    let j_c = sweep
        .first()
        .filter(|e| e.gamma == 0.0)
        .and_then(|e| e.outcome.as_ref().ok())
        .map(|r| r.j * norm.cost_scale);
    let ilqr_nnz = ilqr_gain.nnz();
    let mut entries = Vec::with_capacity(sweep.len());
    for e in sweep {
        let record = match e.outcome {
            Err(err) => Err(err.to_string()),
            Ok(rec) => {
                let gain = FeedbackGain { f: &rec.gain.f * norm.input_scale, ..rec.gain };
                let j = rec.j * norm.cost_scale;
                let adjacency = information_graph(&gain, setup.partition())?;
                let rollout = rollout_closed_loop(&setup, &sol.trajectory, &gain.f, cfg.loop_mode)?;
                Ok(GammaRecord {
                    gamma: e.gamma,
                    nnz: rec.nnz,
                    nnz_ratio: rec.nnz as f64 / ilqr_nnz.max(1) as f64,
                    j,
                    j_ratio: j_c.map(|c| (j - c) / c),
                    j_admm: rec.j_admm * norm.cost_scale,
                    edges: edge_count(&adjacency),
                    adjacency,
                    admm_iterations: rec.admm_iterations,
                    admm_converged: rec.admm_converged,
                    fmin_stalls: rec.fmin_stalls,
                    polish_iterations: rec.polish_iterations,
                    polish_stalled: rec.polish_stalled,
                    gain,
                    rollout,
                })
            }
        };
        entries.push(GammaEntry { gamma: e.gamma, record });
    }
    timings.push(("rollouts", t2.elapsed().as_secs_f64()));

    let baseline = Baseline {
        ilqr_nnz,
        ilqr_gain,
        ilqr_j,
        ilqr_iterations: sol.iterations,
        ilqr_converged: sol.converged,
        ilqr_cost_history: sol.cost_history.clone(),
        static_gain_step: stat.step,
        static_gain_fallback: stat.fallback,
        j_c,
        rollout: baseline_rollout,
    };
    Ok(ScenarioResult { setup, nominal: sol.trajectory, baseline, entries, normalization: norm, timings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_formation_geometry() {
        let f = Formation::Star { radius: 1.0, spin_rate: Some(0.0) };
        let m = formation_means(&f, 12, 1e-3, 0.0);
        assert_eq!(m.len(), 12);
        assert!((m[0].rows(0, 3).norm() - 1.0).abs() < 1e-15);
        assert!((m[1].rows(0, 3).norm() - 0.5).abs() < 1e-15);
        assert!(m.iter().all(|v| v.rows(3, 3).norm() == 0.0));
        let spin = Formation::Star { radius: 2.0, spin_rate: None };
        let w = 1e-3;
        let a = formation_means(&spin, 12, w, 0.0);
        let b = formation_means(&spin, 12, w, 100.0);
        for (x, y) in a.iter().zip(&b) {
            // rotation keeps radius, velocity is tangential with speed ρω
            assert!((x.rows(0, 2).norm() - y.rows(0, 2).norm()).abs() < 1e-12);
            assert!((y.rows(3, 2).norm() - y.rows(0, 2).norm() * w).abs() < 1e-15);
            assert!(y.rows(0, 2).dot(&y.rows(3, 2)).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_state_sorted_and_boxed() {
        let cfg = ScenarioConfig { horizon: 2, ..Default::default() };
        let s = build_scenario(&cfg).unwrap();
        let angles: Vec<f64> = (0..12).map(|i| s.x0[i * 6 + 1].atan2(s.x0[i * 6])).collect();
        assert!(angles.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.x0.iter().all(|v| v.abs() <= 1.0));
        assert_eq!(s.desired.len(), 3);
        assert_eq!(s.cost.stages.len(), 3);
    }
}
