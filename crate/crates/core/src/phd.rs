//! Gaussian-mixture PHD filter with state-independent survival and
//! detection probabilities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::LinearPlant;
use crate::error::{check_dims, Error, Result};
use crate::gaussmix::{factor_covariance, predict_component, quad_form, GaussianComponent, GaussianKernel, GmIntensity};

/// A spawn template applied to every surviving parent component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnTemplate {
    /// Spawned weight is `weight_scale · w_parent`.
    pub weight_scale: f64,
    /// Added to the parent's propagated mean.
    pub offset: DVector<f64>,
    /// Added to the parent's propagated covariance.
    pub added_cov: DMatrix<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BirthModel {
    pub birth: GmIntensity,
    pub spawn: Vec<SpawnTemplate>,
}

impl BirthModel {
    pub fn none() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub pd: f64,
    /// Expected number of clutter points per scan.
    pub clutter_rate: f64,
    /// Uniform clutter density over the surveillance region (1 / volume).
    pub clutter_density: f64,
    pub h: DMatrix<f64>,
    pub rn: DMatrix<f64>,
}

impl SensorModel {
    pub fn new(pd: f64, clutter_rate: f64, clutter_density: f64, h: DMatrix<f64>, rn: DMatrix<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&pd) {
            return Err(Error::Config(format!("pd = {pd} outside [0, 1]")));
        }
        if clutter_rate < 0.0 || clutter_density < 0.0 {
            return Err(Error::Config("clutter rate and density must be nonnegative".into()));
        }
        check_dims(rn.shape() == (h.nrows(), h.nrows()), || "Rn must match H rows".into())?;
        Ok(Self { pd, clutter_rate, clutter_density, h, rn })
    }

    pub fn from_plant(plant: &LinearPlant, pd: f64, clutter_rate: f64, clutter_density: f64) -> Result<Self> {
        Self::new(pd, clutter_rate, clutter_density, plant.h.clone(), plant.rn.clone())
    }

    /// Clutter intensity κ(z), constant over the region.
    pub fn clutter_intensity(&self) -> f64 {
        self.clutter_rate * self.clutter_density
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhdConfig {
    pub ps: f64,
    pub prune_threshold: f64,
    /// Mahalanobis² radius for merging.
    pub merge_threshold: f64,
    pub max_components: usize,
    pub extract_threshold: f64,
}

impl Default for PhdConfig {
    fn default() -> Self {
        Self {
            ps: 0.99,
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 100,
            extract_threshold: 0.5,
        }
    }
}

impl PhdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ps) {
            return Err(Error::Config(format!("ps = {} outside [0, 1]", self.ps)));
        }
        if self.prune_threshold < 0.0 || self.merge_threshold < 0.0 || self.extract_threshold < 0.0 {
            return Err(Error::Config("PHD thresholds must be nonnegative".into()));
        }
        if self.max_components == 0 {
            return Err(Error::Config("max_components must be at least 1".into()));
        }
        Ok(())
    }
}

/// Time update: births ∪ ps-scaled survivors ∪ spawned components.
pub fn phd_predict(
    v: &GmIntensity,
    u_per_component: &[DVector<f64>],
    plant: &LinearPlant,
    birth: &BirthModel,
    cfg: &PhdConfig,
) -> Result<GmIntensity> {
    check_dims(u_per_component.len() == v.len(), || {
        format!("{} controls for {} components", u_per_component.len(), v.len())
    })?;
    let mut out = Vec::with_capacity(birth.birth.len() + v.len() * (1 + birth.spawn.len()));
    out.extend(birth.birth.components.iter().cloned());
    for (c, u) in v.components.iter().zip(u_per_component) {
        let mut pred = predict_component(c, u, plant)?;
        pred.weight = cfg.ps * c.weight;
        out.push(pred);
    }
    for c in &v.components {
        for t in &birth.spawn {
            check_dims(t.offset.len() == c.dim(), || "spawn offset dimension".into())?;
            let mean = &plant.a * &c.mean + &t.offset;
            let cov = &plant.a * &c.cov * plant.a.transpose() + &t.added_cov;
            out.push(GaussianComponent::new(t.weight_scale * c.weight, mean, (&cov + cov.transpose()) * 0.5));
        }
    }
    Ok(GmIntensity::new(out))
}

/// Measurement update in Kalman-filter form for every (component, z) pair.
pub fn phd_update(v_pred: &GmIntensity, z: &[DVector<f64>], sensor: &SensorModel) -> Result<GmIntensity> {
    let h = &sensor.h;
    let mut out: Vec<GaussianComponent> = v_pred
        .components
        .iter()
        .map(|c| GaussianComponent::new((1.0 - sensor.pd) * c.weight, c.mean.clone(), c.cov.clone()))
        .collect();
    if z.is_empty() || v_pred.is_empty() {
        return Ok(GmIntensity::new(out));
    }
    struct Innovation {
        eta: DVector<f64>,
        kernel: GaussianKernel,
        gain: DMatrix<f64>,
        cov: DMatrix<f64>,
    }
    let mut parts = Vec::with_capacity(v_pred.len());
    for c in &v_pred.components {
        check_dims(c.dim() == h.ncols(), || "component dimension vs H".into())?;
        let eta = h * &c.mean;
        let s = h * &c.cov * h.transpose() + &sensor.rn;
        let chol = factor_covariance(&s)?;
        let pht = &c.cov * h.transpose();
        let gain = chol.solve(&pht.transpose()).transpose();
        let n = c.dim();
        let cov = (DMatrix::identity(n, n) - &gain * h) * &c.cov;
        let cov = (&cov + cov.transpose()) * 0.5;
        parts.push(Innovation { eta, kernel: GaussianKernel::new(&s)?, gain, cov });
    }
    let kappa = sensor.clutter_intensity();
    for zk in z {
        check_dims(zk.len() == h.nrows(), || "measurement dimension".into())?;
        let mut scaled = Vec::with_capacity(v_pred.len());
        for (c, p) in v_pred.components.iter().zip(&parts) {
            let q = p.kernel.log_density(&(zk - &p.eta)).exp();
            scaled.push(sensor.pd * c.weight * q);
        }
        let denom = kappa + scaled.iter().sum::<f64>();
        for ((c, p), s) in v_pred.components.iter().zip(&parts).zip(&scaled) {
            let w = if denom > 0.0 { s / denom } else { 0.0 };
            let mean = &c.mean + &p.gain * (zk - &p.eta);
            out.push(GaussianComponent::new(w, mean, p.cov.clone()));
        }
    }
    Ok(GmIntensity::new(out))
}

/// Drop light components, merge close ones by moment matching, then keep
/// the `max_components` heaviest. Merging is repeated until no pair
/// remains within the threshold, so the operation is idempotent.
pub fn prune_merge(v: &GmIntensity, cfg: &PhdConfig) -> GmIntensity {
    let mut current: Vec<GaussianComponent> = v
        .components
        .iter()
        .filter(|c| c.weight >= cfg.prune_threshold)
        .cloned()
        .collect();
    loop {
        let before = current.len();
        current = merge_pass(current, cfg.merge_threshold);
        if current.len() == before {
            break;
        }
    }
    current.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    current.truncate(cfg.max_components);
    GmIntensity::new(current)
}

fn merge_pass(mut remaining: Vec<GaussianComponent>, threshold: f64) -> Vec<GaussianComponent> {
    let inverses: Vec<Option<DMatrix<f64>>> = remaining
        .iter()
        .map(|c| factor_covariance(&c.cov).ok().map(|ch| ch.inverse()))
        .collect();
    let mut inv: Vec<(GaussianComponent, Option<DMatrix<f64>>)> = remaining.drain(..).zip(inverses).collect();
    let mut merged = Vec::new();
    while !inv.is_empty() {
        let mut best = 0;
        for (i, (c, _)) in inv.iter().enumerate() {
            if c.weight > inv[best].0.weight {
                best = i;
            }
        }
        let center = inv[best].0.mean.clone();
        let (cluster, rest): (Vec<_>, Vec<_>) = inv.into_iter().enumerate().partition(|(i, (c, ci))| {
            if *i == best {
                return true;
            }
            match ci {
                Some(m) => quad_form(m, &(&c.mean - &center)) <= threshold,
                None => false,
            }
        });
        inv = rest.into_iter().map(|(_, x)| x).collect();
        let cluster: Vec<GaussianComponent> = cluster.into_iter().map(|(_, (c, _))| c).collect();
        if cluster.len() == 1 {
            merged.extend(cluster);
            continue;
        }
        let w: f64 = cluster.iter().map(|c| c.weight).sum();
        let n = center.len();
        let mut mean = DVector::zeros(n);
        for c in &cluster {
            mean += &c.mean * c.weight;
        }
        mean /= w;
        let mut cov = DMatrix::zeros(n, n);
        for c in &cluster {
            let d = &mean - &c.mean;
            cov += (&c.cov + &d * d.transpose()) * c.weight;
        }
        cov /= w;
        merged.push(GaussianComponent::new(w, mean, (&cov + cov.transpose()) * 0.5));
    }
    merged
}

/// One extracted agent estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedState {
    pub mean: DVector<f64>,
    pub weight: f64,
    pub cov: DMatrix<f64>,
}

/// Means of components heavier than the extraction threshold, each repeated
/// `round(w)` times.
pub fn extract_states(v: &GmIntensity, cfg: &PhdConfig) -> Vec<ExtractedState> {
    let mut out = Vec::new();
    for c in &v.components {
        if c.weight > cfg.extract_threshold {
            let reps = (c.weight.round() as usize).min(c.weight.ceil() as usize);
            for _ in 0..reps {
                out.push(ExtractedState { mean: c.mean.clone(), weight: c.weight, cov: c.cov.clone() });
            }
        }
    }
    out
}

/// Expected number of agents: the total intensity mass.
pub fn expected_count(v: &GmIntensity) -> f64 {
    v.mass()
}

/// Filter state plus models, stepped once per scan.
#[derive(Debug, Clone)]
pub struct PhdFilter {
    pub intensity: GmIntensity,
    pub plant: LinearPlant,
    pub birth: BirthModel,
    pub sensor: SensorModel,
    pub cfg: PhdConfig,
}

impl PhdFilter {
    pub fn new(initial: GmIntensity, plant: LinearPlant, birth: BirthModel, sensor: SensorModel, cfg: PhdConfig) -> Self {
        Self { intensity: initial, plant, birth, sensor, cfg }
    }

    pub fn predict(&mut self, u_per_component: &[DVector<f64>]) -> Result<()> {
        self.intensity = phd_predict(&self.intensity, u_per_component, &self.plant, &self.birth, &self.cfg)?;
        Ok(())
    }

    pub fn update(&mut self, z: &[DVector<f64>]) -> Result<()> {
        let post = phd_update(&self.intensity, z, &self.sensor)?;
        self.intensity = prune_merge(&post, &self.cfg);
        Ok(())
    }

    pub fn estimates(&self) -> Vec<ExtractedState> {
        extract_states(&self.intensity, &self.cfg)
    }
}
