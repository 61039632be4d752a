use log::warn;

use super::admm::{admm_sparsify, AdmmOptions};
use super::polish::{polish_structured, PolishOptions};
use super::riccati::centralized_gain;
use super::{BlockPartition, FeedbackGain, SparseLqrProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// Polished gain on the ADMM pattern.
    pub gain: FeedbackGain,
    pub nnz: usize,
    /// Trace cost after polishing.
    pub j: f64,
    /// Trace cost of the ADMM gain before polishing.
    pub j_admm: f64,
    pub admm_iterations: usize,
    pub admm_converged: bool,
    pub fmin_stalls: usize,
    pub polish_iterations: usize,
    pub polish_stalled: bool,
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub gamma: f64,
    pub outcome: std::result::Result<SweepRecord, Error>,
}

/// ADMM + polish for each γ in ascending order, warm-starting each entry
/// from the previous ADMM iterate (the first from the Riccati gain).
pub fn gamma_sweep(
    prob: &SparseLqrProblem,
    gammas: &[f64],
    partition: BlockPartition,
    admm: &AdmmOptions,
    polish: &PolishOptions,
) -> Result<Vec<SweepEntry>> {
    if gammas.first().is_some_and(|&g| !(g >= 0.0)) || gammas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Config("gamma list must be ascending and nonnegative".into()));
    }
    admm.validate()?;
    let centralized = centralized_gain(prob)?.with_partition(partition)?;
    let mut warm = centralized;
    let mut entries = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let outcome = admm_sparsify(prob, gamma, &warm, admm).and_then(|res| {
            let pol = polish_structured(prob, &res.gain.pattern, &res.gain, polish)?;
            let record = SweepRecord {
                nnz: pol.gain.nnz(),
                gain: pol.gain,
                j: pol.j,
                j_admm: res.j,
                admm_iterations: res.iterations,
                admm_converged: res.converged,
                fmin_stalls: res.fmin_stalls,
                polish_iterations: pol.iterations,
                polish_stalled: pol.stalled,
            };
            if prob.is_stabilizing(&res.f_raw) {
                warm = FeedbackGain { f: res.f_raw, ..res.gain };
            } else {
                warm = res.gain;
            }
            Ok(record)
        });
        if let Err(e) = &outcome {
            warn!("sweep: γ = {gamma:e} failed: {e}");
        }
        entries.push(SweepEntry { gamma, outcome });
    }
    Ok(entries)
}
