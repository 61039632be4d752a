use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussmix::{quad_form, GaussianKernel};
use crate::phd::{ExtractedState, SensorModel};

/// Uniform clutter region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

/// Draw from `N(0, cov)` through a factor `l` with `l lᵀ = cov`.
pub(crate) fn gaussian_sample<R: Rng + ?Sized>(l: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(l.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    l * z
}

/// Lower factor of a PSD covariance; zero blocks are allowed.
pub(crate) fn covariance_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = crate::mateq::symmetric_eigen(cov);
    let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
}

/// One scan: each agent detected with probability `pd` (position plus
/// noise), Poisson clutter uniform over `region`, output order shuffled.
pub fn generate_measurements<R: Rng + ?Sized>(
    true_states: &[DVector<f64>],
    sensor: &SensorModel,
    region: &Region,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let noise = covariance_factor(&sensor.rn);
    let mut out = Vec::new();
    for x in true_states {
        if rng.gen::<f64>() < sensor.pd {
            out.push(&sensor.h * x + gaussian_sample(&noise, rng));
        }
    }
    if sensor.clutter_rate > 0.0 {
        let count = Poisson::new(sensor.clutter_rate)
            .map_err(|e| Error::Config(format!("clutter rate: {e}")))?
            .sample(rng) as usize;
        let dim = sensor.h.nrows();
        for _ in 0..count {
            out.push(DVector::from_fn(dim, |i, _| {
                let (lo, hi) = (region.lo[i.min(2)], region.hi[i.min(2)]);
                lo + (hi - lo) * rng.gen::<f64>()
            }));
        }
    }
    out.shuffle(rng);
    Ok(out)
}

/// Greedy nearest-first assignment of extracted states to agent slots by
/// Mahalanobis distance under each estimate's covariance. Unassigned
/// agents get `None`.
pub fn match_estimates(estimates: &[ExtractedState], predicted: &[DVector<f64>]) -> Vec<Option<usize>> {
    let mut pairs = Vec::new();
    for (e, est) in estimates.iter().enumerate() {
        let Ok(k) = GaussianKernel::new(&est.cov) else {
            continue;
        };
        for (a, x) in predicted.iter().enumerate() {
            pairs.push((quad_form(&k.inv, &(x - &est.mean)), e, a));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut by_agent = vec![None; predicted.len()];
    let mut used = vec![false; estimates.len()];
    for (_, e, a) in pairs {
        if !used[e] && by_agent[a].is_none() {
            used[e] = true;
            by_agent[a] = Some(e);
        }
    }
    by_agent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::position_measurement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sensor(pd: f64, clutter: f64, std: f64) -> SensorModel {
        SensorModel::new(pd, clutter, 1.0 / 64.0, position_measurement(), DMatrix::identity(3, 3) * (std * std)).unwrap()
    }

    fn region() -> Region {
        Region { lo: [-2.0; 3], hi: [2.0; 3] }
    }

    fn states(n: usize) -> Vec<DVector<f64>> {
        (0..n).map(|i| DVector::from_fn(6, |j, _| (i * 6 + j) as f64 * 0.1)).collect()
    }

    #[test]
    fn perfect_sensor_returns_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = states(4);
        let mut z = generate_measurements(&xs, &sensor(1.0, 0.0, 0.0), &region(), &mut rng).unwrap();
        assert_eq!(z.len(), 4);
        z.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (zi, x) in z.iter().zip(&xs) {
            assert_eq!(zi, &x.rows(0, 3).into_owned());
        }
    }

    #[test]
    fn blind_sensor_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(generate_measurements(&states(5), &sensor(0.0, 0.0, 0.1), &region(), &mut rng).unwrap().is_empty());
    }

    #[test]
    fn greedy_matching_prefers_nearest() {
        let cov = DMatrix::identity(6, 6);
        let est = |x: f64| ExtractedState { mean: DVector::from_element(6, x), weight: 1.0, cov: cov.clone() };
        let m = match_estimates(&[est(1.0), est(0.0)], &[DVector::zeros(6), DVector::from_element(6, 0.9), DVector::from_element(6, 5.0)]);
        assert_eq!(m, vec![Some(1), Some(0), None]);
    }
}
