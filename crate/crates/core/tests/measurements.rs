use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarm_rfs::phd::SensorModel;
use swarm_rfs::sim::{generate_measurements, Region};

fn position_sensor(pd: f64, clutter_rate: f64, std: f64, region: &Region) -> SensorModel {
    let h = DMatrix::from_fn(3, 6, |i, j| if i == j { 1.0 } else { 0.0 });
    let vol: f64 = (0..3).map(|i| region.hi[i] - region.lo[i]).product();
    SensorModel::new(pd, clutter_rate, 1.0 / vol, h, DMatrix::identity(3, 3) * std * std).unwrap()
}

#[test]
fn detection_count_and_noise_statistics() {
    let region = Region { lo: [-2.0, -2.0, -1.0], hi: [2.0, 2.0, 1.0] };
    let truth: Vec<DVector<f64>> = (0..12).map(|i| DVector::from_fn(6, |k, _| if k < 3 { 0.1 * i as f64 } else { 0.0 })).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(71);

    let sensor = position_sensor(0.9, 0.0, 0.01, &region);
    let scans = 4000;
    let mut count = 0usize;
    for _ in 0..scans {
        count += generate_measurements(&truth, &sensor, &region, &mut rng).unwrap().len();
    }
    let mean = count as f64 / scans as f64;
    // binomial(12, 0.9): std of the scan mean ≈ 0.016
    assert!((mean - 10.8).abs() < 0.08, "mean detections {mean}");

    let sensor = position_sensor(1.0, 0.0, 0.01, &region);
    let one = [truth[3].clone()];
    let mut second = DMatrix::zeros(3, 3);
    for _ in 0..scans {
        let z = generate_measurements(&one, &sensor, &region, &mut rng).unwrap();
        let e = &z[0] - truth[3].rows(0, 3);
        second += &e * e.transpose();
    }
    let cov = second / scans as f64;
    let expected = DMatrix::identity(3, 3) * 1e-4;
    assert!((cov - expected).amax() < 1e-5);
}

#[test]
fn clutter_rate_and_support() {
    let region = Region { lo: [-2.0, -2.0, -1.0], hi: [2.0, 2.0, 1.0] };
    let sensor = position_sensor(0.0, 3.0, 0.01, &region);
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let scans = 4000;
    let mut count = 0usize;
    for _ in 0..scans {
        let z = generate_measurements(&[], &sensor, &region, &mut rng).unwrap();
        for p in &z {
            assert!((0..3).all(|i| p[i] >= region.lo[i] && p[i] <= region.hi[i]));
        }
        count += z.len();
    }
    let mean = count as f64 / scans as f64;
    // Poisson(3): std of the scan mean ≈ 0.027
    assert!((mean - 3.0).abs() < 0.12, "mean clutter {mean}");
}
