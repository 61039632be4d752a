//! Independent oracles shared by the integration tests and the acceptance
//! suite. Each returns the measured error so callers pick the tolerance.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swarm_rfs::dynamics::{build_swarm_plant, cw_matrices, cw_plant, orbital_rate, EARTH_MU, LEO_RADIUS};
use swarm_rfs::gaussmix::{GaussianComponent, GmIntensity};
use swarm_rfs::ilqr::{ilqr_solve, IlqrOptions, QuadraticCost};
use swarm_rfs::mateq::{
    solve_continuous_lyapunov, solve_discrete_lyapunov, solve_sylvester, solve_sylvester_symmetric, zoh_discretize,
    LyapunovSolver, DEFAULT_STABILITY_TOL,
};
use swarm_rfs::phd::{phd_predict, phd_update, BirthModel, PhdConfig, SensorModel, SpawnTemplate};
use swarm_rfs::rfscost::{RfsObjective, StackedState};
use swarm_rfs::sparselqr::{g_min_shrinkage, g_min_truncate, lqr_evaluate, SparseLqrProblem, TimeMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Symmetric positive definite with eigenvalues at least `min_eig`.
pub fn rand_spd(rng: &mut ChaCha8Rng, n: usize, min_eig: f64) -> DMatrix<f64> {
    let m = rand_mat(rng, n, n);
    &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * min_eig
}

/// Random matrix shifted until it is Hurwitz.
pub fn rand_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = rand_mat(rng, n, n);
    let shift = m.norm() + 0.5;
    m - DMatrix::identity(n, n) * shift
}

/// Random matrix scaled to spectral norm bound `radius < 1`.
pub fn rand_schur(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DMatrix<f64> {
    let m = rand_mat(rng, n, n);
    let s = m.norm();
    m * (radius / s)
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(r, c, v.as_slice())
}

pub fn dense_solve(k: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    k.lu().solve(rhs).expect("oracle system is singular")
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Largest relative error of the Lyapunov and Sylvester solvers against a
/// Kronecker-vectorized dense solve, over `instances` random cases of each
/// equation type.
pub fn matrix_equation_oracle_error(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = r.gen_range(1..=8);
        let eye = DMatrix::identity(n, n);
        let q = rand_spd(&mut r, n, 0.1);

        // AᵀP + PA = −Q
        let a = rand_hurwitz(&mut r, n);
        let at = a.transpose();
        let k = kron(&eye, &at) + kron(&at, &eye);
        let oracle = unvec(&dense_solve(k, &(-vec_of(&q))), n, n);
        worst = worst.max(rel_err(&solve_continuous_lyapunov(&a, &q).unwrap(), &oracle));

        // AL + LAᵀ = −Q through the shared-factorization solver
        let k = kron(&eye, &a) + kron(&a, &eye);
        let oracle = unvec(&dense_solve(k, &(-vec_of(&q))), n, n);
        let solver = LyapunovSolver::continuous(&a, DEFAULT_STABILITY_TOL).unwrap();
        worst = worst.max(rel_err(&solver.controllability(&q).unwrap(), &oracle));

        // AᵀPA − P = −Q
        let a = rand_schur(&mut r, n, 0.95);
        let at = a.transpose();
        let k = kron(&at, &at) - DMatrix::identity(n * n, n * n);
        let oracle = unvec(&dense_solve(k, &(-vec_of(&q))), n, n);
        worst = worst.max(rel_err(&solve_discrete_lyapunov(&a, &q).unwrap(), &oracle));

        // ALAᵀ − L = −Q
        let k = kron(&a, &a) - DMatrix::identity(n * n, n * n);
        let oracle = unvec(&dense_solve(k, &(-vec_of(&q))), n, n);
        let solver = LyapunovSolver::discrete(&a, DEFAULT_STABILITY_TOL).unwrap();
        worst = worst.max(rel_err(&solver.controllability(&q).unwrap(), &oracle));

        // MX + XN = C with both spectra in the left half-plane
        let p = r.gen_range(1..=8);
        let m = rand_hurwitz(&mut r, p);
        let nn = rand_hurwitz(&mut r, n);
        let c = rand_mat(&mut r, p, n);
        let k = kron(&DMatrix::identity(n, n), &m) + kron(&nn.transpose(), &DMatrix::identity(p, p));
        let oracle = unvec(&dense_solve(k, &vec_of(&c)), p, n);
        worst = worst.max(rel_err(&solve_sylvester(&m, &nn, &c).unwrap(), &oracle));

        // symmetric positive definite M and N
        let ms = rand_spd(&mut r, p, 0.1);
        let ns = rand_spd(&mut r, n, 0.1);
        let k = kron(&DMatrix::identity(n, n), &ms) + kron(&ns, &DMatrix::identity(p, p));
        let oracle = unvec(&dense_solve(k, &vec_of(&c)), p, n);
        worst = worst.max(rel_err(&solve_sylvester_symmetric(&ms, &ns, &c).unwrap(), &oracle));
    }
    worst
}

/// Relative error of `zoh_discretize` on the CW plant against a product of
/// `substeps` fine steps, each from a 12-term Taylor series.
pub fn zoh_fine_step_error(dt: f64, substeps: usize) -> f64 {
    let n = orbital_rate(EARTH_MU, LEO_RADIUS).unwrap();
    let (ac, bc) = cw_matrices(n);
    let h = dt / substeps as f64;
    let eye = DMatrix::<f64>::identity(6, 6);
    let mut a_h = eye.clone();
    let mut phi = eye.clone() * h;
    let mut term = eye.clone();
    let mut fact = 1.0;
    for j in 1..=12 {
        term = &term * &ac * h;
        fact *= j as f64;
        a_h += &term / fact;
        phi += &term * (h / (fact * (j + 1) as f64));
    }
    let b_h = &phi * &bc;
    let mut a = eye;
    let mut b = DMatrix::zeros(6, 3);
    for _ in 0..substeps {
        b = &a_h * &b + &b_h;
        a = &a_h * &a;
    }
    let (za, zb) = zoh_discretize(&ac, &bc, dt).unwrap();
    rel_err(&za, &a).max(rel_err(&zb, &b))
}

pub struct LqCheck {
    pub max_gain_err: f64,
    pub iterations: usize,
    pub non_increasing: bool,
}

/// ILQR on a pure LQ problem over the 12-agent CW plant against the
/// time-varying Riccati recursion for `xᵀQx + uᵀRu`.
pub fn lq_ilqr_check(n_agents: usize, horizon: usize, seed: u64) -> LqCheck {
    let agent = cw_plant(EARTH_MU, LEO_RADIUS, 10.0, 1e-4, 1e-6, 0.01).unwrap();
    let plant = build_swarm_plant(agent, n_agents).unwrap();
    let (nx, nu) = (plant.state_dim(), plant.control_dim());
    let mut r = rng(seed);
    let q = rand_spd(&mut r, nx, 0.5);
    let rw = DMatrix::identity(nu, nu) * 1e3;
    let qf = DMatrix::identity(nx, nx) * 10.0;
    let cost = QuadraticCost { q: q.clone(), r: rw.clone(), qf: qf.clone() };
    let x0 = DVector::from_fn(nx, |_, _| r.gen_range(-1.0..1.0));
    let u0 = vec![DVector::zeros(nu); horizon];
    let sol = ilqr_solve(&x0, &u0, &plant, &cost, &IlqrOptions::default()).unwrap();

    let (a, b) = (&plant.a, &plant.b);
    let mut p = &qf * 2.0;
    let mut worst: f64 = 0.0;
    for k in (0..horizon).rev() {
        let s = &rw * 2.0 + b.transpose() * &p * b;
        let gain = -s.lu().solve(&(b.transpose() * &p * a)).unwrap();
        worst = worst.max(rel_err(&sol.gains.k_fb[k], &gain));
        let acl = a + b * &gain;
        let next = &q * 2.0 + gain.transpose() * &rw * 2.0 * &gain + acl.transpose() * &p * &acl;
        p = (&next + next.transpose()) * 0.5;
    }
    let non_increasing = sol.cost_history.windows(2).all(|w| w[1] <= w[0]);
    LqCheck { max_gain_err: worst, iterations: sol.iterations, non_increasing }
}

/// Single-target GM-PHD (pd = ps = 1, no clutter, no births) against a
/// Kalman filter; returns the largest mean/covariance deviation relative
/// to the Kalman values.
pub fn kalman_equivalence_error(steps: usize, seed: u64) -> f64 {
    let plant = cw_plant(EARTH_MU, LEO_RADIUS, 10.0, 1e-3, 1e-4, 0.05).unwrap();
    let sensor = SensorModel::from_plant(&plant, 1.0, 0.0, 0.0).unwrap();
    let cfg = PhdConfig { ps: 1.0, ..Default::default() };
    let mut r = rng(seed);
    let mut truth = DVector::from_fn(6, |_, _| r.gen_range(-1.0..1.0));
    let mut m = truth.clone() + DVector::from_fn(6, |_, _| r.gen_range(-0.1..0.1));
    let mut p = DMatrix::identity(6, 6) * 0.05;
    let mut v = GmIntensity::new(vec![GaussianComponent::new(1.0, m.clone(), p.clone())]);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let u = DVector::from_fn(3, |_, _| r.gen_range(-1e-4..1e-4));
        truth = plant.step(&truth, &u);
        let z = &plant.h * &truth + DVector::from_fn(3, |_, _| r.gen_range(-0.05..0.05));

        let pred = phd_predict(&v, &[u.clone()], &plant, &BirthModel::none(), &cfg).unwrap();
        let post = phd_update(&pred, &[z.clone()], &sensor).unwrap();
        let best = post
            .components
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
            .unwrap()
            .clone();
        worst = worst.max((best.weight - 1.0).abs());
        v = GmIntensity::new(vec![best.clone()]);

        m = &plant.a * &m + &plant.b * &u;
        p = &plant.a * &p * plant.a.transpose() + &plant.qn;
        let s = &plant.h * &p * plant.h.transpose() + &plant.rn;
        let k = &p * plant.h.transpose() * s.try_inverse().unwrap();
        m = &m + &k * (&z - &plant.h * &m);
        p = (DMatrix::identity(6, 6) - &k * &plant.h) * &p;

        worst = worst.max((&best.mean - &m).norm() / m.norm().max(1.0));
        worst = worst.max(rel_err(&best.cov, &p));
    }
    worst
}

/// |mass' − (mass_birth + ps·mass + Σ spawn_scale·mass)| for a random
/// intensity with births and two spawn templates.
pub fn phd_mass_identity_error(seed: u64) -> f64 {
    let plant = cw_plant(EARTH_MU, LEO_RADIUS, 10.0, 1e-3, 1e-4, 0.05).unwrap();
    let mut r = rng(seed);
    let comp = |r: &mut ChaCha8Rng, w: f64| {
        GaussianComponent::new(w, DVector::from_fn(6, |_, _| r.gen_range(-1.0..1.0)), rand_spd(r, 6, 0.01))
    };
    let v = GmIntensity::new((0..5).map(|_| { let w = r.gen_range(0.1..2.0); comp(&mut r, w) }).collect());
    let birth = GmIntensity::new((0..3).map(|_| { let w = r.gen_range(0.01..0.5); comp(&mut r, w) }).collect());
    let spawn = vec![
        SpawnTemplate { weight_scale: 0.1, offset: DVector::from_element(6, 0.01), added_cov: DMatrix::identity(6, 6) * 1e-3 },
        SpawnTemplate { weight_scale: 0.25, offset: DVector::zeros(6), added_cov: DMatrix::identity(6, 6) * 1e-2 },
    ];
    let cfg = PhdConfig { ps: 0.93, ..Default::default() };
    let model = BirthModel { birth: birth.clone(), spawn };
    let u = vec![DVector::from_element(3, 1e-4); v.len()];
    let pred = phd_predict(&v, &u, &plant, &model, &cfg).unwrap();
    let expected = birth.mass() + cfg.ps * v.mass() + (0.1 + 0.25) * v.mass();
    (pred.mass() - expected).abs()
}

/// Largest relative error (Euclidean norm) between the analytic state
/// gradient of the mixture objective and central finite differences.
pub fn rfs_gradient_fd_error(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let dim = r.gen_range(1..=4);
        let nf = r.gen_range(1..=4);
        let ng = r.gen_range(1..=4);
        let desired = GmIntensity::new(
            (0..ng)
                .map(|_| {
                    GaussianComponent::new(
                        r.gen_range(0.3..1.5),
                        DVector::from_fn(dim, |_, _| r.gen_range(-1.0..1.0)),
                        rand_spd(&mut r, dim, 0.2),
                    )
                })
                .collect(),
        );
        let fixed = (0..nf).map(|_| rand_spd(&mut r, dim, 0.2)).collect();
        let alpha = r.gen_range(0.0..2.0);
        let obj = RfsObjective::new(desired, DMatrix::identity(1, 1), alpha, fixed).unwrap();
        let weights: Vec<f64> = (0..nf).map(|_| r.gen_range(0.3..1.5)).collect();
        let means = DVector::from_fn(nf * dim, |_, _| r.gen_range(-1.0..1.0));
        let x = StackedState::new(means.clone(), weights, dim).unwrap();
        let (g, _) = obj.state_derivatives(&x).unwrap();
        let h = 1e-5;
        let fd = DVector::from_fn(means.len(), |i, _| {
            let mut p = means.clone();
            let mut m = means.clone();
            p[i] += h;
            m[i] -= h;
            (obj.state_cost(&x.with_means(p)).unwrap() - obj.state_cost(&x.with_means(m)).unwrap()) / (2.0 * h)
        });
        worst = worst.max((&g - &fd).norm() / g.norm().max(1e-12));
    }
    worst
}

/// Random stable sparse-LQR problem with a stabilizing perturbation gain.
pub fn random_lqr_problem(r: &mut ChaCha8Rng, mode: TimeMode) -> (SparseLqrProblem, DMatrix<f64>) {
    let n = r.gen_range(3..=6);
    let m = r.gen_range(1..=3);
    let a = match mode {
        TimeMode::Discrete => rand_schur(r, n, 0.8),
        TimeMode::Continuous => rand_hurwitz(r, n),
    };
    let prob = SparseLqrProblem::new(
        a,
        rand_mat(r, n, m),
        rand_mat(r, n, n),
        rand_spd(r, n, 0.1),
        rand_spd(r, m, 0.5),
        mode,
    )
    .unwrap();
    let f = rand_mat(r, m, n) * 0.05;
    assert!(prob.is_stabilizing(&f));
    (prob, f)
}

/// Relative error of the analytic ∇J(F) against central differences of J.
pub fn lqr_gradient_fd_error(mode: TimeMode, instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (prob, f) = random_lqr_problem(&mut r, mode);
        let g = lqr_evaluate(&f, &prob).unwrap().gradient(&f);
        let h = 1e-6;
        let fd = DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| {
            let mut p = f.clone();
            let mut m = f.clone();
            p[(i, j)] += h;
            m[(i, j)] -= h;
            (lqr_evaluate(&p, &prob).unwrap().j - lqr_evaluate(&m, &prob).unwrap().j) / (2.0 * h)
        });
        worst = worst.max(rel_err(&g, &fd));
    }
    worst
}

pub struct OperatorCheck {
    /// Largest |g_operator − g_grid|.
    pub max_arg_err: f64,
    /// Largest amount by which the operator's objective exceeds the grid minimum.
    pub max_excess: f64,
}

/// Shrinkage and truncation against a scalar grid search (step 1e-4) on
/// random (V, γ, ρ) triples; shrinkage also draws a random weight.
pub fn operator_grid_check(triples: usize, seed: u64) -> (OperatorCheck, OperatorCheck) {
    let mut r = rng(seed);
    let step = 1e-4;
    let mut shrink = OperatorCheck { max_arg_err: 0.0, max_excess: 0.0 };
    let mut trunc = OperatorCheck { max_arg_err: 0.0, max_excess: 0.0 };
    let grid_min = |v: f64, obj: &dyn Fn(f64) -> f64| {
        let mut best = (0.0, obj(0.0));
        let count = (6.0 / step) as i64;
        for k in 0..=count {
            let g = v - 3.0 + k as f64 * step;
            let o = obj(g);
            if o < best.1 {
                best = (g, o);
            }
        }
        best
    };
    let mut done = 0;
    while done < triples {
        let v: f64 = r.gen_range(-2.0..2.0);
        let gamma: f64 = r.gen_range(0.01..1.0);
        let rho: f64 = r.gen_range(0.5..10.0);
        let w: f64 = r.gen_range(0.5..2.0);
        let b = (2.0 * gamma / rho).sqrt();
        if (v.abs() - b).abs() < 1e-3 {
            // near the truncation tie the grid cannot resolve the minimizer
            continue;
        }
        done += 1;
        let one = |x: f64| DMatrix::from_element(1, 1, x);

        let obj_s = |g: f64| gamma * w * g.abs() + 0.5 * rho * (g - v) * (g - v);
        let gs = g_min_shrinkage(&one(v), gamma, rho, &one(w))[(0, 0)];
        let (gg, og) = grid_min(v, &obj_s);
        shrink.max_arg_err = shrink.max_arg_err.max((gs - gg).abs());
        shrink.max_excess = shrink.max_excess.max(obj_s(gs) - og);

        let obj_t = |g: f64| if g == 0.0 { 0.0 } else { gamma } + 0.5 * rho * (g - v) * (g - v);
        let gt = g_min_truncate(&one(v), gamma, rho)[(0, 0)];
        let (gg, og) = grid_min(v, &obj_t);
        trunc.max_arg_err = trunc.max_arg_err.max((gt - gg).abs());
        trunc.max_excess = trunc.max_excess.max(obj_t(gt) - og);
    }
    (shrink, trunc)
}
