use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use swarm_rfs_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(srfs_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn config_errors_map_to_status_codes() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new(r#"{"n_agents": 3, "bogus": 1}"#).unwrap();
    unsafe {
        assert_eq!(srfs_config_from_json(bad.as_ptr(), &mut cfg), SrfsStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("bogus"));
        assert_eq!(srfs_config_from_json(ptr::null(), &mut cfg), SrfsStatus::NullPointer);

        let missing = CString::new("/nonexistent/cfg.json").unwrap();
        assert_eq!(srfs_config_load(missing.as_ptr(), &mut cfg), SrfsStatus::Io);

        assert_eq!(srfs_config_default(&mut cfg), SrfsStatus::Ok);
        assert_eq!(last_error(), "");
        let bad_gammas = [0.5, 0.1];
        assert_eq!(srfs_config_set_gammas(cfg, bad_gammas.as_ptr(), 2), SrfsStatus::Config);
        let mut json = ptr::null_mut();
        assert_eq!(srfs_config_to_json(cfg, &mut json), SrfsStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        srfs_string_free(json);
        srfs_config_free(cfg);

        let round = CString::new(text).unwrap();
        let mut again = ptr::null_mut();
        assert_eq!(srfs_config_from_json(round.as_ptr(), &mut again), SrfsStatus::Ok);
        srfs_config_free(again);
    }
}

#[test]
fn small_scenario_through_handles() {
    let json = CString::new(r#"{"n_agents": 3, "horizon": 15, "gamma_list": [0.0, 1e-3], "ilqr": {"max_iter": 10}}"#).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(srfs_config_from_json(json.as_ptr(), &mut cfg), SrfsStatus::Ok);
        assert_eq!(srfs_config_set_seed(cfg, 9), SrfsStatus::Ok);
        assert_eq!(srfs_config_set_loop_mode(cfg, SrfsLoopMode::TrueState), SrfsStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(srfs_run(cfg, &mut res), SrfsStatus::Ok, "{}", last_error());
        srfs_config_free(cfg);

        let mut base = std::mem::zeroed::<SrfsBaseline>();
        assert_eq!(srfs_result_baseline(res, &mut base), SrfsStatus::Ok);
        assert_eq!(base.ilqr_nnz, 3 * 3 * 3 * 6);
        assert_eq!(srfs_result_gamma_count(res), 2);

        let (mut rows, mut cols) = (0, 0);
        assert_eq!(srfs_result_gain_shape(res, &mut rows, &mut cols), SrfsStatus::Ok);
        assert_eq!((rows, cols), (9, 18));
        let mut buf = vec![0.0; rows * cols];
        for i in 0..2 {
            let mut g = std::mem::zeroed::<SrfsGammaSummary>();
            assert_eq!(srfs_result_gamma(res, i, &mut g), SrfsStatus::Ok);
            assert!(g.ok, "{}", last_error());
            assert_eq!(srfs_result_gain(res, i, buf.as_mut_ptr(), buf.len()), SrfsStatus::Ok);
            assert_eq!(buf.iter().filter(|v| **v != 0.0).count(), g.nnz);
        }
        let mut g = std::mem::zeroed::<SrfsGammaSummary>();
        assert_eq!(srfs_result_gamma(res, 5, &mut g), SrfsStatus::InvalidArgument);
        assert_eq!(srfs_result_gain(res, 0, buf.as_mut_ptr(), 3), SrfsStatus::InvalidArgument);
        assert_eq!(srfs_result_baseline_gain(res, buf.as_mut_ptr(), buf.len()), SrfsStatus::Ok);

        let mut summary = ptr::null_mut();
        assert_eq!(srfs_result_summary_json(res, &mut summary), SrfsStatus::Ok);
        assert!(CStr::from_ptr(summary).to_str().unwrap().starts_with('{'));
        srfs_string_free(summary);

        assert_eq!(srfs_result_export(res, out_dir.as_ptr()), SrfsStatus::Ok);
        assert!(dir.path().join("summary.json").exists());
        srfs_result_free(res);
    }
}

#[test]
fn matrix_equations_and_gaussian() {
    let a = [-1.0, 0.0, 1.0, -2.0];
    let q = [1.0, 0.0, 0.0, 1.0];
    let mut p = [0.0; 4];
    unsafe {
        assert_eq!(srfs_solve_lyapunov(2, a.as_ptr(), q.as_ptr(), SrfsTimeMode::Continuous, p.as_mut_ptr()), SrfsStatus::Ok);
        // residual of AᵀP + PA + Q, column-major
        let at = |i: usize, j: usize| a[i + 2 * j];
        let pv = |i: usize, j: usize| p[i + 2 * j];
        for i in 0..2 {
            for j in 0..2 {
                let r: f64 = (0..2).map(|k| at(k, i) * pv(k, j) + pv(i, k) * at(k, j)).sum::<f64>() + q[i + 2 * j];
                assert!(r.abs() < 1e-12);
            }
        }
        let unstable = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(srfs_solve_lyapunov(2, unstable.as_ptr(), q.as_ptr(), SrfsTimeMode::Continuous, p.as_mut_ptr()), SrfsStatus::Solver);

        let (m, n, c) = ([2.0], [3.0], [10.0]);
        let mut x = [0.0];
        assert_eq!(srfs_solve_sylvester(1, 1, m.as_ptr(), n.as_ptr(), c.as_ptr(), x.as_mut_ptr()), SrfsStatus::Ok);
        assert!((x[0] - 2.0).abs() < 1e-14);

        let (ac, bc) = ([0.0, 0.0, 1.0, 0.0], [0.0, 1.0]);
        let (mut ad, mut bd) = ([0.0; 4], [0.0; 2]);
        assert_eq!(srfs_zoh_discretize(2, 1, ac.as_ptr(), bc.as_ptr(), 0.5, ad.as_mut_ptr(), bd.as_mut_ptr()), SrfsStatus::Ok);
        assert!((ad[2] - 0.5).abs() < 1e-14 && (bd[0] - 0.125).abs() < 1e-14 && (bd[1] - 0.5).abs() < 1e-14);

        let mut v = 0.0;
        let zero = [0.0];
        let one = [1.0];
        assert_eq!(srfs_eval_gaussian(1, zero.as_ptr(), zero.as_ptr(), one.as_ptr(), &mut v), SrfsStatus::Ok);
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(srfs_eval_gaussian(1, zero.as_ptr(), zero.as_ptr(), [-1.0].as_ptr(), &mut v), SrfsStatus::Solver);
    }
}

#[test]
fn lqr_problem_handle() {
    // discrete double integrator, column-major
    let a = [1.0, 0.0, 0.1, 1.0];
    let b = [0.005, 0.1];
    let i2 = [1.0, 0.0, 0.0, 1.0];
    let r = [1.0];
    unsafe {
        let mut prob = ptr::null_mut();
        let st = srfs_lqr_problem_new(2, 1, 2, a.as_ptr(), b.as_ptr(), i2.as_ptr(), i2.as_ptr(), r.as_ptr(), SrfsTimeMode::Discrete, &mut prob);
        assert_eq!(st, SrfsStatus::Ok);
        let mut fc = [0.0; 2];
        assert_eq!(srfs_lqr_centralized_gain(prob, fc.as_mut_ptr(), 2), SrfsStatus::Ok);
        let mut jc = 0.0;
        assert_eq!(srfs_lqr_cost(prob, fc.as_ptr(), &mut jc), SrfsStatus::Ok);
        let mut j_other = 0.0;
        let other = [fc[0] * 1.1, fc[1]];
        assert_eq!(srfs_lqr_cost(prob, other.as_ptr(), &mut j_other), SrfsStatus::Ok);
        assert!(jc < j_other);

        let mut f = [0.0; 2];
        let mut nnz = 0;
        assert_eq!(srfs_lqr_sparsify(prob, 0.0, fc.as_ptr(), f.as_mut_ptr(), 2, &mut nnz), SrfsStatus::Ok);
        assert_eq!(nnz, 2);
        assert!((f[0] - fc[0]).abs() + (f[1] - fc[1]).abs() < 1e-6);
        let zero = [0.0, 0.0];
        assert_eq!(srfs_lqr_sparsify(prob, 1.0, zero.as_ptr(), f.as_mut_ptr(), 2, ptr::null_mut()), SrfsStatus::Solver);
        srfs_lqr_problem_free(prob);

        let mut bad = ptr::null_mut();
        let st = srfs_lqr_problem_new(2, 1, 2, a.as_ptr(), b.as_ptr(), i2.as_ptr(), i2.as_ptr(), ptr::null(), SrfsTimeMode::Discrete, &mut bad);
        assert_eq!(st, SrfsStatus::NullPointer);
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/swarm_rfs.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["srfs_run", "srfs_last_error", "SrfsStatus", "SrfsConfig", "srfs_lqr_sparsify"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
