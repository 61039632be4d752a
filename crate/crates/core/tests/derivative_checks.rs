mod common;

use swarm_rfs::sparselqr::TimeMode;

#[test]
fn mixture_cost_gradient_matches_finite_differences() {
    let err = common::rfs_gradient_fd_error(50, 31);
    assert!(err < 1e-5, "relative error {err:e}");
}

#[test]
fn discrete_lqr_gradient_matches_finite_differences() {
    let err = common::lqr_gradient_fd_error(TimeMode::Discrete, 20, 32);
    assert!(err < 1e-5, "relative error {err:e}");
}

#[test]
fn continuous_lqr_gradient_matches_finite_differences() {
    let err = common::lqr_gradient_fd_error(TimeMode::Continuous, 20, 33);
    assert!(err < 1e-5, "relative error {err:e}");
}
