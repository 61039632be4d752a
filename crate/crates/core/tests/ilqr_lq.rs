mod common;

#[test]
fn lq_instance_matches_riccati_recursion() {
    let check = common::lq_ilqr_check(12, 30, 51);
    assert!(check.max_gain_err < 1e-8, "gain error {:e}", check.max_gain_err);
    assert!(check.iterations <= 2, "{} iterations", check.iterations);
    assert!(check.non_increasing);
}
