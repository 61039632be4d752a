mod common;

#[test]
fn shrinkage_and_truncation_match_grid_search() {
    let (shrink, trunc) = common::operator_grid_check(100, 41);
    assert!(shrink.max_arg_err <= 1e-4, "shrinkage argmin off by {:e}", shrink.max_arg_err);
    assert!(shrink.max_excess <= 1e-12, "shrinkage objective above grid by {:e}", shrink.max_excess);
    assert!(trunc.max_arg_err <= 1e-4, "truncation argmin off by {:e}", trunc.max_arg_err);
    assert!(trunc.max_excess <= 1e-12, "truncation objective above grid by {:e}", trunc.max_excess);
}
