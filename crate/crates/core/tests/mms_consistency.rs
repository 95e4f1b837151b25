mod common;

use common::{initial_interpolation_slopes, max_time_derivative_mismatch};
use nlgs::mms::MmsCase;

#[test]
fn time_derivatives_match_finite_differences() {
    for case in MmsCase::registered() {
        let worst = max_time_derivative_mismatch(&case, 1e-5);
        assert!(worst <= 1e-8, "{}: {worst:e}", case.name);
    }
}

#[test]
fn initial_interpolation_error_is_second_order() {
    for case in MmsCase::registered() {
        let (su, sv) = initial_interpolation_slopes(&case);
        assert!((su - 2.0).abs() <= 0.1, "{} u slope {su}", case.name);
        assert!((sv - 2.0).abs() <= 0.1, "{} v slope {sv}", case.name);
    }
}
