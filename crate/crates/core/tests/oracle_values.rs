//! Reference values computed independently in 40-digit arithmetic and frozen here.
#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;

use suq2_walk::blocks::cg_isometry;
use suq2_walk::central::{green_central, solve_delta};
use suq2_walk::{DeformationParams, IrrepLabel, WeightFunctional};

fn l(n: u32) -> IrrepLabel {
    IrrepLabel::from_twice_spin(n)
}

#[test]
fn green_function_of_the_fundamental_walk() {
    let expected = [1.25, 0.25, 0.059523809523809524, 0.014705882352941176, 0.0036656891495601173, 0.00091575091575091575];
    let params = DeformationParams::with_tolerances(0.5, 1e-12, 1e-9).unwrap();
    let g = green_central(&WeightFunctional::state(l(1)), l(0), l(5), &params).unwrap();
    for (s, e) in expected.iter().enumerate() {
        assert_relative_eq!(g.value(l(s as u32)), *e, max_relative = 1e-11);
    }
}

#[test]
fn green_function_of_a_mixed_walk() {
    let expected = [
        1.0777562061875524,
        0.11692858061490362,
        0.038583831760201146,
        0.0083180246074243080,
        0.0022119146309011580,
        0.00053674216367225081,
    ];
    let phi = WeightFunctional::new([(l(1), 0.5), (l(2), 0.5)]).unwrap();
    let params = DeformationParams::with_tolerances(0.5, 1e-12, 1e-9).unwrap();
    let g = green_central(&phi, l(0), l(5), &params).unwrap();
    for (s, e) in expected.iter().enumerate() {
        assert_relative_eq!(g.value(l(s as u32)), *e, max_relative = 1e-11);
    }
}

#[test]
fn tilt_of_a_sub_stochastic_walk() {
    let phi = WeightFunctional::new([(l(1), 0.5)]).unwrap();
    let r = solve_delta(&phi, 0.5).unwrap();
    let closed = ((5.0 - 21f64.sqrt()) / 2.0).ln() / 0.5f64.ln() - 1.0;
    assert_relative_eq!(r.delta, closed, max_relative = 1e-12);
    assert_relative_eq!(r.delta, 1.2604134892, max_relative = 1e-9);
}

#[test]
fn clebsch_gordan_columns() {
    // H_1 ⊗ H_2 ⊃ H_1 at q = 0.3; nonzero entries (row, column, value), up to a column sign.
    let expected = [
        (2, 0, 0.95010186595419536),
        (6, 0, -0.29868428384374664),
        (10, 0, 0.089967454643912102),
        (3, 1, 0.99561427947915546),
        (7, 1, -0.093204993050106565),
        (11, 1, 0.0080644756637811592),
        (4, 2, 0.99963838493235669),
        (8, 2, -0.026881585545937197),
        (12, 2, 0.00069262426028060842),
    ];
    let iso = cg_isometry(l(2), l(4), l(2), 0.3).unwrap();
    let nonzero = iso.v.iter().filter(|v| v.abs() > 1e-15).count();
    assert_eq!(nonzero, expected.len());
    for (row, col, value) in expected {
        let sign = iso.v[(2 + col, col)].signum();
        assert!((sign * iso.v[(row, col)] - value).abs() <= 1e-13, "({row},{col}): {}", iso.v[(row, col)]);
    }
}
