use nalgebra::DMatrix;
use proptest::prelude::*;

use suq2_walk::blocks::{adjoint_action, cg_isometry, haar_pairing, BlockElement, Generator};
use suq2_walk::central::{
    convolution_powers, decay_rate, domination_factor, green_central, transition_kernel, CentralElement,
};
use suq2_walk::fusion::{fuse_labels, fusion_coeff, quantum_dim, q_number};
use suq2_walk::martin::{boundary_polynomial, markov_step, tilde_polynomial};
use suq2_walk::{DeformationParams, IrrepLabel, WeightFunctional};

fn l(n: u32) -> IrrepLabel {
    IrrepLabel::from_twice_spin(n)
}

fn q_strategy() -> impl Strategy<Value = f64> {
    0.2f64..0.9
}

prop_compose! {
    fn state()(weights in prop::collection::vec(0.0f64..1.0, 1..4), offset in 0u32..2) -> WeightFunctional {
        let total: f64 = weights.iter().sum::<f64>() + 1e-3;
        let mut pairs: Vec<(IrrepLabel, f64)> = weights
            .iter()
            .enumerate()
            .map(|(i, w)| (l(i as u32 + 1 + offset), w / total))
            .collect();
        let used: f64 = pairs.iter().map(|p| p.1).sum();
        pairs.push((l(1), 1.0 - used));
        WeightFunctional::new(pairs).unwrap()
    }
}

prop_compose! {
    fn block_element(max2: u32)(seed in prop::collection::vec(-1.0f64..1.0, 64), top in 0..=max2) -> BlockElement {
        let mut it = seed.into_iter().cycle();
        let mut x = BlockElement::new();
        for s2 in 0..=top {
            let n = l(s2).dim();
            x.insert(l(s2), DMatrix::from_fn(n, n, |_, _| it.next().unwrap())).unwrap();
        }
        x
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, rng_algorithm: prop::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn fusion_is_symmetric_and_dimension_preserving(r in 0u32..20, s in 0u32..20, q in q_strategy()) {
        let (r, s) = (l(r), l(s));
        prop_assert_eq!(fuse_labels(r, s), fuse_labels(s, r));
        let dims: f64 = fuse_labels(r, s).iter().map(|&t| quantum_dim(t, q)).sum();
        prop_assert!((dims - quantum_dim(r, q) * quantum_dim(s, q)).abs() <= 1e-11 * dims);
        let classical: usize = fuse_labels(r, s).iter().map(|t| t.dim()).sum();
        prop_assert_eq!(classical, r.dim() * s.dim());
        for t in fuse_labels(r, s) {
            prop_assert_eq!(fusion_coeff(r, s, t), 1);
        }
    }

    #[test]
    fn q_numbers_are_symmetric(n in -30i64..30, q in q_strategy()) {
        let a = q_number(n, q);
        let b = q_number(n, 1.0 / q);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!((q_number(-n, q) + a).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn kernel_rows_are_probabilities(phi in state(), s in 0u32..30, q in q_strategy()) {
        let total: f64 = (0..=s + 8).map(|t| transition_kernel(&phi, l(s), l(t), q)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for t in 0..=s + 8 {
            prop_assert!(transition_kernel(&phi, l(s), l(t), q) >= 0.0);
        }
    }

    #[test]
    fn convolution_powers_stay_states(phi in state(), q in q_strategy()) {
        for power in convolution_powers(&phi, 12, q) {
            prop_assert!((power.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn domination_bound_holds(phi in state(), n in 0usize..25, s in 0u32..16, t in 0u32..16, q in q_strategy()) {
        let powers = convolution_powers(&phi, n, q);
        let p = transition_kernel(&powers[n], l(s), l(t), q);
        let bound = domination_factor(l(s), l(t), q) * decay_rate(&phi, q).powi(n as i32);
        prop_assert!(p <= bound * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn green_solves_the_poisson_equation(phi in state(), q in 0.3f64..0.8) {
        let params = DeformationParams::new(q).unwrap();
        let g = green_central(&phi, l(0), l(20), &params).unwrap();
        for s in 0..=12u32 {
            let pg: f64 = (0..=20).map(|t| transition_kernel(&phi, l(s), l(t), q) * g.value(l(t))).sum();
            let expected = g.value(l(s)) - if s == 0 { 1.0 } else { 0.0 };
            prop_assert!((pg - expected).abs() <= 1e-7 * g.value(l(0)), "s2 = {}: {} vs {}", s, pg, expected);
        }
    }

    #[test]
    fn cg_columns_are_orthonormal_intertwiners(r in 0u32..12, t in 0u32..12, pick in 0u32..12, q in q_strategy()) {
        let w = l(r.abs_diff(t) + 2 * (pick % (r.min(t) + 1)));
        let iso = cg_isometry(l(r), l(t), w, q).unwrap();
        prop_assert!(iso.orthonormality_residual() <= 1e-12);
        prop_assert!(iso.intertwining_residual(q) <= 1e-9);
    }

    #[test]
    fn markov_step_is_unital_and_positive(phi in state(), v in prop::collection::vec(-1.0f64..1.0, 5), q in q_strategy()) {
        let params = DeformationParams::new(q).unwrap();
        let one = BlockElement::identity(l(12));
        let stepped = markov_step(&phi, &one, &params).unwrap();
        let reach = phi.max_label().unwrap().twice_spin();
        for s2 in 0..=12 - reach {
            let block = stepped.block_or_zero(l(s2));
            prop_assert!((block - DMatrix::identity(s2 as usize + 1, s2 as usize + 1)).amax() <= 1e-12);
        }
        let vec = nalgebra::DVector::from_column_slice(&v);
        let mut x = BlockElement::new();
        x.insert(l(4), &vec * vec.transpose()).unwrap();
        let px = markov_step(&phi, &x, &params).unwrap();
        for (_, block) in px.iter() {
            let sym = (block + block.transpose()) * 0.5;
            let min = sym.symmetric_eigenvalues().min();
            prop_assert!(min >= -1e-12 * vec.norm_squared());
        }
    }

    #[test]
    fn markov_step_is_self_dual(phi in state(), x in block_element(5), y in block_element(5), q in q_strategy()) {
        let params = DeformationParams::new(q).unwrap();
        let lhs = haar_pairing(&markov_step(&phi, &x, &params).unwrap(), &y, q);
        let rhs = haar_pairing(&x, &markov_step(&phi, &y, &params).unwrap(), q);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn markov_step_commutes_with_the_adjoint_action(phi in state(), x in block_element(4), q in 0.3f64..0.8) {
        let params = DeformationParams::new(q).unwrap();
        let cutoff = l(4 + phi.max_label().unwrap().twice_spin());
        for g in Generator::ALL {
            let a = adjoint_action(g, &markov_step(&phi, &x, &params).unwrap(), q);
            let b = markov_step(&phi, &adjoint_action(g, &x, q), &params).unwrap();
            let diff = a.sub(&b).truncated(cutoff).sup_norm();
            prop_assert!(diff <= 1e-9 * a.sup_norm().max(1.0));
        }
    }

    #[test]
    fn tilde_polynomials_match_recurrence(n in 0usize..9, q in 0.3f64..0.9) {
        let p = boundary_polynomial(n, q * q, q).unwrap();
        let pt = tilde_polynomial(n, q).unwrap();
        let scale = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (a, b) in p.coeffs().iter().zip(pt.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn central_elements_round_trip(values in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let x = CentralElement::from_values(values.clone()).unwrap();
        prop_assert_eq!(x.values(), &values[..]);
        prop_assert_eq!(x.cutoff().twice_spin() as usize, values.len() - 1);
    }
}
