//! Fusion ring of SU_q(2): spin labels, q-numbers, quantum dimensions and the
//! commutative algebra of q-tracial functionals.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Irreducible corepresentation class, stored as twice the spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IrrepLabel(u32);

impl IrrepLabel {
    pub const TRIVIAL: IrrepLabel = IrrepLabel(0);
    pub const FUNDAMENTAL: IrrepLabel = IrrepLabel(1);

    pub const fn from_twice_spin(twice_spin: u32) -> Self {
        IrrepLabel(twice_spin)
    }

    pub const fn twice_spin(self) -> u32 {
        self.0
    }

    pub fn spin(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Classical dimension 2s + 1.
    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub const fn is_half_odd(self) -> bool {
        self.0 % 2 == 1
    }

    /// Basis indices i = -s..=s of H_s in ascending order, as twice-integers.
    pub fn twice_indices(self) -> impl Iterator<Item = i64> + Clone {
        let n = i64::from(self.0);
        (0..=n).map(move |p| 2 * p - n)
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl From<u32> for IrrepLabel {
    fn from(twice_spin: u32) -> Self {
        IrrepLabel(twice_spin)
    }
}

/// Deformation parameter together with the two tolerances used throughout:
/// `tol_tail` bounds certified truncation errors, `tol_assert` bounds identity residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub q: f64,
    pub tol_tail: f64,
    pub tol_assert: f64,
}

impl DeformationParams {
    pub const DEFAULT_TOL_TAIL: f64 = 1e-8;
    pub const DEFAULT_TOL_ASSERT: f64 = 1e-9;

    pub fn new(q: f64) -> Result<Self> {
        Self::with_tolerances(q, Self::DEFAULT_TOL_TAIL, Self::DEFAULT_TOL_ASSERT)
    }

    pub fn with_tolerances(q: f64, tol_tail: f64, tol_assert: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return invalid(format!("deformation parameter q = {q} must lie in (0, 1)"));
        }
        if !(tol_tail > 0.0 && tol_tail.is_finite()) {
            return invalid(format!("tail tolerance {tol_tail} must be positive"));
        }
        if !(tol_assert > 0.0 && tol_assert.is_finite()) {
            return invalid(format!("assertion tolerance {tol_assert} must be positive"));
        }
        Ok(DeformationParams { q, tol_tail, tol_assert })
    }

    pub fn with_tol_tail(mut self, tol_tail: f64) -> Result<Self> {
        self = Self::with_tolerances(self.q, tol_tail, self.tol_assert)?;
        Ok(self)
    }
}

/// The q-number [n]_q = (q^n - q^{-n}) / (q - q^{-1}).
///
/// Evaluated as q^{1-n} (1 - q^{2n}) / (1 - q^2), which avoids cancellation for
/// large n; at q = 1 this degenerates to n.
pub fn q_number(n: i64, q: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if q == 1.0 {
        return n as f64;
    }
    if n < 0 {
        return -q_number(-n, q);
    }
    let n_f = n as f64;
    q.powf(1.0 - n_f) * (1.0 - q.powf(2.0 * n_f)) / (1.0 - q * q)
}

/// Quantum dimension d_s = [2s + 1]_q.
pub fn quantum_dim(s: IrrepLabel, q: f64) -> f64 {
    q_number(i64::from(s.twice_spin()) + 1, q)
}

/// d_a / d_b evaluated without forming either dimension.
pub fn dim_ratio(a: IrrepLabel, b: IrrepLabel, q: f64) -> f64 {
    let a2 = f64::from(a.twice_spin());
    let b2 = f64::from(b.twice_spin());
    q.powf(b2 - a2) * (1.0 - q.powf(2.0 * (a2 + 1.0))) / (1.0 - q.powf(2.0 * (b2 + 1.0)))
}

/// (a; r)_n = prod_{i<n} (1 - a r^i).
pub fn q_pochhammer(a: f64, r: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    let mut ar = a;
    for _ in 0..n {
        acc *= 1.0 - ar;
        ar *= r;
    }
    acc
}

/// The bracket [n over m]_r = (r;r)_n / ((r;r)_m (r;r)_{n-m}).
pub fn q_binomial(n: i64, m: i64, base: f64) -> Result<f64> {
    if n < 0 || m < 0 || m > n {
        return invalid(format!("q-binomial needs 0 <= m <= n, got n = {n}, m = {m}"));
    }
    // Product form: prod_{i=1}^{m} (1 - r^{n-m+i}) / (1 - r^i).
    let (n, m) = (n as usize, m.min(n - m) as usize);
    let mut acc = 1.0;
    for i in 1..=m {
        acc *= (1.0 - base.powi((n - m + i) as i32)) / (1.0 - base.powi(i as i32));
    }
    Ok(acc)
}

/// Labels t with U^t contained in U^r x U^s: |r - s| <= t <= r + s in unit spin steps.
pub fn fuse_labels(r: IrrepLabel, s: IrrepLabel) -> Vec<IrrepLabel> {
    let (r2, s2) = (r.twice_spin(), s.twice_spin());
    let lo = r2.abs_diff(s2);
    (lo..=r2 + s2).step_by(2).map(IrrepLabel).collect()
}

/// Multiplicity N^t_{r,s}; always 0 or 1 for SU_q(2).
pub fn fusion_coeff(r: IrrepLabel, s: IrrepLabel, t: IrrepLabel) -> u32 {
    let (r2, s2, t2) = (r.twice_spin(), s.twice_spin(), t.twice_spin());
    let admissible = t2 >= r2.abs_diff(s2) && t2 <= r2 + s2 && (r2 + s2 - t2) % 2 == 0;
    u32::from(admissible)
}

/// A positive combination phi = sum_s lambda_s phi_s of q-traces
/// phi_s = d_s^{-1} Tr(pi_s(.) rho^{-1}), with finite support.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightFunctional {
    weights: BTreeMap<IrrepLabel, f64>,
}

impl WeightFunctional {
    /// Builds a functional from (label, weight) pairs; repeated labels are summed
    /// and zero weights dropped.
    pub fn new<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (IrrepLabel, f64)>,
    {
        let mut weights = BTreeMap::new();
        for (label, w) in pairs {
            if !w.is_finite() || w < 0.0 {
                return invalid(format!("weight {w} at twice-spin {} must be finite and >= 0", label.0));
            }
            *weights.entry(label).or_insert(0.0) += w;
        }
        weights.retain(|_, w| *w > 0.0);
        Ok(WeightFunctional { weights })
    }

    /// The q-tracial state phi_s.
    pub fn state(s: IrrepLabel) -> Self {
        WeightFunctional { weights: BTreeMap::from([(s, 1.0)]) }
    }

    /// The counit, phi_0, unit of the algebra.
    pub fn counit() -> Self {
        Self::state(IrrepLabel::TRIVIAL)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn weight(&self, s: IrrepLabel) -> f64 {
        self.weights.get(&s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (IrrepLabel, f64)> + '_ {
        self.weights.iter().map(|(&s, &w)| (s, w))
    }

    pub fn support(&self) -> impl Iterator<Item = IrrepLabel> + '_ {
        self.weights.keys().copied()
    }

    pub fn max_label(&self) -> Option<IrrepLabel> {
        self.weights.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    /// phi(1) = sum of weights.
    pub fn norm(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn is_state(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    /// Product in the fusion ring: phi_s phi_t = sum_w d_w / (d_s d_t) N^w_{s,t} phi_w.
    pub fn product(&self, other: &WeightFunctional, q: f64) -> WeightFunctional {
        let mut weights = BTreeMap::new();
        for (s, ls) in self.iter() {
            for (t, lt) in other.iter() {
                let ds = quantum_dim(s, q);
                for w in fuse_labels(s, t) {
                    let coeff = dim_ratio(w, t, q) / ds;
                    *weights.entry(w).or_insert(0.0) += ls * lt * coeff;
                }
            }
        }
        weights.retain(|_, w: &mut f64| *w > 0.0);
        WeightFunctional { weights }
    }

    pub fn scaled(&self, factor: f64) -> Result<WeightFunctional> {
        Self::new(self.iter().map(|(s, w)| (s, w * factor)))
    }

    /// The conjugation phi -> phi-check. Every SU_q(2) label is self-conjugate, so
    /// this is the identity on weights.
    pub fn check_dual(&self) -> WeightFunctional {
        self.clone()
    }

    /// Generating iff some half-odd spin carries positive weight.
    pub fn is_generating(&self) -> bool {
        self.weights.iter().any(|(s, &w)| s.is_half_odd() && w > 0.0)
    }
}

/// Fusion-ring product of two functionals.
pub fn weight_product(phi: &WeightFunctional, psi: &WeightFunctional, q: f64) -> WeightFunctional {
    phi.product(psi, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const Q: f64 = 0.5;

    fn l(n: u32) -> IrrepLabel {
        IrrepLabel::from_twice_spin(n)
    }

    #[test]
    fn q_number_examples() {
        assert_eq!(q_number(0, Q), 0.0);
        for q in [0.1, 0.5, 0.9] {
            assert_relative_eq!(q_number(1, q), 1.0, max_relative = 1e-15);
        }
        assert_relative_eq!(q_number(2, Q), 2.5, max_relative = 1e-15);
        assert_relative_eq!(q_number(3, Q), 5.25, max_relative = 1e-15);
        assert_relative_eq!(q_number(-3, Q), -5.25, max_relative = 1e-15);
    }

    #[test]
    fn q_binomial_examples() {
        assert_eq!(q_binomial(0, 0, 0.25).unwrap(), 1.0);
        assert_relative_eq!(q_binomial(2, 1, 0.25).unwrap(), 1.25, max_relative = 1e-15);
        assert_relative_eq!(q_binomial(2, 2, 0.25).unwrap(), 1.0, max_relative = 1e-15);
        assert!(q_binomial(2, 3, 0.25).is_err());
        assert!(q_binomial(2, -1, 0.25).is_err());
    }

    #[test]
    fn q_binomial_matches_pochhammer_ratio() {
        let r = 0.3;
        for n in 0..12usize {
            for m in 0..=n {
                let direct = q_pochhammer(r, r, n) / (q_pochhammer(r, r, m) * q_pochhammer(r, r, n - m));
                assert_relative_eq!(q_binomial(n as i64, m as i64, r).unwrap(), direct, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn fusion_examples() {
        assert_eq!(fuse_labels(l(1), l(1)), vec![l(0), l(2)]);
        assert_eq!(fuse_labels(l(0), l(5)), vec![l(5)]);
        assert_eq!(fuse_labels(l(1), l(2)), vec![l(1), l(3)]);
        assert_eq!(fusion_coeff(l(1), l(2), l(3)), 1);
        assert_eq!(fusion_coeff(l(1), l(2), l(2)), 0);
        assert_eq!(fusion_coeff(l(1), l(2), l(5)), 0);
    }

    #[test]
    fn weight_product_examples() {
        let half = WeightFunctional::state(l(1));
        let sq = half.product(&half, Q);
        assert_relative_eq!(sq.weight(l(0)), 0.16, max_relative = 1e-14);
        assert_relative_eq!(sq.weight(l(2)), 0.84, max_relative = 1e-14);

        let mixed = WeightFunctional::new([(l(1), 0.3), (l(4), 0.2)]).unwrap();
        let unit = WeightFunctional::counit();
        let p = unit.product(&mixed, Q);
        for (s, w) in mixed.iter() {
            assert_relative_eq!(p.weight(s), w, max_relative = 1e-15);
        }
        assert_eq!(p.support().count(), 2);
    }

    #[test]
    fn check_dual_is_identity() {
        let half = WeightFunctional::state(l(1));
        assert_eq!(half.check_dual(), half);
        assert!(WeightFunctional::zero().check_dual().is_zero());
        let mixed = WeightFunctional::new([(l(2), 0.5), (l(4), 0.5)]).unwrap();
        assert_eq!(mixed.check_dual(), mixed);
    }

    #[test]
    fn generating_criterion() {
        assert!(WeightFunctional::state(l(1)).is_generating());
        assert!(!WeightFunctional::state(l(2)).is_generating());
        assert!(!WeightFunctional::counit().is_generating());
        assert!(WeightFunctional::new([(l(2), 0.9), (l(3), 0.1)]).unwrap().is_generating());
    }

    #[test]
    fn rejects_negative_weights_and_merges_duplicates() {
        assert!(WeightFunctional::new([(l(1), -0.1)]).is_err());
        assert!(WeightFunctional::new([(l(1), f64::NAN)]).is_err());
        let merged = WeightFunctional::new([(l(1), 0.6), (l(1), 0.4)]).unwrap();
        assert_eq!(merged, WeightFunctional::state(l(1)));
    }

    #[test]
    fn params_validation() {
        assert!(DeformationParams::new(0.0).is_err());
        assert!(DeformationParams::new(1.0).is_err());
        assert!(DeformationParams::new(f64::NAN).is_err());
        assert!(DeformationParams::with_tolerances(0.5, 0.0, 1e-9).is_err());
        assert!(DeformationParams::with_tolerances(0.5, 1e-8, -1.0).is_err());
        assert!(DeformationParams::new(0.5).is_ok());
    }

    #[test]
    fn dimension_multiplicativity() {
        for q in [0.3, 0.5, 0.8] {
            for r2 in 0..=20 {
                for s2 in 0..=20 {
                    let fused = fuse_labels(l(r2), l(s2));
                    let qsum: f64 = fused.iter().map(|&t| quantum_dim(t, q)).sum();
                    let prod = quantum_dim(l(r2), q) * quantum_dim(l(s2), q);
                    assert_relative_eq!(qsum, prod, max_relative = 1e-10);
                    let csum: usize = fused.iter().map(|t| t.dim()).sum();
                    assert_eq!(csum, l(r2).dim() * l(s2).dim());
                }
            }
        }
    }

    #[test]
    fn dim_ratio_agrees_with_dims() {
        for a in 0..30 {
            for b in 0..30 {
                let direct = quantum_dim(l(a), 0.4) / quantum_dim(l(b), 0.4);
                assert_relative_eq!(dim_ratio(l(a), l(b), 0.4), direct, max_relative = 1e-12);
            }
        }
    }

    fn arb_functional() -> impl Strategy<Value = WeightFunctional> {
        prop::collection::vec((0u32..6, 0.0f64..1.0), 1..4).prop_map(|pairs| {
            let total: f64 = pairs.iter().map(|p| p.1).sum::<f64>().max(1e-3);
            WeightFunctional::new(pairs.into_iter().map(|(s, w)| (l(s), w / total))).unwrap()
        })
    }

    fn assert_close(a: &WeightFunctional, b: &WeightFunctional, tol: f64) {
        let labels: std::collections::BTreeSet<_> = a.support().chain(b.support()).collect();
        for s in labels {
            assert!((a.weight(s) - b.weight(s)).abs() <= tol, "label {s}: {} vs {}", a.weight(s), b.weight(s));
        }
    }

    proptest! {
        #[test]
        fn product_is_commutative_and_associative(a in arb_functional(), b in arb_functional(), c in arb_functional(), q in 0.2f64..0.9) {
            assert_close(&a.product(&b, q), &b.product(&a, q), 1e-12);
            let left = a.product(&b, q).product(&c, q);
            let right = a.product(&b.product(&c, q), q);
            assert_close(&left, &right, 1e-12);
        }

        #[test]
        fn product_norm_is_multiplicative(a in arb_functional(), b in arb_functional(), q in 0.2f64..0.9) {
            let p = a.product(&b, q);
            prop_assert!((p.norm() - a.norm() * b.norm()).abs() <= 1e-12);
        }

        #[test]
        fn q_number_inversion_symmetry(n in 0i64..=30, q in 0.2f64..0.95) {
            let a = q_number(n, q);
            let b = q_number(n, 1.0 / q);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
