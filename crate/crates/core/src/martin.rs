//! The Markov operator P_phi = (phi ⊗ ι)Δ̂ on block elements, block Green
//! functions, the Martin kernel and the boundary polynomials p_n.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::{entry_norm, haar_pairing, op_norm, BlockElement, CgTable, CompactCG, Matrix};
use crate::central::{check_transient, domination_factor, green_central, solve_delta, GreenTable, MAX_STEPS};
use crate::error::{invalid, Error, Result};
use crate::fusion::{fuse_labels, q_binomial, q_pochhammer, quantum_dim, DeformationParams, IrrepLabel, WeightFunctional};

/// Largest block (twice-spin) the block iteration is allowed to touch.
pub const MAX_BLOCK_LABEL: u32 = 1024;

/// P_phi acting blockwise, with a shared Clebsch-Gordan cache.
#[derive(Debug)]
pub struct MarkovOperator {
    phi: WeightFunctional,
    q: f64,
    reach: u32,
    // (r, lambda_r, d_r^{-1} q^{-2i} for i = -r..=r)
    weights: Vec<(IrrepLabel, f64, Vec<f64>)>,
    table: CgTable,
}

impl MarkovOperator {
    pub fn new(phi: &WeightFunctional, q: f64) -> Self {
        let weights = phi
            .iter()
            .map(|(r, lr)| {
                let inv_dr = 1.0 / quantum_dim(r, q);
                let omega = r.twice_indices().map(|i2| inv_dr * q.powi(-i2 as i32)).collect();
                (r, lr, omega)
            })
            .collect();
        MarkovOperator {
            phi: phi.clone(),
            q,
            reach: phi.max_label().map_or(0, IrrepLabel::twice_spin),
            weights,
            table: CgTable::new(q),
        }
    }

    pub fn phi(&self) -> &WeightFunctional {
        &self.phi
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Largest twice-spin jump of one step.
    pub fn reach(&self) -> u32 {
        self.reach
    }

    pub fn apply(&self, x: &BlockElement) -> Result<BlockElement> {
        self.apply_up_to(x, IrrepLabel::from_twice_spin(u32::MAX))
    }

    /// P_phi(x) restricted to the blocks t <= limit.
    pub fn apply_up_to(&self, x: &BlockElement, limit: IrrepLabel) -> Result<BlockElement> {
        let mut targets = BTreeSet::new();
        for (r, _, _) in &self.weights {
            for w in x.labels() {
                targets.extend(fuse_labels(*r, w).into_iter().filter(|&t| t <= limit));
            }
        }
        if let Some(&t) = targets.iter().next_back() {
            if t.twice_spin() > MAX_BLOCK_LABEL {
                return Err(Error::Resource(format!(
                    "block twice-spin {} exceeds the block budget {MAX_BLOCK_LABEL}",
                    t.twice_spin()
                )));
            }
        }
        let blocks: Vec<(IrrepLabel, Matrix)> = targets
            .into_par_iter()
            .map(|t| self.block(x, t).map(|m| (t, m)))
            .collect::<Result<_>>()?;
        BlockElement::from_blocks(blocks)
    }

    /// Output block t = sum_r lambda_r sum_w (phi_r ⊗ ι)(V x_w V^T).
    fn block(&self, x: &BlockElement, t: IrrepLabel) -> Result<Matrix> {
        let nt = t.dim();
        let mut out = Matrix::zeros(nt, nt);
        for (r, lr, omega) in &self.weights {
            for w in fuse_labels(*r, t) {
                if let Some(xw) = x.get(w) {
                    let iso = self.table.get(*r, t, w)?;
                    partial_trace_into(&mut out, &iso, xw, omega, *lr);
                }
            }
        }
        Ok(out)
    }
}

/// out += lr * sum_a omega_a (V x V^T)[(a, .), (a, .)], using that V maps the
/// weight-m vector into pairs (a, b) of matching weight only.
fn partial_trace_into(out: &mut Matrix, iso: &CompactCG, x: &Matrix, omega: &[f64], lr: f64) {
    let nt = iso.t.dim();
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(nt);
    for (a, &wa) in omega.iter().enumerate() {
        entries.clear();
        for b in 0..nt {
            let (m, u) = iso.entry(a, b);
            if u != 0.0 {
                entries.push((b, m, u));
            }
        }
        let scale = lr * wa;
        for &(b, m, u) in &entries {
            let su = scale * u;
            for &(b2, m2, u2) in &entries {
                out[(b, b2)] += su * u2 * x[(m, m2)];
            }
        }
    }
}

pub fn markov_step(phi: &WeightFunctional, x: &BlockElement, params: &DeformationParams) -> Result<BlockElement> {
    MarkovOperator::new(phi, params.q).apply(x)
}

/// Truncated potential sum_{n<=N} P_phi^n(x) on blocks t <= r_max.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGreen {
    pub element: BlockElement,
    /// Operator-norm bound on the omitted tail, per block.
    pub tail_bounds: BTreeMap<IrrepLabel, f64>,
    pub steps: usize,
    pub decay_rate: f64,
}

/// Certified block Green function: every block t <= r_max has tail bound <= tol_tail.
pub fn green_block(
    phi: &WeightFunctional,
    x: &BlockElement,
    r_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<BlockGreen> {
    let op = MarkovOperator::new(phi, params.q);
    green_block_with(&op, x, r_max, params, |_| params.tol_tail)
}

/// Green sum with a per-block tolerance. The tail of block t is bounded by
/// sum_w ‖x_w‖ d_w (2t+1) / (d_t (2w+1)) lambda^{N+1} / (1 - lambda), since the
/// compression of P_phi^n to B(H_w) -> B(H_t) is positive with value
/// p_{phi^n}(t,w) I_t at the unit.
pub(crate) fn green_block_with(
    op: &MarkovOperator,
    x: &BlockElement,
    r_max: IrrepLabel,
    params: &DeformationParams,
    tolerance: impl Fn(IrrepLabel) -> f64,
) -> Result<BlockGreen> {
    let q = params.q;
    let rate = check_transient(op.phi(), q)?;
    let norms: Vec<(IrrepLabel, f64)> = x.iter().map(|(w, m)| (w, op_norm(m))).filter(|&(_, n)| n > 0.0).collect();
    let labels: Vec<IrrepLabel> = (0..=r_max.twice_spin()).map(IrrepLabel::from_twice_spin).collect();
    let weights: Vec<f64> =
        labels.iter().map(|&t| norms.iter().map(|&(w, n)| n * domination_factor(t, w, q)).sum()).collect();

    let tail = |s: f64, n: usize| s * rate.powi(n as i32 + 1) / (1.0 - rate);
    let mut steps = 0usize;
    for (&t, &s) in labels.iter().zip(&weights) {
        let tol = tolerance(t);
        if s == 0.0 || tail(s, steps) <= tol {
            continue;
        }
        let mut n = ((tol * (1.0 - rate) / s).ln() / rate.ln()).ceil().max(1.0) as usize - 1;
        while tail(s, n) > tol {
            n += 1;
            if n > MAX_STEPS {
                return Err(Error::Resource(format!("block Green sum needs more than {MAX_STEPS} steps")));
            }
        }
        steps = steps.max(n);
    }

    let reach = u64::from(op.reach());
    let r_max2 = u64::from(r_max.twice_spin());
    // Blocks above r_max + (N - n) reach cannot return to the reported range.
    let limit = |n: usize| {
        let l = r_max2 + (steps - n) as u64 * reach;
        IrrepLabel::from_twice_spin(l.min(u64::from(u32::MAX)) as u32)
    };
    let x_top = u64::from(x.max_label().map_or(0, IrrepLabel::twice_spin));
    let peak = (0..=steps).map(|n| (x_top + n as u64 * reach).min(r_max2 + (steps - n) as u64 * reach)).max();
    if let Some(peak) = peak.filter(|&p| p > u64::from(MAX_BLOCK_LABEL)) {
        return Err(Error::Resource(format!(
            "{steps} steps reach block twice-spin {peak}, above the block budget {MAX_BLOCK_LABEL}"
        )));
    }

    let mut sum = BlockElement::new();
    for &t in &labels {
        sum.insert(t, Matrix::zeros(t.dim(), t.dim()))?;
    }
    let mut current = x.truncated(limit(0));
    for n in 0..=steps {
        if n > 0 {
            current = op.apply_up_to(&current, limit(n))?;
        }
        if current.is_empty() {
            break;
        }
        for (t, m) in current.iter().filter(|(t, _)| *t <= r_max) {
            sum.add_assign_block(t, m);
        }
    }
    let tail_bounds = labels.iter().zip(&weights).map(|(&t, &s)| (t, tail(s, steps))).collect();
    Ok(BlockGreen { element: sum, tail_bounds, steps, decay_rate: rate })
}

/// K_phi(x) = G_phi(x) G_phi(I_0)^{-1} on blocks t <= r_max.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMartin {
    pub element: BlockElement,
    /// Operator-norm enclosure radius per block.
    pub uncertainty: BTreeMap<IrrepLabel, f64>,
    pub green_steps: usize,
    pub base: GreenTable,
}

pub fn martin_apply(
    phi: &WeightFunctional,
    x: &BlockElement,
    r_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<BlockMartin> {
    let op = MarkovOperator::new(phi, params.q);
    martin_apply_with(&op, x, r_max, params)
}

pub(crate) fn martin_apply_with(
    op: &MarkovOperator,
    x: &BlockElement,
    r_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<BlockMartin> {
    if !op.phi().is_generating() {
        return Err(Error::NotGenerating);
    }
    let base = green_central(op.phi(), IrrepLabel::TRIVIAL, r_max, params)?;
    for row in &base.rows {
        if row.value <= row.tail_bound {
            return Err(Error::Undercertified { label: row.label.twice_spin(), value: row.value, bound: row.tail_bound });
        }
    }
    let green = green_block_with(op, x, r_max, params, |t| params.tol_tail * base.value(t).min(1.0))?;
    let mut element = BlockElement::new();
    let mut uncertainty = BTreeMap::new();
    for row in &base.rows {
        let t = row.label;
        let a = green.element.block_or_zero(t);
        let (g, b) = (row.value, row.tail_bound);
        let tau = green.tail_bounds[&t];
        uncertainty.insert(t, tau / g + op_norm(&a) * b / (g * g));
        element.insert(t, a / g)?;
    }
    Ok(BlockMartin { element, uncertainty, green_steps: green.steps, base })
}

/// F((α*)^n) = q^{-n} / d_{n/2} · m^{n/2}_{-n/2,-n/2}.
pub fn fourier_alpha_power(n: u32, q: f64) -> BlockElement {
    let s = IrrepLabel::from_twice_spin(n);
    let mut m = Matrix::zeros(s.dim(), s.dim());
    m[(0, 0)] = q.powi(-(n as i32)) / quantum_dim(s, q);
    BlockElement::from_blocks([(s, m)]).expect("shape matches the label")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolynomialKind {
    Recurrence,
    Tilde,
}

/// Real polynomial stored by ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialQ {
    coeffs: Vec<f64>,
    kind: PolynomialKind,
}

impl PolynomialQ {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn kind(&self) -> PolynomialKind {
        self.kind
    }

    /// Index of the last nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// p_0 = 1, p_{n+1}(x) = c x p_n(x) - c^{-1} (x - 1) p_n(q^{-2} x).
pub fn boundary_polynomial(n: usize, c: f64, q: f64) -> Result<PolynomialQ> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("boundary polynomial needs 0 < c < 1, got {c}"));
    }
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0, 1), got {q}"));
    }
    let q_inv2 = q.powi(-2);
    let mut p = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; p.len() + 1];
        let mut scale = 1.0;
        for (k, &a) in p.iter().enumerate() {
            let b = a * scale / c;
            next[k + 1] += c * a - b;
            next[k] += b;
            scale *= q_inv2;
        }
        p = next;
    }
    Ok(PolynomialQ { coeffs: p, kind: PolynomialKind::Recurrence })
}

/// p_n(x) evaluated through the recurrence itself, on the grid x q^{-2k}.
///
/// The monomial coefficients of p_n grow like q^{-n^2} and alternate in sign, so
/// Horner evaluation loses all accuracy near x = 1 for small q; the recurrence
/// does not, and returns p_n(1) = c^n exactly.
pub fn boundary_polynomial_value(n: usize, c: f64, q: f64, x: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("boundary polynomial needs 0 < c < 1, got {c}"));
    }
    let q_inv2 = q.powi(-2);
    // values[k] = p_m(x q^{-2k}) for k = 0..=n-m
    let mut values = vec![1.0; n + 1];
    for m in 0..n {
        let mut y = x;
        for k in 0..n - m {
            values[k] = c * y * values[k] - (y - 1.0) * values[k + 1] / c;
            y *= q_inv2;
        }
        values.pop();
    }
    Ok(values[0])
}

/// p̃_n(x) = sum_{m=0}^{n} q^{-2(2m-n)} [n over m]_{q^2} q^{-2m(n-m)} x^{n-m} (x; q^{-2})_m.
pub fn tilde_polynomial(n: usize, q: f64) -> Result<PolynomialQ> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0, 1), got {q}"));
    }
    let mut total = vec![0.0; n + 1];
    for m in 0..=n {
        // (x; q^{-2})_m = prod_{k<m} (1 - q^{-2k} x)
        let mut poch = vec![1.0];
        for k in 0..m {
            let r = q.powi(-2 * k as i32);
            let mut next = vec![0.0; poch.len() + 1];
            for (i, &a) in poch.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= r * a;
            }
            poch = next;
        }
        let (n_i, m_i) = (n as i32, m as i32);
        let coeff = q.powi(-2 * (2 * m_i - n_i)) * q_binomial(n as i64, m as i64, q * q)? * q.powi(-2 * m_i * (n_i - m_i));
        for (i, a) in poch.iter().enumerate() {
            total[n - m + i] += coeff * a;
        }
    }
    Ok(PolynomialQ { coeffs: total, kind: PolynomialKind::Tilde })
}

/// (-1)^n q^{-n(n-1)} c^{-n} (c^2; q^2)_n.
pub fn leading_coefficient_law(n: usize, c: f64, q: f64) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let n_i = n as i32;
    sign * q.powi(-n_i * (n_i - 1)) * c.powi(-n_i) * q_pochhammer(c * c, q * q, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    pub label: IrrepLabel,
    /// ‖K_phi F((α*)^n)|_r - diag p_n(q^{2r-2j})‖ in operator norm.
    pub deviation: f64,
    /// The same difference in largest-entry norm.
    pub entry_deviation: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub n: usize,
    pub c: f64,
    pub green_steps: usize,
    pub rows: Vec<DeviationRow>,
}

impl DeviationReport {
    pub fn row(&self, r: IrrepLabel) -> Option<&DeviationRow> {
        self.rows.iter().find(|row| row.label == r)
    }
}

/// Compares K_phi F((α*)^n) with p_n(λ̃^{-1} k^2) on the blocks r_lo..=r_hi.
pub fn boundary_deviation(
    phi: &WeightFunctional,
    n: usize,
    r_lo: IrrepLabel,
    r_hi: IrrepLabel,
    params: &DeformationParams,
) -> Result<DeviationReport> {
    if !phi.is_state() {
        return invalid(format!("boundary comparison needs a state, got norm {}", phi.norm()));
    }
    if r_lo > r_hi {
        return invalid(format!("empty block range {}..={}", r_lo.twice_spin(), r_hi.twice_spin()));
    }
    let q = params.q;
    let renewal = solve_delta(phi, q)?;
    let c = q.powf(2.0 + renewal.delta);
    let x = fourier_alpha_power(n as u32, q);
    let kernel = martin_apply(phi, &x, r_hi, params)?;
    let rows = (r_lo.twice_spin()..=r_hi.twice_spin())
        .map(IrrepLabel::from_twice_spin)
        .map(|r| {
            let r2 = r.twice_spin() as i32;
            let diag: Vec<f64> = (0..r.dim())
                .map(|pos| boundary_polynomial_value(n, c, q, q.powi(2 * r2 - 2 * pos as i32)))
                .collect::<Result<_>>()?;
            let target = Matrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
            let diff = kernel.element.block_or_zero(r) - target;
            Ok(DeviationRow {
                label: r,
                deviation: op_norm(&diff),
                entry_deviation: entry_norm(&diff),
                uncertainty: kernel.uncertainty[&r],
            })
        })
        .collect::<Result<_>>()?;
    Ok(DeviationReport { n, c, green_steps: kernel.green_steps, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub label: IrrepLabel,
    pub gap: f64,
    pub uncertainty: f64,
}

/// ‖K_phi(x)|_r - K_psi(x)|_r‖ for r_lo <= r <= r_hi.
pub fn martin_gap(
    phi: &WeightFunctional,
    psi: &WeightFunctional,
    x: &BlockElement,
    r_lo: IrrepLabel,
    r_hi: IrrepLabel,
    params: &DeformationParams,
) -> Result<Vec<GapRow>> {
    let a = martin_apply(phi, x, r_hi, params)?;
    let b = martin_apply(psi, x, r_hi, params)?;
    Ok((r_lo.twice_spin()..=r_hi.twice_spin())
        .map(IrrepLabel::from_twice_spin)
        .map(|r| GapRow {
            label: r,
            gap: op_norm(&(a.element.block_or_zero(r) - b.element.block_or_zero(r))),
            uncertainty: a.uncertainty[&r] + b.uncertainty[&r],
        })
        .collect())
}

/// |(P_phi x, y) - (x, P_phi y)| for the Haar pairing; phi is its own conjugate here.
pub fn duality_residual(
    phi: &WeightFunctional,
    x: &BlockElement,
    y: &BlockElement,
    params: &DeformationParams,
) -> Result<f64> {
    let op = MarkovOperator::new(phi, params.q);
    let lhs = haar_pairing(&op.apply(x)?, y, params.q);
    let rhs = haar_pairing(x, &op.apply(y)?, params.q);
    Ok((lhs - rhs).abs())
}

/// max_{t <= r_max} ‖P_phi(x)_t - x_t‖, with x extended by `beyond` · I above its largest block.
pub fn harmonic_residual(
    phi: &WeightFunctional,
    x: &BlockElement,
    beyond: f64,
    r_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<f64> {
    let op = MarkovOperator::new(phi, params.q);
    let top = r_max.twice_spin() + op.reach();
    let cutoff = x.max_label();
    let mut extended = x.truncated(IrrepLabel::from_twice_spin(top));
    for s in (0..=top).map(IrrepLabel::from_twice_spin) {
        if cutoff.is_none_or(|c| s > c) {
            extended.insert(s, Matrix::identity(s.dim(), s.dim()) * beyond)?;
        }
    }
    let image = op.apply_up_to(&extended, r_max)?;
    Ok((0..=r_max.twice_spin())
        .map(IrrepLabel::from_twice_spin)
        .map(|t| op_norm(&(image.block_or_zero(t) - extended.block_or_zero(t))))
        .fold(0.0, f64::max))
}
