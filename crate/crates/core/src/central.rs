//! The classical Markov chain that P_phi induces on the center c_0(1/2 Z_+):
//! transition kernels, Green functions with certified truncation, renewal data,
//! the central Martin kernel, balayage and the 0-2 law.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fusion::{dim_ratio, fuse_labels, quantum_dim, DeformationParams, IrrepLabel, WeightFunctional};

/// Hard cap on the number of Markov steps any certified sum may take.
pub const MAX_STEPS: usize = 200_000;
/// Hard cap on the largest twice-spin a computation may touch.
pub const MAX_LABEL: usize = 1 << 17;

/// A central element x = sum_s x(s) I_s, represented up to a twice-spin cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralElement {
    values: Vec<f64>,
}

impl CentralElement {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("central element needs at least the label 0");
        }
        Ok(CentralElement { values })
    }

    pub fn from_fn(cutoff: IrrepLabel, f: impl FnMut(IrrepLabel) -> f64) -> Self {
        let values = (0..=cutoff.twice_spin()).map(IrrepLabel::from_twice_spin).map(f).collect();
        CentralElement { values }
    }

    pub fn constant(cutoff: IrrepLabel, c: f64) -> Self {
        Self::from_fn(cutoff, |_| c)
    }

    pub fn cutoff(&self) -> IrrepLabel {
        IrrepLabel::from_twice_spin(self.values.len() as u32 - 1)
    }

    pub fn get(&self, s: IrrepLabel) -> Option<f64> {
        self.values.get(s.twice_spin() as usize).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (IrrepLabel, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (IrrepLabel::from_twice_spin(i as u32), v))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// p_phi(s,t) = sum_r lambda_r d_t / (d_r d_s) N^t_{r,s}.
pub fn transition_kernel(phi: &WeightFunctional, s: IrrepLabel, t: IrrepLabel, q: f64) -> f64 {
    phi.iter()
        .filter(|&(r, _)| crate::fusion::fusion_coeff(r, s, t) == 1)
        .map(|(r, lr)| lr * dim_ratio(t, s, q) / quantum_dim(r, q))
        .sum()
}

/// [phi^0, phi^1, ..., phi^n_max] with phi^0 the counit.
pub fn convolution_powers(phi: &WeightFunctional, n_max: usize, q: f64) -> Vec<WeightFunctional> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(WeightFunctional::counit());
    for n in 1..=n_max {
        let next = out[n - 1].product(phi, q);
        out.push(next);
    }
    out
}

/// Cylinder probability p(0,s_1) p(s_1,s_2) ... of a trajectory started at 0.
pub fn path_probability(phi: &WeightFunctional, trajectory: &[IrrepLabel], q: f64) -> Result<f64> {
    if trajectory.is_empty() {
        return invalid("trajectory must contain at least one label");
    }
    let mut prev = IrrepLabel::TRIVIAL;
    let mut prob = 1.0;
    for &s in trajectory {
        prob *= transition_kernel(phi, prev, s, q);
        prev = s;
    }
    Ok(prob)
}

/// lambda = sum_r lambda_r (2r+1) / d_r, the geometric rate in
/// p_{phi^n}(s,t) <= d_t (2s+1) / (d_s (2t+1)) lambda^n.
pub fn decay_rate(phi: &WeightFunctional, q: f64) -> f64 {
    phi.iter().map(|(r, lr)| lr * r.dim() as f64 / quantum_dim(r, q)).sum()
}

/// The prefactor d_t (2s+1) / (d_s (2t+1)) of the geometric domination.
pub fn domination_factor(s: IrrepLabel, t: IrrepLabel, q: f64) -> f64 {
    dim_ratio(t, s, q) * s.dim() as f64 / t.dim() as f64
}

pub(crate) fn check_transient(phi: &WeightFunctional, q: f64) -> Result<f64> {
    if phi.norm() > 1.0 + 1e-12 {
        return invalid(format!("functional norm {} exceeds 1", phi.norm()));
    }
    if phi.support().all(|s| s.twice_spin() == 0) {
        return invalid("functional supported on the trivial label only; the walk never moves");
    }
    let rate = decay_rate(phi, q);
    if rate >= 1.0 {
        return Err(Error::TransienceNotCertified { rate });
    }
    Ok(rate)
}

/// Sparse rows of the central kernel, grown on demand.
#[derive(Debug, Clone)]
pub(crate) struct CentralChain {
    phi: WeightFunctional,
    q: f64,
    reach: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl CentralChain {
    pub(crate) fn new(phi: &WeightFunctional, q: f64) -> Self {
        let reach = phi.max_label().map_or(0, |s| s.twice_spin() as usize);
        CentralChain { phi: phi.clone(), q, reach, rows: Vec::new() }
    }

    /// Largest twice-spin jump of one step.
    pub(crate) fn reach(&self) -> usize {
        self.reach
    }

    pub(crate) fn ensure(&mut self, len: usize) -> Result<()> {
        if len > MAX_LABEL {
            return Err(Error::Resource(format!("twice-spin {len} exceeds the label budget {MAX_LABEL}")));
        }
        let q = self.q;
        while self.rows.len() < len {
            let s = IrrepLabel::from_twice_spin(self.rows.len() as u32);
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (r, lr) in self.phi.iter() {
                let inv_dr = 1.0 / quantum_dim(r, q);
                for t in fuse_labels(r, s) {
                    *row.entry(t.twice_spin() as usize).or_insert(0.0) += lr * inv_dr * dim_ratio(t, s, q);
                }
            }
            self.rows.push(row.into_iter().collect());
        }
        Ok(())
    }

    /// (P v)(s) = sum_t p(s,t) v(t) for a finitely supported v; the result has
    /// length len(v) + reach and is exact.
    pub(crate) fn apply(&mut self, v: &[f64]) -> Result<Vec<f64>> {
        let len = v.len() + self.reach;
        self.ensure(len)?;
        Ok((0..len)
            .map(|s| {
                self.rows[s].iter().filter(|&&(t, _)| t < v.len()).map(|&(t, p)| p * v[t]).sum()
            })
            .collect())
    }

    /// (P v)(s) for the labels whose whole row lies inside v; length shrinks by reach.
    pub(crate) fn apply_within(&mut self, v: &[f64]) -> Result<Vec<f64>> {
        let len = v.len().saturating_sub(self.reach);
        self.ensure(len)?;
        Ok((0..len).map(|s| self.rows[s].iter().map(|&(t, p)| p * v[t]).sum()).collect())
    }

    /// Forward evolution (mu P)(t) = sum_s mu(s) p(s,t); rows must be ensured.
    pub(crate) fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len() + self.reach];
        for (s, &m) in mu.iter().enumerate() {
            if m != 0.0 {
                for &(t, p) in &self.rows[s] {
                    out[t] += m * p;
                }
            }
        }
        out
    }
}

/// One certified row of a central Green table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenRow {
    pub label: IrrepLabel,
    pub value: f64,
    pub tail_bound: f64,
}

/// Truncated Green function g_phi(s,t) = sum_n p_{phi^n}(s,t) for a fixed target t.
///
/// Every row satisfies `0 <= g - value <= tail_bound` and
/// `tail_bound <= tol_tail * min(1, value)` (absolute `tol_tail` for rows that are
/// still zero), so the table is certified both absolutely and relatively.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenTable {
    pub source: WeightFunctional,
    pub target: IrrepLabel,
    pub decay_rate: f64,
    pub steps: usize,
    pub rows: Vec<GreenRow>,
}

impl GreenTable {
    pub fn row(&self, s: IrrepLabel) -> Option<&GreenRow> {
        self.rows.get(s.twice_spin() as usize)
    }

    pub fn value(&self, s: IrrepLabel) -> f64 {
        self.row(s).map_or(f64::NAN, |r| r.value)
    }

    pub fn to_element(&self) -> CentralElement {
        CentralElement { values: self.rows.iter().map(|r| r.value).collect() }
    }

    /// Tail bound after `n` steps for the row `s`.
    pub fn tail_after(decay: f64, n: usize, s: IrrepLabel, t: IrrepLabel, q: f64) -> f64 {
        domination_factor(s, t, q) * decay.powi(n as i32 + 1) / (1.0 - decay)
    }
}

/// Certified central Green function g_phi(s,t), s = 0..=s_max.
pub fn green_central(
    phi: &WeightFunctional,
    t: IrrepLabel,
    s_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<GreenTable> {
    let q = params.q;
    let rate = check_transient(phi, q)?;
    let rows_wanted = s_max.twice_spin() as usize + 1;
    if rows_wanted > MAX_LABEL || t.twice_spin() as usize > MAX_LABEL {
        return Err(Error::Resource(format!("s_max {} exceeds the label budget", s_max.twice_spin())));
    }
    let factors: Vec<f64> =
        (0..rows_wanted).map(|s| domination_factor(IrrepLabel::from_twice_spin(s as u32), t, q)).collect();

    let mut chain = CentralChain::new(phi, q);
    let mut current = vec![0.0; t.twice_spin() as usize + 1];
    current[t.twice_spin() as usize] = 1.0;
    let mut sum = vec![0.0; rows_wanted];

    let mut geometric = rate; // lambda^{n+1} after adding the n-th term
    for n in 0..MAX_STEPS {
        for (acc, v) in sum.iter_mut().zip(&current) {
            *acc += v;
        }
        let scale = geometric / (1.0 - rate);
        let certified = sum.iter().zip(&factors).all(|(&g, &c): (&f64, &f64)| {
            let bound = c * scale;
            if g > 0.0 {
                bound <= params.tol_tail * g.min(1.0)
            } else {
                bound <= params.tol_tail
            }
        });
        if certified {
            let rows = sum
                .iter()
                .zip(&factors)
                .enumerate()
                .map(|(s, (&value, &c))| GreenRow {
                    label: IrrepLabel::from_twice_spin(s as u32),
                    value,
                    tail_bound: c * scale,
                })
                .collect();
            return Ok(GreenTable { source: phi.clone(), target: t, decay_rate: rate, steps: n, rows });
        }
        current = chain.apply(&current)?;
        geometric *= rate;
    }
    Err(Error::Resource(format!("Green sum not certified within {MAX_STEPS} steps")))
}

/// The sequence p(n) = phi(e_n), where e_n = sum_s m^s_{-n/2,-n/2} is the
/// spectral projection of rho for the eigenvalue q^{-n}.
pub fn renewal_sequence(phi: &WeightFunctional, q: f64) -> BTreeMap<i64, f64> {
    let mut p = BTreeMap::new();
    for (s, ls) in phi.iter() {
        let ds = quantum_dim(s, q);
        for n in s.twice_indices() {
            *p.entry(n).or_insert(0.0) += ls * q.powi(n as i32) / ds;
        }
    }
    p
}

/// Exponential tilt delta_phi with phi(rho^{-delta}) = 1 and the drift lambda_phi.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalData {
    pub delta: f64,
    pub lambda_phi: f64,
    pub p: BTreeMap<i64, f64>,
}

/// Upper end of the bracket searched for delta_phi.
pub const DELTA_BRACKET: f64 = 64.0;

/// f(delta) = sum_s lambda_s d_s^{-1} sum_j q^{2j(1+delta)} = phi(rho^{-delta}).
pub fn tilted_mass(phi: &WeightFunctional, delta: f64, q: f64) -> f64 {
    phi.iter()
        .map(|(s, ls)| {
            let inner: f64 = s.twice_indices().map(|j2| q.powf(j2 as f64 * (1.0 + delta))).sum();
            ls * inner / quantum_dim(s, q)
        })
        .sum()
}

/// lambda_phi = sum_s (lambda_s / d_s) sum_j 2j q^{2j(1+delta)}.
pub fn tilted_drift(phi: &WeightFunctional, delta: f64, q: f64) -> f64 {
    phi.iter()
        .map(|(s, ls)| {
            let inner: f64 = s.twice_indices().map(|j2| j2 as f64 * q.powf(j2 as f64 * (1.0 + delta))).sum();
            ls * inner / quantum_dim(s, q)
        })
        .sum()
}

pub fn solve_delta(phi: &WeightFunctional, q: f64) -> Result<RenewalData> {
    if !phi.is_generating() {
        return Err(Error::NotGenerating);
    }
    let norm = phi.norm();
    if norm > 1.0 + 1e-12 {
        return invalid(format!("functional norm {norm} exceeds 1"));
    }
    let delta = if (norm - 1.0).abs() <= 1e-12 {
        0.0
    } else {
        // f is convex with minimum at delta = -1, hence increasing on [0, inf).
        let f = |d: f64| tilted_mass(phi, d, q) - 1.0;
        let (mut lo, mut hi) = (0.0, DELTA_BRACKET);
        if f(hi) < 0.0 {
            return Err(Error::Numerical(format!("delta_phi not bracketed in [0, {DELTA_BRACKET}]")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
        let root = 0.5 * (lo + hi);
        if f(root).abs() > 1e-12 {
            return Err(Error::Numerical(format!("bisection residual {:e} above 1e-12", f(root))));
        }
        root
    };
    let lambda_phi = tilted_drift(phi, delta, q);
    if lambda_phi >= 0.0 {
        return Err(Error::Numerical(format!("drift {lambda_phi} is not negative")));
    }
    Ok(RenewalData { delta, lambda_phi, p: renewal_sequence(phi, q) })
}

/// One row of the Green-asymptotics report at spin s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub label: IrrepLabel,
    /// g(s+1/2, 0) / g(s, 0)
    pub ratio: f64,
    pub ratio_bound: f64,
    /// g(s,0) d_s q^{-2s(1+delta)}
    pub constant: f64,
    pub constant_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub delta: f64,
    pub lambda_phi: f64,
    /// Limit of the ratios, q^{2 + delta}.
    pub ratio_target: f64,
    /// Limit of the normalized constants, -(1 - q^{2+2 delta}) / lambda_phi.
    pub constant_target: f64,
    pub green_steps: usize,
    pub rows: Vec<AsymptoticRow>,
}

pub fn asymptotic_report(
    phi: &WeightFunctional,
    s_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<AsymptoticReport> {
    let q = params.q;
    let renewal = solve_delta(phi, q)?;
    let delta = renewal.delta;
    let table = green_central(phi, IrrepLabel::TRIVIAL, IrrepLabel::from_twice_spin(s_max.twice_spin() + 1), params)?;
    let rows = table
        .rows
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let ratio = b.value / a.value;
            let lo = b.value / (a.value + a.tail_bound);
            let hi = (b.value + b.tail_bound) / a.value;
            let s2 = f64::from(a.label.twice_spin());
            let norm = quantum_dim(a.label, q) * q.powf(-s2 * (1.0 + delta));
            AsymptoticRow {
                label: a.label,
                ratio,
                ratio_bound: (ratio - lo).max(hi - ratio),
                constant: a.value * norm,
                constant_bound: a.tail_bound * norm,
            }
        })
        .collect();
    Ok(AsymptoticReport {
        delta,
        lambda_phi: renewal.lambda_phi,
        ratio_target: q.powf(2.0 + delta),
        constant_target: -(1.0 - q.powf(2.0 + 2.0 * delta)) / renewal.lambda_phi,
        green_steps: table.steps,
        rows,
    })
}

/// Central Martin kernel K(I_t)(s) = g(s,t) / g(s,0) with interval enclosures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralMartin {
    pub target: IrrepLabel,
    pub element: CentralElement,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CentralMartin {
    /// Largest distance from the reported value to either end of its enclosure.
    pub fn uncertainty(&self, s: IrrepLabel) -> f64 {
        let i = s.twice_spin() as usize;
        let v = self.element.values[i];
        (v - self.lower[i]).max(self.upper[i] - v)
    }
}

pub fn martin_central(
    phi: &WeightFunctional,
    t: IrrepLabel,
    s_max: IrrepLabel,
    params: &DeformationParams,
) -> Result<CentralMartin> {
    if !phi.is_generating() {
        return Err(Error::NotGenerating);
    }
    let base = green_central(phi, IrrepLabel::TRIVIAL, s_max, params)?;
    for row in &base.rows {
        if row.value <= row.tail_bound {
            return Err(Error::Undercertified {
                label: row.label.twice_spin(),
                value: row.value,
                bound: row.tail_bound,
            });
        }
    }
    if t == IrrepLabel::TRIVIAL {
        let n = base.rows.len();
        return Ok(CentralMartin {
            target: t,
            element: CentralElement { values: vec![1.0; n] },
            lower: vec![1.0; n],
            upper: vec![1.0; n],
        });
    }
    let numer = green_central(phi, t, s_max, params)?;
    let mut values = Vec::with_capacity(base.rows.len());
    let mut lower = Vec::with_capacity(base.rows.len());
    let mut upper = Vec::with_capacity(base.rows.len());
    for (g0, gt) in base.rows.iter().zip(&numer.rows) {
        values.push(gt.value / g0.value);
        lower.push(gt.value / (g0.value + g0.tail_bound));
        upper.push((gt.value + gt.tail_bound) / g0.value);
    }
    Ok(CentralMartin { target: t, element: CentralElement { values }, lower, upper })
}

/// Applies P_phi n times to a central element. Only labels whose n-step
/// neighbourhood lies inside the cutoff are returned, so the result is exact.
pub fn apply_power(phi: &WeightFunctional, x: &CentralElement, n: usize, q: f64) -> Result<CentralElement> {
    let mut chain = CentralChain::new(phi, q);
    let mut v = x.values.clone();
    for _ in 0..n {
        v = chain.apply_within(&v)?;
        if v.is_empty() {
            return invalid(format!("cutoff {} too small for {n} steps", x.cutoff().twice_spin()));
        }
    }
    Ok(CentralElement { values: v })
}

/// Result of sweeping a superharmonic element onto a finite window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Balayage {
    pub element: CentralElement,
    /// Certified bound on the omitted terms of the series, per label.
    pub tail_bounds: Vec<f64>,
    pub iterations: usize,
}

/// P_{phi,Y}(x) = sum_n [(1 - F_Y) P_phi]^n F_Y x on the cutoff of `x`.
///
/// The iterates w_n(s) = E_s[x(X_n); first visit to Y at time n] are propagated
/// with exact finite support, so labels beyond the cutoff feed back correctly.
pub fn balayage(
    phi: &WeightFunctional,
    window: &[IrrepLabel],
    x: &CentralElement,
    params: &DeformationParams,
) -> Result<Balayage> {
    let q = params.q;
    let rate = check_transient(phi, q)?;
    let cutoff = x.cutoff().twice_spin() as usize;
    if window.is_empty() {
        return invalid("balayage window Y must be nonempty");
    }
    if let Some(y) = window.iter().find(|y| y.twice_spin() as usize > cutoff) {
        return invalid(format!("window label {} lies beyond the cutoff {cutoff}", y.twice_spin()));
    }
    let tol = params.tol_assert;
    if let Some((s, v)) = x.iter().find(|&(_, v)| v < -tol) {
        return invalid(format!("x({}) = {v} is negative", s.twice_spin()));
    }
    let mut chain = CentralChain::new(phi, q);
    let px = chain.apply_within(&x.values)?;
    for (s, (&pv, &xv)) in px.iter().zip(&x.values).enumerate() {
        if pv > xv + tol * xv.abs().max(1.0) {
            return invalid(format!("x is not superharmonic at twice-spin {s}: P x = {pv} > x = {xv}"));
        }
    }

    let in_window = |s: usize| window.iter().any(|y| y.twice_spin() as usize == s);
    let ymax = window.iter().map(|y| y.twice_spin() as usize).max().unwrap_or(0);
    let mut w = vec![0.0; ymax + 1];
    for y in window {
        w[y.twice_spin() as usize] = x.values[y.twice_spin() as usize];
    }
    // Omitted mass is at most sum_y x(y) p_{phi^n}(s, y), summed over n > N.
    let prefactors: Vec<f64> = (0..=cutoff)
        .map(|s| {
            let s = IrrepLabel::from_twice_spin(s as u32);
            window.iter().map(|&y| x.values[y.twice_spin() as usize] * domination_factor(s, y, q)).sum()
        })
        .collect();
    let mut sum = vec![0.0; cutoff + 1];
    let mut geometric = rate;
    for n in 0..MAX_STEPS {
        for (acc, v) in sum.iter_mut().zip(&w) {
            *acc += v;
        }
        let scale = geometric / (1.0 - rate);
        let tails: Vec<f64> = prefactors.iter().map(|c| c * scale).collect();
        if tails.iter().all(|&b| b <= params.tol_tail) {
            return Ok(Balayage { element: CentralElement { values: sum }, tail_bounds: tails, iterations: n });
        }
        let mut next = chain.apply(&w)?;
        for (s, v) in next.iter_mut().enumerate() {
            if in_window(s) {
                *v = 0.0;
            }
        }
        w = next;
        geometric *= rate;
    }
    Err(Error::Resource(format!("balayage series not certified within {MAX_STEPS} iterations")))
}

/// Truncated 0-2 law estimate sup_{s <= s_max} sum_t |p_{phi^{n+k}}(s,t) - p_{phi^n}(s,t)|.
///
/// The supremum over all s is out of reach; this is a lower bound for the
/// central norm of P^{n+k} - P^n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroTwoEstimate {
    pub n: usize,
    pub k: usize,
    pub value: f64,
    /// Row at which the supremum is attained.
    pub argmax: IrrepLabel,
    pub is_lower_bound: bool,
}

/// Estimates for every n = 0..=n_max in one pass.
pub fn zero_two_profile(
    phi: &WeightFunctional,
    n_max: usize,
    k: usize,
    s_max: IrrepLabel,
    q: f64,
) -> Result<Vec<ZeroTwoEstimate>> {
    let mut chain = CentralChain::new(phi, q);
    let rows = s_max.twice_spin() as usize + 1;
    let steps = n_max + k;
    chain.ensure(rows + steps * chain.reach() + 1)?;
    let chain = chain;

    let per_row: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|s| {
            let mut dists: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
            let mut mu = vec![0.0; s + 1];
            mu[s] = 1.0;
            dists.push(mu);
            for j in 0..steps {
                let next = chain.push_forward(&dists[j]);
                dists.push(next);
            }
            (0..=n_max)
                .map(|n| {
                    let (a, b) = (&dists[n + k], &dists[n]);
                    (0..a.len().max(b.len()))
                        .map(|t| (a.get(t).unwrap_or(&0.0) - b.get(t).unwrap_or(&0.0)).abs())
                        .sum()
                })
                .collect()
        })
        .collect();

    Ok((0..=n_max)
        .map(|n| {
            let (argmax, value) = per_row
                .iter()
                .enumerate()
                .map(|(s, v)| (s, v[n]))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            ZeroTwoEstimate {
                n,
                k,
                value,
                argmax: IrrepLabel::from_twice_spin(argmax as u32),
                is_lower_bound: true,
            }
        })
        .collect())
}

pub fn zero_two_estimate(
    phi: &WeightFunctional,
    n: usize,
    k: usize,
    s_max: IrrepLabel,
    q: f64,
) -> Result<ZeroTwoEstimate> {
    let profile = zero_two_profile(phi, n, k, s_max, q)?;
    Ok(profile[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const Q: f64 = 0.5;

    fn l(n: u32) -> IrrepLabel {
        IrrepLabel::from_twice_spin(n)
    }

    fn half() -> WeightFunctional {
        WeightFunctional::state(l(1))
    }

    fn params() -> DeformationParams {
        DeformationParams::new(Q).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_relative_eq!(transition_kernel(&half(), l(1), l(0), Q), 0.16, max_relative = 1e-14);
        assert_relative_eq!(transition_kernel(&half(), l(1), l(2), Q), 0.84, max_relative = 1e-14);
        let mixed = WeightFunctional::new([(l(1), 0.3), (l(4), 0.7)]).unwrap();
        for t in 0..6 {
            assert_relative_eq!(transition_kernel(&mixed, l(0), l(t), Q), mixed.weight(l(t)), max_relative = 1e-14);
        }
    }

    #[test]
    fn convolution_power_examples() {
        let powers = convolution_powers(&half(), 6, Q);
        assert_eq!(powers[0], WeightFunctional::counit());
        assert_relative_eq!(powers[2].weight(l(0)), 0.16, max_relative = 1e-14);
        assert_relative_eq!(powers[2].weight(l(2)), 0.84, max_relative = 1e-14);
        for (n, p) in powers.iter().enumerate() {
            assert!(p.support().all(|s| s.twice_spin() as usize % 2 == n % 2));
            assert!(p.max_label().unwrap().twice_spin() as usize <= n);
        }
    }

    #[test]
    fn path_probability_examples() {
        assert_relative_eq!(path_probability(&half(), &[l(1)], Q).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(path_probability(&half(), &[l(1), l(0)], Q).unwrap(), 0.16, max_relative = 1e-14);
        assert_eq!(path_probability(&half(), &[l(1), l(1)], Q).unwrap(), 0.0);
        assert_eq!(path_probability(&half(), &[l(1), l(2), l(5)], Q).unwrap(), 0.0);
        assert!(path_probability(&half(), &[], Q).is_err());
    }

    #[test]
    fn decay_rate_examples() {
        assert_relative_eq!(decay_rate(&half(), Q), 0.8, max_relative = 1e-14);
        assert_relative_eq!(decay_rate(&WeightFunctional::counit(), Q), 1.0, max_relative = 1e-15);
        let mixed = WeightFunctional::new([(l(2), 0.5), (l(4), 0.5)]).unwrap();
        let expected = 0.5 * (3.0 / 5.25) + 0.5 * (5.0 / 21.3125);
        assert_relative_eq!(decay_rate(&mixed, Q), expected, max_relative = 1e-14);
    }

    #[test]
    fn green_rejects_non_transient_input() {
        let p = params();
        let err = green_central(&WeightFunctional::counit(), l(0), l(4), &p).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let heavy = WeightFunctional::new([(l(1), 0.7), (l(2), 0.7)]).unwrap();
        assert!(green_central(&heavy, l(0), l(4), &p).is_err());
    }

    #[test]
    fn green_rows_are_certified() {
        let p = params();
        let table = green_central(&half(), l(0), l(20), &p).unwrap();
        assert_eq!(table.rows.len(), 21);
        for row in &table.rows {
            assert!(row.value >= 0.0);
            assert!(row.tail_bound <= p.tol_tail * row.value.min(1.0));
        }
    }

    #[test]
    fn green_satisfies_renewal_equation() {
        let p = params();
        let phi = WeightFunctional::new([(l(1), 0.6), (l(2), 0.4)]).unwrap();
        for t in [0, 1, 3] {
            let table = green_central(&phi, l(t), l(30), &p).unwrap();
            for s in 0..28u32 {
                let rhs: f64 = (0..=30u32)
                    .map(|r| transition_kernel(&phi, l(s), l(r), Q) * table.value(l(r)))
                    .sum::<f64>()
                    + f64::from(s == t);
                let slack = table.row(l(s)).unwrap().tail_bound
                    + (s.saturating_sub(2)..=s + 2).map(|r| table.rows[r as usize].tail_bound).sum::<f64>()
                    + 1e-14 * table.value(l(s));
                assert!((table.value(l(s)) - rhs).abs() <= slack, "s = {s}, t = {t}");
            }
        }
    }

    #[test]
    fn green_identity_via_fusion() {
        let p = params();
        let phi = half();
        let base = green_central(&phi, l(0), l(24), &p).unwrap();
        for t in [1u32, 2, 3] {
            let direct = green_central(&phi, l(t), l(20), &p).unwrap();
            let dt = quantum_dim(l(t), Q);
            for s in 0..=20u32 {
                let via: f64 = fuse_labels(l(s), l(t))
                    .into_iter()
                    .map(|r| base.value(r) * dt * dim_ratio(r, l(s), Q))
                    .sum();
                assert_relative_eq!(direct.value(l(s)), via, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn renewal_sequence_examples() {
        let p = renewal_sequence(&half(), Q);
        assert_relative_eq!(p[&-1], 0.8, max_relative = 1e-14);
        assert_relative_eq!(p[&1], 0.2, max_relative = 1e-14);
        let mixed = WeightFunctional::new([(l(1), 0.2), (l(2), 0.3), (l(5), 0.1)]).unwrap();
        let total: f64 = renewal_sequence(&mixed, Q).values().sum();
        assert_relative_eq!(total, mixed.norm(), max_relative = 1e-13);
    }

    #[test]
    fn kernel_inverts_from_renewal_sequence() {
        let phi = WeightFunctional::new([(l(1), 0.5), (l(2), 0.25), (l(4), 0.25)]).unwrap();
        let p = renewal_sequence(&phi, Q);
        let at = |n: i64| p.get(&n).copied().unwrap_or(0.0);
        for s2 in 0..=20u32 {
            let s = l(s2);
            let n = i64::from(s2);
            let rhs = (Q.powi(s2 as i32) * at(-n) - Q.powi(s2 as i32 + 2) * at(-n - 2)) / quantum_dim(s, Q);
            let lhs = transition_kernel(&phi, s, l(0), Q);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300), "s2 = {s2}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn delta_examples() {
        let r = solve_delta(&half(), Q).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_relative_eq!(r.lambda_phi, -0.6, max_relative = 1e-14);

        let mixed = WeightFunctional::new([(l(1), 0.5), (l(2), 0.5)]).unwrap();
        assert_eq!(solve_delta(&mixed, Q).unwrap().delta, 0.0);

        // 0.5 phi_{1/2}: q^{1+delta} + q^{-1-delta} = 5.
        let sub = half().scaled(0.5).unwrap();
        let r = solve_delta(&sub, Q).unwrap();
        let y = (5.0 - 21f64.sqrt()) / 2.0;
        let closed = y.ln() / Q.ln() - 1.0;
        assert_relative_eq!(r.delta, closed, max_relative = 1e-10);
        assert!((tilted_mass(&sub, r.delta, Q) - 1.0).abs() <= 1e-12);
        assert!(r.lambda_phi < 0.0);

        assert!(matches!(solve_delta(&WeightFunctional::state(l(2)), Q), Err(Error::NotGenerating)));
    }

    #[test]
    fn delta_bracket_failure_is_reported() {
        let tiny = WeightFunctional::new([(l(1), 1e-300)]).unwrap();
        assert!(matches!(solve_delta(&tiny, Q), Err(Error::Numerical(_))));
    }

    #[test]
    fn asymptotics_for_fundamental_state() {
        let report = asymptotic_report(&half(), l(60), &params()).unwrap();
        assert_relative_eq!(report.ratio_target, 0.25, max_relative = 1e-15);
        assert_relative_eq!(report.constant_target, 1.25, max_relative = 1e-14);
        let last = report.rows.last().unwrap();
        assert!((last.ratio - 0.25).abs() <= 5e-3);
        assert!((last.constant - 1.25).abs() <= 1e-2 * 1.25);
    }

    #[test]
    fn martin_central_trivial_target_is_one() {
        let k = martin_central(&half(), l(0), l(20), &params()).unwrap();
        assert!(k.element.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn martin_central_converges_to_squared_dimension() {
        let k = martin_central(&half(), l(1), l(60), &params()).unwrap();
        let v = k.element.get(l(60)).unwrap();
        assert_relative_eq!(v, 6.25, max_relative = 1e-6);
        assert!(k.uncertainty(l(60)) < 1e-6);
    }

    #[test]
    fn martin_central_needs_generating_walk() {
        let err = martin_central(&WeightFunctional::state(l(2)), l(2), l(10), &params()).unwrap_err();
        assert_eq!(err, Error::NotGenerating);
    }

    #[test]
    fn balayage_of_unit_is_hitting_probability() {
        let p = params();
        let one = CentralElement::constant(l(80), 1.0);
        let window = [l(0), l(1)];
        let b = balayage(&half(), &window, &one, &p).unwrap();
        assert_eq!(b.element.get(l(0)), Some(1.0));
        assert_eq!(b.element.get(l(1)), Some(1.0));
        for (s, v) in b.element.iter() {
            assert!(v <= 1.0 + 1e-12, "twice-spin {s}: {v}");
        }
        // Nearest-neighbour walk: reaching 1/2 from s = 1 needs one downward step eventually.
        assert!(b.element.get(l(2)).unwrap() > 0.0);
    }

    #[test]
    fn balayage_rejects_non_superharmonic_input() {
        let p = params();
        let bump = CentralElement::from_fn(l(20), |s| if s.twice_spin() == 3 { 0.0 } else { 1.0 });
        assert!(matches!(balayage(&half(), &[l(0)], &bump, &p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn apply_power_shrinks_cutoff() {
        let one = CentralElement::constant(l(20), 1.0);
        let out = apply_power(&half(), &one, 5, Q).unwrap();
        assert_eq!(out.cutoff(), l(15));
        for (_, v) in out.iter() {
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
        assert!(apply_power(&half(), &one, 21, Q).is_err());
    }

    #[test]
    fn zero_two_parity_gives_two() {
        let est = zero_two_profile(&half(), 10, 1, l(20), Q).unwrap();
        for e in &est[1..] {
            assert!((e.value - 2.0).abs() <= 1e-12);
            assert!(e.is_lower_bound);
        }
    }

    #[test]
    fn zero_two_shift_two_decreases() {
        let est = zero_two_profile(&half(), 60, 2, l(30), Q).unwrap();
        for n in 0..=58 {
            assert!(est[n + 2].value <= est[n].value + 1e-9, "n = {n}");
        }
        assert!(est[60].value < est[2].value);
    }

    #[test]
    fn chain_is_stochastic_for_states() {
        let phi = WeightFunctional::new([(l(1), 0.2), (l(3), 0.5), (l(6), 0.3)]).unwrap();
        let mut chain = CentralChain::new(&phi, Q);
        chain.ensure(21).unwrap();
        for s in 0..=20 {
            let total: f64 = chain.rows[s].iter().map(|r| r.1).sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}
