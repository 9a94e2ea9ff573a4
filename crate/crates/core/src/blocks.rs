//! Finite-dimensional representation theory of U_q(su_2) on the blocks B(H_s):
//! representation matrices, the Podles generators, the adjoint action, the Haar
//! pairing and Clebsch-Gordan isometries.
//!
//! Basis vectors of H_s are indexed i = -s..=s in ascending order; `e` lowers the
//! index, `f` raises it and `k` acts diagonally by q^{-i}.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::fusion::{fuse_labels, fusion_coeff, q_number, quantum_dim, IrrepLabel};

pub type Matrix = DMatrix<f64>;

/// Largest singular value.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Largest absolute entry.
pub fn entry_norm(m: &Matrix) -> f64 {
    m.amax()
}

/// Generators of U_q(su_2) acted on by `ad` and `Δ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    E,
    F,
    K,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::E, Generator::F, Generator::K];
}

/// pi_s(e), pi_s(f), pi_s(k).
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrices {
    pub label: IrrepLabel,
    pub e: Matrix,
    pub f: Matrix,
    pub k: Matrix,
}

impl RepMatrices {
    pub fn generator(&self, g: Generator) -> &Matrix {
        match g {
            Generator::E => &self.e,
            Generator::F => &self.f,
            Generator::K => &self.k,
        }
    }

    /// pi_s(k^{-1}).
    pub fn k_inv(&self) -> Matrix {
        Matrix::from_diagonal(&self.k.diagonal().map(|v| 1.0 / v))
    }
}

/// Coefficient of xi_{i-1} in e xi_i, with i given as a twice-integer.
fn lowering_coeff(s2: i64, i2: i64, q: f64) -> f64 {
    (q_number((s2 + i2) / 2, q) * q_number((s2 - i2) / 2 + 1, q)).sqrt()
}

/// Coefficient of xi_{i+1} in f xi_i.
fn raising_coeff(s2: i64, i2: i64, q: f64) -> f64 {
    (q_number((s2 - i2) / 2, q) * q_number((s2 + i2) / 2 + 1, q)).sqrt()
}

pub fn rep_matrices(s: IrrepLabel, q: f64) -> RepMatrices {
    let n = s.dim();
    let s2 = i64::from(s.twice_spin());
    let mut e = Matrix::zeros(n, n);
    for (p, i2) in s.twice_indices().enumerate().skip(1) {
        e[(p - 1, p)] = lowering_coeff(s2, i2, q);
    }
    let k = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.twice_indices().map(|i2| q.powf(-(i2 as f64) / 2.0))));
    let f = e.transpose();
    RepMatrices { label: s, e, f, k }
}

/// Largest residual of k e = q e k, k f = q^{-1} f k and
/// e f - f e = (k^2 - k^{-2}) / (q - q^{-1}).
pub fn relation_residual(rep: &RepMatrices, q: f64) -> f64 {
    let (e, f, k) = (&rep.e, &rep.f, &rep.k);
    let k_inv = rep.k_inv();
    let r1 = op_norm(&(k * e - e * k * q));
    let r2 = op_norm(&(k * f - f * k / q));
    let cartan = (k * k - &k_inv * &k_inv) / (q - 1.0 / q);
    let r3 = op_norm(&(e * f - f * e - cartan));
    r1.max(r2).max(r3)
}

/// pi_s(chi_{-1}), pi_s(chi_0), pi_s(chi_1) and the normalizing scalar lambda_s.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiElements {
    pub label: IrrepLabel,
    pub minus: Matrix,
    pub zero: Matrix,
    pub plus: Matrix,
    pub lambda: f64,
}

impl ChiElements {
    /// Podles generators X^s_j = lambda_s^{-1} pi_s(chi_j), ordered j = -1, 0, 1.
    pub fn generators(&self) -> [Matrix; 3] {
        self.generators_scaled(self.lambda)
    }

    pub fn generators_scaled(&self, lambda: f64) -> [Matrix; 3] {
        [&self.minus / lambda, &self.zero / lambda, &self.plus / lambda]
    }

    pub fn get(&self, j: i32) -> &Matrix {
        match j {
            -1 => &self.minus,
            0 => &self.zero,
            1 => &self.plus,
            _ => panic!("chi index {j} outside -1..=1"),
        }
    }
}

/// lambda_s = q (q^{2s+1} + q^{-2s-1}) / ((q - q^{-1}) sqrt([2]_q)).
pub fn lambda_s(s: IrrepLabel, q: f64) -> f64 {
    let n = f64::from(s.twice_spin()) + 1.0;
    q * (q.powf(n) + q.powf(-n)) / ((q - 1.0 / q) * q_number(2, q).sqrt())
}

/// Sphere parameter c(s) = -(q^{2s+1} + q^{-2s-1})^{-2}.
pub fn podles_c(s: IrrepLabel, q: f64) -> f64 {
    let n = f64::from(s.twice_spin()) + 1.0;
    -(q.powf(n) + q.powf(-n)).powi(-2)
}

pub fn chi_elements(s: IrrepLabel, q: f64) -> ChiElements {
    let rep = rep_matrices(s, q);
    let (e, f, k) = (&rep.e, &rep.f, &rep.k);
    ChiElements {
        label: s,
        minus: -(f * k) * q,
        zero: (e * f - f * e * (q * q)) / q_number(2, q).sqrt(),
        plus: (e * k) * q,
        lambda: lambda_s(s, q),
    }
}

/// Residual norms of the Podles relations satisfied by X^s_j with c = c(s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodlesResiduals {
    /// X_0^2 + X_{-1}^* X_{-1} + X_1^* X_1 = 1 + (q + q^{-1})^2 c
    pub radius: f64,
    /// q X_1 X_0 - q^{-1} X_0 X_1 = (q^{-1} - q) X_1
    pub commutation: f64,
    /// (q^{-1} - q) X_0^2 + X_{-1} X_1 - X_1 X_{-1} = -(q^{-1} - q) X_0
    pub quadratic: f64,
    /// X_{-1}^* = -q X_1
    pub conjugation: f64,
}

impl PodlesResiduals {
    pub fn max(&self) -> f64 {
        self.radius.max(self.commutation).max(self.quadratic).max(self.conjugation)
    }
}

fn podles_residuals_for(gens: &[Matrix; 3], c: f64, q: f64) -> PodlesResiduals {
    let [xm, x0, xp] = gens;
    let n = x0.nrows();
    let id = Matrix::identity(n, n);
    let qi = 1.0 / q;
    let radius = x0 * x0 + xm.transpose() * xm + xp.transpose() * xp - id * (1.0 + (q + qi).powi(2) * c);
    let commutation = xp * x0 * q - x0 * xp * qi - xp * (qi - q);
    let quadratic = x0 * x0 * (qi - q) + xm * xp - xp * xm + x0 * (qi - q);
    let conjugation = xm.transpose() + xp * q;
    PodlesResiduals {
        radius: op_norm(&radius),
        commutation: op_norm(&commutation),
        quadratic: op_norm(&quadratic),
        conjugation: op_norm(&conjugation),
    }
}

pub fn podles_residuals(s: IrrepLabel, q: f64) -> PodlesResiduals {
    let chi = chi_elements(s, q);
    podles_residuals_for(&chi.generators(), podles_c(s, q), q)
}

/// Residuals when the generators are normalized by an arbitrary scalar instead of lambda_s.
pub fn podles_residuals_with_lambda(s: IrrepLabel, lambda: f64, q: f64) -> PodlesResiduals {
    let chi = chi_elements(s, q);
    podles_residuals_for(&chi.generators_scaled(lambda), podles_c(s, q), q)
}

/// ‖pi_s(chi_0) + lambda_s I - q sqrt([2]_q) / (q - q^{-1}) pi_s(k)^2‖.
pub fn chi0_identity_residual(s: IrrepLabel, q: f64) -> f64 {
    let chi = chi_elements(s, q);
    let rep = rep_matrices(s, q);
    let n = s.dim();
    let coeff = q * q_number(2, q).sqrt() / (q - 1.0 / q);
    let lhs = &chi.zero + Matrix::identity(n, n) * chi.lambda - &rep.k * &rep.k * coeff;
    op_norm(&lhs)
}

/// An element of the algebraic direct product of the B(H_s), truncated to finitely many blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockElement {
    blocks: BTreeMap<IrrepLabel, Matrix>,
}

impl BlockElement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_blocks<I>(blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = (IrrepLabel, Matrix)>,
    {
        let mut out = Self::new();
        for (s, m) in blocks {
            out.insert(s, m)?;
        }
        Ok(out)
    }

    /// I_s.
    pub fn unit_block(s: IrrepLabel) -> Self {
        let n = s.dim();
        Self { blocks: BTreeMap::from([(s, Matrix::identity(n, n))]) }
    }

    /// The unit of M(Â) truncated to blocks 0..=cutoff.
    pub fn identity(cutoff: IrrepLabel) -> Self {
        Self::scalar(cutoff, |_| 1.0)
    }

    /// sum_s f(s) I_s for s <= cutoff.
    pub fn scalar(cutoff: IrrepLabel, mut f: impl FnMut(IrrepLabel) -> f64) -> Self {
        let blocks = (0..=cutoff.twice_spin())
            .map(IrrepLabel::from_twice_spin)
            .map(|s| (s, Matrix::identity(s.dim(), s.dim()) * f(s)))
            .collect();
        Self { blocks }
    }

    pub fn insert(&mut self, s: IrrepLabel, m: Matrix) -> Result<()> {
        if m.nrows() != s.dim() || m.ncols() != s.dim() {
            return invalid(format!(
                "block at twice-spin {} must be {}x{}, got {}x{}",
                s.twice_spin(),
                s.dim(),
                s.dim(),
                m.nrows(),
                m.ncols()
            ));
        }
        self.blocks.insert(s, m);
        Ok(())
    }

    pub fn get(&self, s: IrrepLabel) -> Option<&Matrix> {
        self.blocks.get(&s)
    }

    /// Block s, or the zero matrix if absent.
    pub fn block_or_zero(&self, s: IrrepLabel) -> Matrix {
        self.blocks.get(&s).cloned().unwrap_or_else(|| Matrix::zeros(s.dim(), s.dim()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (IrrepLabel, &Matrix)> {
        self.blocks.iter().map(|(&s, m)| (s, m))
    }

    pub fn labels(&self) -> impl Iterator<Item = IrrepLabel> + '_ {
        self.blocks.keys().copied()
    }

    pub fn max_label(&self) -> Option<IrrepLabel> {
        self.blocks.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn map(&self, mut f: impl FnMut(IrrepLabel, &Matrix) -> Matrix) -> Self {
        Self { blocks: self.blocks.iter().map(|(&s, m)| (s, f(s, m))).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|_, m| m * c)
    }

    /// Blocks with labels <= cutoff.
    pub fn truncated(&self, cutoff: IrrepLabel) -> Self {
        Self { blocks: self.blocks.range(..=cutoff).map(|(&s, m)| (s, m.clone())).collect() }
    }

    pub fn add_assign_block(&mut self, s: IrrepLabel, m: &Matrix) {
        match self.blocks.get_mut(&s) {
            Some(b) => *b += m,
            None => {
                self.blocks.insert(s, m.clone());
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, m) in other.iter() {
            out.add_assign_block(s, m);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// max_s ‖x_s‖ in operator norm.
    pub fn sup_norm(&self) -> f64 {
        self.blocks.values().map(op_norm).fold(0.0, f64::max)
    }

    pub fn block_norms(&self) -> BTreeMap<IrrepLabel, f64> {
        self.blocks.iter().map(|(&s, m)| (s, op_norm(m))).collect()
    }
}

/// Blockwise adjoint action (ad X)(x) = sum_i Ŝ(X_i) x Y_i for Δ̂(X) = sum_i X_i ⊗ Y_i.
pub fn adjoint_action(g: Generator, x: &BlockElement, q: f64) -> BlockElement {
    x.map(|s, m| {
        let rep = rep_matrices(s, q);
        let k_inv = rep.k_inv();
        match g {
            Generator::K => &k_inv * m * &rep.k,
            Generator::E => -(&rep.e * m * &k_inv) / q + &k_inv * m * &rep.e,
            Generator::F => -(&rep.f * m * &k_inv) * q + &k_inv * m * &rep.f,
        }
    })
}

/// Largest residual of (ad X)(X_j) = sum_k pi_1(X)_{jk} X_k on block s, over
/// X in {e, f, k} and j in {-1, 0, 1}, for the normalized generators X_j = chi_j / lambda_s.
pub fn adjoint_spin_one_residual(s: IrrepLabel, q: f64) -> f64 {
    let gens = chi_elements(s, q).generators();
    let spin_one = rep_matrices(IrrepLabel::from_twice_spin(2), q);
    let mut worst: f64 = 0.0;
    for g in Generator::ALL {
        let coeffs = spin_one.generator(g);
        for (jp, xj) in gens.iter().enumerate() {
            let x = BlockElement::from_blocks([(s, xj.clone())]).expect("generator has the block shape");
            let lhs = adjoint_action(g, &x, q).block_or_zero(s);
            let mut rhs = Matrix::zeros(s.dim(), s.dim());
            for (kp, xk) in gens.iter().enumerate() {
                rhs += xk * coeffs[(jp, kp)];
            }
            worst = worst.max(op_norm(&(lhs - rhs)));
        }
    }
    worst
}

/// Haar pairing (x, y) = ψ̂(x σ_{-i/2}(y^*)) = sum_s d_s Tr(x_s ρ^{-1/2} y_s^T ρ^{1/2} ρ^{-1}),
/// with ρ = k^{-2}. Only blocks present in both elements contribute.
pub fn haar_pairing(x: &BlockElement, y: &BlockElement, q: f64) -> f64 {
    x.iter()
        .filter_map(|(s, xs)| y.get(s).map(|ys| (s, xs, ys)))
        .map(|(s, xs, ys)| {
            let kdiag: Vec<f64> = s.twice_indices().map(|i2| q.powf(-(i2 as f64) / 2.0)).collect();
            let mut tr = 0.0;
            for a in 0..s.dim() {
                for b in 0..s.dim() {
                    tr += xs[(a, b)] * ys[(a, b)] * kdiag[a] * kdiag[b];
                }
            }
            quantum_dim(s, q) * tr
        })
        .sum()
}

/// Dense Δ̂(X) on H_r ⊗ H_t (row index a * dim_t + b).
pub fn coproduct_generator(g: Generator, r: IrrepLabel, t: IrrepLabel, q: f64) -> Matrix {
    let (rr, rt) = (rep_matrices(r, q), rep_matrices(t, q));
    match g {
        Generator::K => rr.k.kronecker(&rt.k),
        Generator::E => rr.e.kronecker(&rt.k_inv()) + rr.k.kronecker(&rt.e),
        Generator::F => rr.f.kronecker(&rt.k_inv()) + rr.k.kronecker(&rt.f),
    }
}

/// Clebsch-Gordan isometry V: H_w -> H_r ⊗ H_t intertwining π_w with (π_r ⊗ π_t)Δ̂.
#[derive(Debug, Clone, PartialEq)]
pub struct CGIsometry {
    pub r: IrrepLabel,
    pub t: IrrepLabel,
    pub w: IrrepLabel,
    /// Shape (2r+1)(2t+1) x (2w+1); row a * (2t+1) + b.
    pub v: Matrix,
}

impl CGIsometry {
    /// Column position in H_w paired with first-factor position `a` and
    /// second-factor position `b`, if the weights match.
    pub fn column_for(&self, a: usize, b: usize) -> Option<usize> {
        let (r2, t2, w2) = (self.r.twice_spin() as i64, self.t.twice_spin() as i64, self.w.twice_spin() as i64);
        // i_a + i_b = i_m  <=>  2a - r2 + 2b - t2 = 2m - w2
        let twice_m = 2 * (a + b) as i64 - r2 - t2 + w2;
        if twice_m < 0 || twice_m % 2 != 0 || twice_m / 2 > w2 {
            return None;
        }
        Some((twice_m / 2) as usize)
    }

    /// V^T V - I.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.w.dim();
        op_norm(&(self.v.transpose() * &self.v - Matrix::identity(n, n)))
    }

    /// ‖Δ̂(X) V - V π_w(X)‖ for X in {e, f, k}.
    pub fn intertwining_residual(&self, q: f64) -> f64 {
        let rw = rep_matrices(self.w, q);
        Generator::ALL
            .iter()
            .map(|&g| {
                let lhs = coproduct_generator(g, self.r, self.t, q) * &self.v;
                op_norm(&(lhs - &self.v * rw.generator(g)))
            })
            .fold(0.0, f64::max)
    }
}

/// Rank tolerance for extracting the highest-weight vector.
pub const KERNEL_RANK_TOL: f64 = 1e-8;

/// Pairs (a, b) of basis positions with a + b = `sum`, ordered by a.
fn weight_space(nr: usize, nt: usize, sum: i64) -> Vec<(usize, usize)> {
    (0..nr)
        .filter_map(|a| {
            let b = sum - a as i64;
            (0..nt as i64).contains(&b).then_some((a, b as usize))
        })
        .collect()
}

fn twice_idx(p: usize, s2: i64) -> i64 {
    2 * p as i64 - s2
}

/// Sparse action of Δ̂(e) (`lower`) or Δ̂(f) on a vector of H_r ⊗ H_t.
fn coproduct_step(v: &[f64], r2: i64, t2: i64, q: f64, lower: bool) -> Vec<f64> {
    let (nr, nt) = (r2 as usize + 1, t2 as usize + 1);
    let mut out = vec![0.0; v.len()];
    for a in 0..nr {
        for b in 0..nt {
            let c = v[a * nt + b];
            if c == 0.0 {
                continue;
            }
            let (ia2, ib2) = (twice_idx(a, r2), twice_idx(b, t2));
            let k_a = q.powf(-(ia2 as f64) / 2.0);
            let k_inv_b = q.powf(ib2 as f64 / 2.0);
            if lower {
                if a > 0 {
                    out[(a - 1) * nt + b] += c * lowering_coeff(r2, ia2, q) * k_inv_b;
                }
                if b > 0 {
                    out[a * nt + b - 1] += c * k_a * lowering_coeff(t2, ib2, q);
                }
            } else {
                if a + 1 < nr {
                    out[(a + 1) * nt + b] += c * raising_coeff(r2, ia2, q) * k_inv_b;
                }
                if b + 1 < nt {
                    out[a * nt + b + 1] += c * k_a * raising_coeff(t2, ib2, q);
                }
            }
        }
    }
    out
}

/// Decomposes H_r ⊗ H_t into the images of the isometries V_w, w in fuse(r, t).
///
/// Columns follow the normalized lowering recursion v_{m+1} = Δ̂(f) v_m / ([w-m][w+m+1])^{1/2}
/// from the highest-weight vectors. Rounding errors along summands w' > w are
/// amplified by each lowering step, so the summands are processed by decreasing w
/// and every new column is orthogonalized against the larger summands at the same
/// weight.
pub fn cg_decomposition(r: IrrepLabel, t: IrrepLabel, q: f64) -> Result<Vec<CGIsometry>> {
    let (r2, t2) = (i64::from(r.twice_spin()), i64::from(t.twice_spin()));
    let (nr, nt) = (r.dim(), t.dim());
    let labels = fuse_labels(r, t);
    let mut out: Vec<CGIsometry> =
        labels.iter().map(|&w| CGIsometry { r, t, w, v: Matrix::zeros(nr * nt, w.dim()) }).collect();

    for sum in 0..=(r2 + t2) {
        let mu2 = 2 * sum - r2 - t2;
        let space = weight_space(nr, nt, sum);
        let mut done: Vec<Vec<f64>> = Vec::new();
        for k in (0..labels.len()).rev() {
            let w2 = i64::from(labels[k].twice_spin());
            if w2 < mu2.abs() {
                continue;
            }
            let m = ((mu2 + w2) / 2) as usize;
            let mut col = if m == 0 {
                highest_weight_vector(r2, t2, w2, q)?
            } else {
                let prev: Vec<f64> = out[k].v.column(m - 1).iter().copied().collect();
                let norm = raising_coeff(w2, twice_idx(m - 1, w2), q);
                coproduct_step(&prev, r2, t2, q, false).into_iter().map(|c| c / norm).collect()
            };
            for other in &done {
                let overlap: f64 = space.iter().map(|&(a, b)| col[a * nt + b] * other[a * nt + b]).sum();
                for &(a, b) in &space {
                    col[a * nt + b] -= overlap * other[a * nt + b];
                }
            }
            let norm = space.iter().map(|&(a, b)| col[a * nt + b].powi(2)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > KERNEL_RANK_TOL.sqrt() {
                return Err(Error::Numerical(format!(
                    "column {m} of ({r2}, {t2}) -> {w2} lost its norm ({norm}) during lowering"
                )));
            }
            col.iter_mut().for_each(|c| *c /= norm);
            out[k].v.column_mut(m).copy_from_slice(&col);
            done.push(col);
        }
        if done.len() != space.len() {
            return Err(Error::Numerical(format!(
                "weight space {mu2} of {r2} x {t2} has dimension {} but {} summands",
                space.len(),
                done.len()
            )));
        }
    }
    Ok(out)
}

/// Unit vector of weight -w in H_r ⊗ H_t annihilated by Δ̂(e), with a positive
/// coefficient at the smallest first-factor index.
fn highest_weight_vector(r2: i64, t2: i64, w2: i64, q: f64) -> Result<Vec<f64>> {
    let (nr, nt) = (r2 as usize + 1, t2 as usize + 1);
    let source = weight_space(nr, nt, (r2 + t2 - w2) / 2);
    let image = weight_space(nr, nt, (r2 + t2 - w2) / 2 - 1);

    // Rank-revealing check on Δ̂(e) restricted to the two weight spaces.
    let mut de = Matrix::zeros(image.len().max(source.len()), source.len());
    for (col, &(a, b)) in source.iter().enumerate() {
        let mut unit = vec![0.0; nr * nt];
        unit[a * nt + b] = 1.0;
        let img = coproduct_step(&unit, r2, t2, q, true);
        for (row, &(a2, b2)) in image.iter().enumerate() {
            de[(row, col)] = img[a2 * nt + b2];
        }
    }
    let svd = de.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let scale = svd.singular_values.max().max(1.0);
    let null: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv <= KERNEL_RANK_TOL * scale)
        .map(|(i, _)| i)
        .collect();
    if null.len() != 1 {
        return Err(Error::Numerical(format!(
            "highest-weight kernel for ({r2}, {t2}) -> {w2} has dimension {}",
            null.len()
        )));
    }
    let approx = v_t.row(null[0]);

    // The kernel equations link neighbours (a, b) and (a + 1, b - 1), so the vector
    // also follows from a two-term recurrence that keeps full relative accuracy.
    let mut coeffs = vec![1.0; source.len()];
    for j in 1..source.len() {
        let (a, b) = source[j];
        let alpha = lowering_coeff(r2, twice_idx(a, r2), q) * q.powf(twice_idx(b, t2) as f64 / 2.0);
        let beta = q.powf(-(twice_idx(a - 1, r2) as f64) / 2.0) * lowering_coeff(t2, twice_idx(b + 1, t2), q);
        coeffs[j] = -coeffs[j - 1] * beta / alpha;
    }
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);
    let overlap: f64 = coeffs.iter().zip(approx.iter()).map(|(x, y)| x * y).sum();
    if (overlap.abs() - 1.0).abs() > KERNEL_RANK_TOL.sqrt() {
        return Err(Error::Numerical(format!(
            "highest-weight recurrence disagrees with the kernel for ({r2}, {t2}) -> {w2}"
        )));
    }
    // source[0] has a = 0 and coefficient 1 before normalization.
    let mut v = vec![0.0; nr * nt];
    for (&(a, b), c) in source.iter().zip(&coeffs) {
        v[a * nt + b] = *c;
    }
    Ok(v)
}

pub fn cg_isometry(r: IrrepLabel, t: IrrepLabel, w: IrrepLabel, q: f64) -> Result<CGIsometry> {
    if fusion_coeff(r, t, w) == 0 {
        return invalid(format!(
            "twice-spin {} does not occur in {} x {}",
            w.twice_spin(),
            r.twice_spin(),
            t.twice_spin()
        ));
    }
    cg_decomposition(r, t, q)?
        .into_iter()
        .find(|iso| iso.w == w)
        .ok_or_else(|| Error::Numerical("summand missing from the decomposition".into()))
}

/// A CG isometry stored by rows: each row (a, b) of V has at most one nonzero
/// entry, in column `column_for(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactCG {
    pub r: IrrepLabel,
    pub t: IrrepLabel,
    pub w: IrrepLabel,
    rows: Vec<(u32, f64)>,
}

impl CompactCG {
    pub fn from_isometry(iso: &CGIsometry) -> Self {
        let (nr, nt) = (iso.r.dim(), iso.t.dim());
        let mut rows = Vec::with_capacity(nr * nt);
        for a in 0..nr {
            for b in 0..nt {
                rows.push(match iso.column_for(a, b) {
                    Some(m) => (m as u32, iso.v[(a * nt + b, m)]),
                    None => (0, 0.0),
                });
            }
        }
        CompactCG { r: iso.r, t: iso.t, w: iso.w, rows }
    }

    /// (column, value) of row a * (2t+1) + b.
    pub fn entry(&self, a: usize, b: usize) -> (usize, f64) {
        let (m, u) = self.rows[a * self.t.dim() + b];
        (m as usize, u)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut v = Matrix::zeros(self.rows.len(), self.w.dim());
        for (row, &(m, u)) in self.rows.iter().enumerate() {
            if u != 0.0 {
                v[(row, m as usize)] = u;
            }
        }
        v
    }
}

/// Read-mostly memo table of Clebsch-Gordan isometries for one value of q.
#[derive(Debug)]
pub struct CgTable {
    q: f64,
    cache: RwLock<HashMap<(u32, u32, u32), Arc<CompactCG>>>,
}

impl CgTable {
    pub fn new(q: f64) -> Self {
        CgTable { q, cache: RwLock::new(HashMap::new()) }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn get(&self, r: IrrepLabel, t: IrrepLabel, w: IrrepLabel) -> Result<Arc<CompactCG>> {
        let key = (r.twice_spin(), t.twice_spin(), w.twice_spin());
        if let Some(v) = self.cache.read().expect("CG cache poisoned").get(&key) {
            return Ok(Arc::clone(v));
        }
        if fusion_coeff(r, t, w) == 0 {
            return cg_isometry(r, t, w, self.q).map(|iso| Arc::new(CompactCG::from_isometry(&iso)));
        }
        let all = cg_decomposition(r, t, self.q)?;
        let mut cache = self.cache.write().expect("CG cache poisoned");
        for iso in all {
            cache
                .entry((key.0, key.1, iso.w.twice_spin()))
                .or_insert_with(|| Arc::new(CompactCG::from_isometry(&iso)));
        }
        Ok(Arc::clone(&cache[&key]))
    }
}

/// The B(H_r) ⊗ B(H_t) component V x V^T of Δ̂(x) for x in B(H_w).
pub fn coproduct_block(x: &Matrix, r: IrrepLabel, t: IrrepLabel, w: IrrepLabel, table: &CgTable) -> Result<Matrix> {
    if x.nrows() != w.dim() || x.ncols() != w.dim() {
        return invalid(format!("block must be {}x{}, got {}x{}", w.dim(), w.dim(), x.nrows(), x.ncols()));
    }
    let n = r.dim() * t.dim();
    if fusion_coeff(r, t, w) == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let v = table.get(r, t, w)?.to_dense();
    Ok(&v * x * v.transpose())
}
