use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use suq2_walk::blocks::{
    adjoint_action, adjoint_spin_one_residual, cg_decomposition, chi0_identity_residual, haar_pairing,
    op_norm, podles_residuals, relation_residual, rep_matrices, BlockElement, Generator,
};
use suq2_walk::central::{
    balayage, convolution_powers, decay_rate, domination_factor, green_central, renewal_sequence,
    transition_kernel, zero_two_estimate, CentralElement,
};
use suq2_walk::fusion::{fuse_labels, quantum_dim};
use suq2_walk::martin::{
    boundary_polynomial, boundary_polynomial_value, leading_coefficient_law, markov_step, martin_apply,
    tilde_polynomial,
};
use suq2_walk::{DeformationParams, IrrepLabel, Result, WeightFunctional};

pub const SUITES: [&str; 4] = ["fusion", "central", "blocks", "martin"];

const TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    /// Worst residual over all trials.
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn l(n: u32) -> IrrepLabel {
    IrrepLabel::from_twice_spin(n)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> WeightFunctional {
    let k = rng.gen_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut pairs: Vec<_> = raw.iter().enumerate().map(|(i, w)| (l(i as u32 + 1), w / total)).collect();
    pairs[0].1 = 1.0 - pairs[1..].iter().map(|p| p.1).sum::<f64>();
    WeightFunctional::new(pairs).expect("positive weights")
}

fn random_blocks(rng: &mut ChaCha8Rng, max2: u32) -> BlockElement {
    let mut x = BlockElement::new();
    for s2 in 0..=max2 {
        let n = l(s2).dim();
        x.insert(l(s2), DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))).expect("square block");
    }
    x
}

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn record(&mut self, name: &'static str, tolerance: f64, values: impl IntoIterator<Item = f64>) {
        let value = values.into_iter().fold(0.0, |m: f64, v| if v.is_nan() { f64::INFINITY } else { m.max(v) });
        self.checks.push(Check { suite: self.suite, name, value, tolerance });
    }
}

fn fusion(q: f64, rng: &mut ChaCha8Rng, r: &mut Recorder) {
    let pairs: Vec<(u32, u32)> = (0..TRIALS).map(|_| (rng.gen_range(0..40), rng.gen_range(0..40))).collect();
    r.record(
        "dimension is multiplicative",
        1e-11,
        pairs.iter().map(|&(a, b)| {
            let sum: f64 = fuse_labels(l(a), l(b)).iter().map(|&t| quantum_dim(t, q)).sum();
            rel(sum, quantum_dim(l(a), q) * quantum_dim(l(b), q))
        }),
    );
    r.record(
        "fusion is symmetric",
        0.0,
        pairs.iter().map(|&(a, b)| if fuse_labels(l(a), l(b)) == fuse_labels(l(b), l(a)) { 0.0 } else { 1.0 }),
    );
    let states: Vec<_> = (0..TRIALS).map(|_| (random_state(rng), random_state(rng))).collect();
    r.record("products of states are states", 1e-12, states.iter().map(|(a, b)| (a.product(b, q).norm() - 1.0).abs()));
    r.record(
        "product is commutative",
        1e-12,
        states.iter().map(|(a, b)| {
            let (ab, ba) = (a.product(b, q), b.product(a, q));
            ab.iter().map(|(s, w)| (w - ba.weight(s)).abs()).fold(0.0, f64::max)
        }),
    );
}

fn central(q: f64, params: &DeformationParams, rng: &mut ChaCha8Rng, r: &mut Recorder) -> Result<()> {
    let states: Vec<_> = (0..TRIALS).map(|_| random_state(rng)).collect();
    r.record(
        "kernel rows sum to one",
        1e-12,
        states.iter().map(|phi| {
            let s = rng.gen_range(0..40u32);
            ((0..=s + 8).map(|t| transition_kernel(phi, l(s), l(t), q)).sum::<f64>() - 1.0).abs()
        }),
    );
    r.record(
        "geometric domination",
        1e-12,
        states.iter().map(|phi| {
            let lambda = decay_rate(phi, q);
            let powers = convolution_powers(phi, 20, q);
            let (n, s, t) = (rng.gen_range(0..=20), rng.gen_range(0..16u32), rng.gen_range(0..16u32));
            let bound = domination_factor(l(s), l(t), q) * lambda.powi(n as i32);
            (transition_kernel(&powers[n], l(s), l(t), q) / bound - 1.0).max(0.0)
        }),
    );
    r.record(
        "renewal inversion",
        1e-12,
        states.iter().map(|phi| {
            let p = renewal_sequence(phi, q);
            let at = |n: i64| p.get(&n).copied().unwrap_or(0.0);
            (0..=20u32)
                .map(|s2| {
                    let n = i64::from(s2);
                    let (a, b) = (q.powi(s2 as i32) * at(-n), q.powi(s2 as i32 + 2) * at(-n - 2));
                    let d = quantum_dim(l(s2), q);
                    let (rhs, scale) = ((a - b) / d, (a.abs() + b.abs()) / d);
                    (transition_kernel(phi, l(s2), l(0), q) - rhs).abs() / scale.max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max)
        }),
    );
    let mut poisson = Vec::new();
    let mut sweep = Vec::new();
    for phi in states.iter().take(5) {
        let g = green_central(phi, l(0), l(30), params)?;
        for s in 0..=20u32 {
            let pg: f64 = (0..=30).map(|t| transition_kernel(phi, l(s), l(t), q) * g.value(l(t))).sum();
            let expected = g.value(l(s)) - if s == 0 { 1.0 } else { 0.0 };
            poisson.push((pg - expected).abs() / g.value(l(0)));
        }
        let one = CentralElement::constant(l(60), 1.0);
        let b = balayage(phi, &[l(0), l(1)], &one, params)?;
        sweep.push(b.element.iter().map(|(_, v)| (v - 1.0).max(0.0)).fold(0.0, f64::max));
    }
    r.record("green function solves the poisson equation", 1e-7, poisson);
    r.record("balayage is dominated by x", params.tol_assert, sweep);
    let half = WeightFunctional::state(l(1));
    let shift = (1..=10)
        .map(|n| zero_two_estimate(&half, n, 1, l(60), q).map(|e| (e.value - 2.0).abs()))
        .collect::<Result<Vec<_>>>()?;
    r.record("parity shift stays at two", 1e-12, shift);
    Ok(())
}

fn blocks(q: f64, rng: &mut ChaCha8Rng, r: &mut Recorder) -> Result<()> {
    r.record(
        "generator relations",
        1e-12,
        (0..=12).map(|s| {
            let rep = rep_matrices(l(s), q);
            let scale = op_norm(&rep.e) + op_norm(&rep.k) + op_norm(&rep.k_inv());
            relation_residual(&rep, q) / (scale * scale)
        }),
    );
    r.record("podles relations", 1e-9, (0..=8).map(|s| podles_residuals(l(s), q).max()));
    r.record("chi0 identity", 1e-10, (0..=8).map(|s| chi0_identity_residual(l(s), q)));
    r.record("spin-1 adjoint action", 1e-10, (1..=8).map(|s| adjoint_spin_one_residual(l(s), q)));
    let mut ortho = Vec::new();
    let mut inter = Vec::new();
    let mut complete = Vec::new();
    for _ in 0..TRIALS {
        let (a, b) = (rng.gen_range(0..=10u32), rng.gen_range(0..=10u32));
        let parts = cg_decomposition(l(a), l(b), q)?;
        let n = l(a).dim() * l(b).dim();
        let mut sum = DMatrix::<f64>::zeros(n, n);
        for iso in &parts {
            ortho.push(iso.orthonormality_residual());
            inter.push(iso.intertwining_residual(q));
            sum += &iso.v * iso.v.transpose();
        }
        complete.push((sum - DMatrix::identity(n, n)).amax());
    }
    r.record("cg orthonormality", 1e-9, ortho);
    r.record("cg intertwining", 1e-9, inter);
    r.record("cg completeness", 1e-9, complete);
    Ok(())
}

fn martin(q: f64, params: &DeformationParams, rng: &mut ChaCha8Rng, r: &mut Recorder) -> Result<()> {
    let mut unital = Vec::new();
    let mut duality = Vec::new();
    let mut covariance = Vec::new();
    for _ in 0..TRIALS / 2 {
        let phi = random_state(rng);
        let reach = phi.max_label().expect("nonzero state").twice_spin();
        let stepped = markov_step(&phi, &BlockElement::identity(l(10)), params)?;
        unital.push(
            (0..=10 - reach)
                .map(|s| (stepped.block_or_zero(l(s)) - DMatrix::identity(l(s).dim(), l(s).dim())).amax())
                .fold(0.0, f64::max),
        );
        let (x, y) = (random_blocks(rng, 3), random_blocks(rng, 3));
        let lhs = haar_pairing(&markov_step(&phi, &x, params)?, &y, q);
        let rhs = haar_pairing(&x, &markov_step(&phi, &y, params)?, q);
        duality.push((lhs - rhs).abs());
        let cutoff = l(3 + reach);
        for g in Generator::ALL {
            let a = adjoint_action(g, &markov_step(&phi, &x, params)?, q);
            let b = markov_step(&phi, &adjoint_action(g, &x, q), params)?;
            covariance.push(a.sub(&b).truncated(cutoff).sup_norm() / a.sup_norm().max(1.0));
        }
    }
    r.record("markov operator is unital", 1e-12, unital);
    r.record("haar duality", 1e-10, duality);
    r.record("adjoint covariance", 1e-9, covariance);

    let mut identity = Vec::new();
    let mut at_one = Vec::new();
    let mut leading = Vec::new();
    for n in 0..=10 {
        let p = boundary_polynomial(n, q * q, q)?;
        let pt = tilde_polynomial(n, q)?;
        let scale = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        identity.push(p.coeffs().iter().zip(pt.coeffs()).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max));
        at_one.push(rel(boundary_polynomial_value(n, q * q, q, 1.0)?, q.powi(2 * n as i32)));
        let c = rng.gen_range(0.05..0.95);
        leading.push(rel(boundary_polynomial(n, c, q)?.leading(), leading_coefficient_law(n, c, q)));
    }
    r.record("tilde polynomial identity", 1e-8, identity);
    r.record("polynomial value at one", 1e-10, at_one);
    r.record("leading coefficient law", 1e-8, leading);

    let half = WeightFunctional::state(l(1));
    let k = martin_apply(&half, &BlockElement::unit_block(l(0)), l(8), params)?;
    r.record(
        "martin kernel of the counit block is one",
        1e-7,
        (0..=8).map(|s| (k.element.block_or_zero(l(s)) - DMatrix::identity(l(s).dim(), l(s).dim())).amax()),
    );
    Ok(())
}

/// Runs one suite, or all of them for `"all"`.
pub fn run(suite: &str, params: &DeformationParams, seed: u64) -> std::result::Result<Vec<Check>, String> {
    let names: Vec<&'static str> = match suite {
        "all" => SUITES.to_vec(),
        name => vec![*SUITES.iter().find(|s| **s == name).ok_or_else(|| {
            format!("unknown suite '{name}', expected one of: all, {}", SUITES.join(", "))
        })?],
    };
    let q = params.q;
    let mut out = Vec::new();
    for name in names {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rec = Recorder { suite: name, checks: Vec::new() };
        let res = match name {
            "fusion" => {
                fusion(q, &mut rng, &mut rec);
                Ok(())
            }
            "central" => central(q, params, &mut rng, &mut rec),
            "blocks" => blocks(q, &mut rng, &mut rec),
            _ => martin(q, params, &mut rng, &mut rec),
        };
        if let Err(e) = res {
            rec.checks.push(Check { suite: name, name: "suite completed", value: f64::INFINITY, tolerance: 0.0 });
            eprintln!("suite {name}: {e}");
        }
        out.extend(rec.checks);
    }
    Ok(out)
}
