//! Command-line front end: parses parameters, runs one computation and emits a table.

pub mod phi;
pub mod table;
pub mod verify;

use clap::{Args, Parser, Subcommand, ValueEnum};

use suq2_walk::blocks::{adjoint_spin_one_residual, chi0_identity_residual, podles_residuals};
use suq2_walk::central::{
    asymptotic_report, balayage, green_central, martin_central, solve_delta, zero_two_profile, CentralElement,
};
use suq2_walk::martin::boundary_deviation;
use suq2_walk::{DeformationParams, Error, IrrepLabel, WeightFunctional};

pub use phi::parse_phi;
use table::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    /// The constant element 1.
    One,
    /// The central Green element G(I_0).
    Green,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Deformation parameter, 0 < q < 1.
    #[arg(long, default_value_t = 0.5, global = true)]
    pub q: f64,
    /// Weight functional as TWICE_SPIN:WEIGHT pairs, e.g. "1:0.5,2:0.5".
    #[arg(long, default_value = "1:1.0", global = true)]
    pub phi: String,
    #[arg(long, default_value_t = DeformationParams::DEFAULT_TOL_TAIL, global = true)]
    pub tol_tail: f64,
    #[arg(long, default_value_t = DeformationParams::DEFAULT_TOL_ASSERT, global = true)]
    pub tol_assert: f64,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "suq2", version, about = "Random walks on the dual of quantum SU(2)")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Certified central Green function g(s, t) for s <= s-max.
    Green {
        #[arg(long, default_value_t = 0)]
        target: u32,
        #[arg(long, default_value_t = 20)]
        s_max: u32,
    },
    /// Exponential tilt delta and drift lambda of the induced walk on the integers.
    Delta,
    /// Green ratios and normalized constants against their limits.
    Ratio {
        #[arg(long, default_value_t = 40)]
        s_max: u32,
    },
    /// Central Martin kernel K(I_t)(s) with enclosures.
    MartinCentral {
        #[arg(long, default_value_t = 1)]
        target: u32,
        #[arg(long, default_value_t = 40)]
        s_max: u32,
    },
    /// Deviation of block Martin kernels from the boundary polynomials.
    MartinBlock {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        r_max: u32,
    },
    /// Podles sphere residuals of the matrix blocks.
    Podles {
        #[arg(long, default_value_t = 8)]
        s_max: u32,
    },
    /// Balayage of a superharmonic element onto a finite window Y.
    Balayage {
        #[arg(long = "Y", value_delimiter = ',', default_value = "0,1")]
        window: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Sweep::One)]
        x: Sweep,
        #[arg(long, default_value_t = 60)]
        s_max: u32,
    },
    /// Zero-two law estimates for n = 0..=n.
    Zerotwo {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 120)]
        s_max: u32,
    },
    /// Randomized invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Green { .. } => "green",
            Command::Delta => "delta",
            Command::Ratio { .. } => "ratio",
            Command::MartinCentral { .. } => "martin-central",
            Command::MartinBlock { .. } => "martin-block",
            Command::Podles { .. } => "podles",
            Command::Balayage { .. } => "balayage",
            Command::Zerotwo { .. } => "zerotwo",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Result of one invocation: the exit code, standard output and a diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn failure(code: i32, message: impl Into<String>) -> Outcome {
    Outcome { code, stdout: String::new(), stderr: message.into() }
}

fn from_error(err: Error) -> Outcome {
    let code = match err {
        Error::InvalidInput(_) | Error::NotGenerating | Error::TransienceNotCertified { .. } => EXIT_INVALID,
        Error::Undercertified { .. } | Error::Numerical(_) | Error::Resource(_) => EXIT_FAILED,
    };
    failure(code, err.to_string())
}

fn l(n: u32) -> IrrepLabel {
    IrrepLabel::from_twice_spin(n)
}

fn compute(command: &Command, phi: &WeightFunctional, params: &DeformationParams) -> Result<(Table, bool), Error> {
    let q = params.q;
    let table = match command {
        Command::Green { target, s_max } => {
            let g = green_central(phi, l(*target), l(*s_max), params)?;
            let mut t = Table::new(&["s2", "value", "tail_bound"]);
            for row in &g.rows {
                t.push(vec![row.label.twice_spin().into(), row.value.into(), row.tail_bound.into()]);
            }
            t.with_summary("target", *target).with_summary("decay_rate", g.decay_rate).with_summary("steps", g.steps)
        }
        Command::Delta => {
            let r = solve_delta(phi, q)?;
            let mut t = Table::new(&["delta", "lambda_phi"]);
            t.push(vec![r.delta.into(), r.lambda_phi.into()]);
            t
        }
        Command::Ratio { s_max } => {
            let r = asymptotic_report(phi, l(*s_max), params)?;
            let mut t = Table::new(&["s2", "value", "tail_bound", "constant", "constant_bound"]);
            for row in &r.rows {
                t.push(vec![
                    row.label.twice_spin().into(),
                    row.ratio.into(),
                    row.ratio_bound.into(),
                    row.constant.into(),
                    row.constant_bound.into(),
                ]);
            }
            t.with_summary("delta", r.delta)
                .with_summary("lambda_phi", r.lambda_phi)
                .with_summary("ratio_target", r.ratio_target)
                .with_summary("constant_target", r.constant_target)
        }
        Command::MartinCentral { target, s_max } => {
            let k = martin_central(phi, l(*target), l(*s_max), params)?;
            let mut t = Table::new(&["s2", "value", "tail_bound"]);
            for (s, v) in k.element.iter() {
                t.push(vec![s.twice_spin().into(), v.into(), k.uncertainty(s).into()]);
            }
            t.with_summary("target", *target)
        }
        Command::MartinBlock { n, r_max } => {
            let r = boundary_deviation(phi, *n, l(0), l(*r_max), params)?;
            let mut t = Table::new(&["s2", "value", "tail_bound", "entry_deviation"]);
            for row in &r.rows {
                t.push(vec![
                    row.label.twice_spin().into(),
                    row.deviation.into(),
                    row.uncertainty.into(),
                    row.entry_deviation.into(),
                ]);
            }
            t.with_summary("n", *n).with_summary("c", r.c).with_summary("steps", r.green_steps)
        }
        Command::Podles { s_max } => {
            let mut t = Table::new(&[
                "s2",
                "value",
                "tail_bound",
                "radius",
                "commutation",
                "quadratic",
                "conjugation",
                "chi0_identity",
                "adjoint",
            ]);
            for s in 0..=*s_max {
                let r = podles_residuals(l(s), q);
                let chi0 = chi0_identity_residual(l(s), q);
                let adj = if s == 0 { 0.0 } else { adjoint_spin_one_residual(l(s), q) };
                let worst = r.max().max(chi0).max(adj);
                t.push(vec![
                    s.into(),
                    worst.into(),
                    0.0.into(),
                    r.radius.into(),
                    r.commutation.into(),
                    r.quadratic.into(),
                    r.conjugation.into(),
                    chi0.into(),
                    adj.into(),
                ]);
            }
            t
        }
        Command::Balayage { window, x, s_max } => {
            let cutoff = l(*s_max);
            let x = match x {
                Sweep::One => CentralElement::constant(cutoff, 1.0),
                Sweep::Green => green_central(phi, IrrepLabel::TRIVIAL, cutoff, params)?.to_element(),
            };
            let window: Vec<IrrepLabel> = window.iter().map(|&s| l(s)).collect();
            let b = balayage(phi, &window, &x, params)?;
            let mut t = Table::new(&["s2", "value", "tail_bound", "x"]);
            for ((s, v), tail) in b.element.iter().zip(&b.tail_bounds) {
                t.push(vec![s.twice_spin().into(), v.into(), (*tail).into(), x.get(s).unwrap_or(0.0).into()]);
            }
            t.with_summary("iterations", b.iterations)
        }
        Command::Zerotwo { n, k, s_max } => {
            let profile = zero_two_profile(phi, *n, *k, l(*s_max), q)?;
            let mut t = Table::new(&["n", "value", "s2", "is_lower_bound"]);
            for e in &profile {
                t.push(vec![e.n.into(), e.value.into(), e.argmax.twice_spin().into(), e.is_lower_bound.into()]);
            }
            t.with_summary("k", *k)
        }
        Command::Verify { suite, seed } => {
            let checks = verify::run(suite, params, *seed).map_err(Error::InvalidInput)?;
            let mut t = Table::new(&["suite", "check", "value", "tolerance", "passed"]);
            let all = checks.iter().all(verify::Check::passed);
            for c in &checks {
                t.push(vec![c.suite.into(), c.name.into(), c.value.into(), c.tolerance.into(), c.passed().into()]);
            }
            return Ok((t.with_summary("seed", Cell::Int(*seed as i64)).with_summary("passed", all), all));
        }
    };
    Ok((table, true))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Outcome {
    let c = &cli.common;
    let phi = match parse_phi(&c.phi) {
        Ok(phi) => phi,
        Err(e) => return failure(EXIT_INVALID, format!("invalid --phi: {e}")),
    };
    let params = match DeformationParams::with_tolerances(c.q, c.tol_tail, c.tol_assert) {
        Ok(p) => p,
        Err(e) => return from_error(e),
    };
    match compute(&cli.command, &phi, &params) {
        Ok((table, passed)) => {
            let stdout = match c.format {
                Format::Json => table.to_json(params.q, &phi, cli.command.name()),
                Format::Csv => table.to_csv(),
            };
            let (code, stderr) =
                if passed { (EXIT_OK, String::new()) } else { (EXIT_FAILED, "one or more checks failed".into()) };
            Outcome { code, stdout, stderr }
        }
        Err(e) => from_error(e),
    }
}

/// Parses and runs an argument vector; clap usage errors map to the invalid-input code.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                failure(code, text)
            }
        }
    }
}
