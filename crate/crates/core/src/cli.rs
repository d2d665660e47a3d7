//! Command-line front end: argument parsing, dispatch and rendering.

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};

use crate::arith::Rational;
use crate::donaldson::{self, C1};
use crate::error::{Error, Result};
use crate::forms::identity_suite;
use crate::qseries::UNIT;
use crate::report::Report;
use crate::wallcross::{self, CycleData, LambdaCaps, RecursionGrid};
use crate::walls::{walls_P1xP1, walls_blowupP2_e, walls_blowupP2_h, Geometry, WallClass};

pub const TRUNC_ENV: &str = "WALLX_TRUNC";

/// Exit status for a completed run whose checks all passed.
pub const EXIT_OK: i32 = 0;
/// A check failed, or a value that must be rational was not.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "wallx",
    version,
    about = "Exact wall-crossing terms and Donaldson invariants of P²"
)]
pub struct Cli {
    /// Truncation in units of q^(1/48); overrides WALLX_TRUNC. For `verify` it is the
    /// checked range of the identity and differential-equation suites.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub trunc: Option<i64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Wall-crossing terms δ_ξ(α^a p^r), a + 2r ≤ degree, for one class α.
    Delta {
        #[arg(long, allow_negative_numbers = true)]
        xi_sq: i64,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        sigma: i64,
        /// ξ/2·α as a rational, e.g. 1/2.
        #[arg(long, allow_hyphen_values = true)]
        pair: Rational,
        /// Q(α) as a rational.
        #[arg(long, allow_hyphen_values = true)]
        quad: Rational,
        #[arg(long)]
        degree: u32,
    },
    /// Donaldson invariants Φ(Ȟ^(N-2r) p^r) of P² for N ≤ max-degree.
    P2 {
        #[arg(long)]
        c1: C1Arg,
        #[arg(long, allow_negative_numbers = true)]
        max_degree: i64,
        /// Assemble wall by wall instead of from the closed double sum.
        #[arg(long)]
        wallsum: bool,
    },
    /// Walls of type N between the standard chambers.
    Walls {
        #[arg(long, value_enum)]
        geometry: WallSet,
        #[arg(long)]
        degree: u32,
        /// Use the generic lattice enumerator rather than the closed form.
        #[arg(long)]
        brute_force: bool,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 3)]
        kmax: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum C1Arg {
    #[value(name = "H", alias = "h")]
    H,
    #[value(name = "0")]
    Zero,
}

impl From<C1Arg> for C1 {
    fn from(c: C1Arg) -> Self {
        match c {
            C1Arg::H => C1::H,
            C1Arg::Zero => C1::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WallSet {
    /// P¹×P¹ between F and G.
    P1xp1,
    /// P²#P̄², walls with ξ ≡ H mod 2.
    BlowupH,
    /// P²#P̄², walls with ξ ≡ E mod 2.
    BlowupE,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Recursions,
    Diffeq,
    Blowup,
    Residues,
    Qin,
    All,
}

/// Rendered output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

pub fn header() -> String {
    format!(
        "# wallx {}; signs: leading term of each wall-crossing term positive (differs from other \
         published conventions by signs and powers of 2)",
        env!("CARGO_PKG_VERSION")
    )
}

/// Exit status for a library error: bad input is a usage error, anything else a failure.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Invalid(_)
        | Error::NonNegativeXiSq(_)
        | Error::UnboundedSearch(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn env_trunc() -> Result<Option<i64>> {
    match std::env::var(TRUNC_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("{TRUNC_ENV} must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Default checked range of the identity suite: q-exponent 20.
pub const IDENTITY_RANGE: i64 = 20 * UNIT;
/// Default checked range of the differential-equation suite: q-exponent 10.
pub const DIFFEQ_RANGE: i64 = 10 * UNIT;

pub fn diffeq_caps() -> LambdaCaps {
    LambdaCaps::new(6, 3, 2, 3)
}

pub const BLOWUP_XI_SQ: [i64; 8] = [-3, -4, -5, -6, -7, -8, -9, -10];
pub const BLOWUP_DEGREE: u32 = 8;

/// Blowup identities over `ξ² ∈ {-3..-10}`, `σ ∈ {-2..2}` and the fixed test classes.
pub fn blowup_suite(
    xi_sqs: &[i64],
    sigmas: std::ops::RangeInclusive<i64>,
    degree: u32,
) -> Result<Report> {
    let mut rep = Report::new("blowup");
    for sigma in sigmas {
        for (hn, hd, qn, qd) in wallcross::BLOWUP_TEST_POINTS {
            rep.extend(wallcross::blowup_consistency_at(
                xi_sqs,
                sigma,
                degree,
                &Rational::new(hn, hd),
                &Rational::new(qn, qd),
            )?);
        }
    }
    Ok(rep)
}

pub fn residue_suite(k_max: u32) -> Result<Report> {
    let mut rep = Report::new("residues");
    for k in 1..=k_max {
        let v = wallcross::h_k_residue(k, None)?;
        rep.push(
            format!("[q^0] G_{}·Δ/φ^{} = 0", 4 * k, 2 * k + 5),
            v.is_zero(),
            format!("value {v}"),
        );
    }
    Ok(rep)
}

fn run_suite(suite: Suite, trunc: Option<i64>, k_max: u32) -> Result<Vec<Report>> {
    let one = |s: Suite| -> Result<Report> {
        match s {
            Suite::Identities => Ok(identity_suite(trunc.unwrap_or(IDENTITY_RANGE))),
            Suite::Recursions => wallcross::recursion_suite(RecursionGrid::default(), 0),
            Suite::Diffeq => {
                wallcross::diffeq_suite(diffeq_caps(), 0, trunc.unwrap_or(DIFFEQ_RANGE))
            }
            Suite::Blowup => blowup_suite(&BLOWUP_XI_SQ, -2..=2, BLOWUP_DEGREE),
            Suite::Residues => residue_suite(k_max),
            Suite::Qin => donaldson::qin_vanishing(k_max),
            Suite::All => unreachable!(),
        }
    };
    if suite == Suite::All {
        [
            Suite::Identities,
            Suite::Recursions,
            Suite::Diffeq,
            Suite::Blowup,
            Suite::Residues,
            Suite::Qin,
        ]
        .into_iter()
        .map(one)
        .collect()
    } else {
        Ok(vec![one(suite)?])
    }
}

fn walls_for(set: WallSet, degree: u32, brute: bool) -> Result<Vec<WallClass>> {
    if brute {
        let (geom, parity) = match set {
            WallSet::P1xp1 => (Geometry::P1xP1, vec![1, 1]),
            WallSet::BlowupH => (Geometry::BlowupP2, vec![1, 0]),
            WallSet::BlowupE => (Geometry::BlowupP2, vec![0, 1]),
        };
        return geom.enumerate(&parity, degree);
    }
    Ok(match set {
        WallSet::P1xp1 => walls_P1xP1(degree),
        WallSet::BlowupH => walls_blowupP2_h(degree),
        WallSet::BlowupE => walls_blowupP2_e(degree),
    })
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Executes a parsed command. The header line is part of table output only, so
/// JSON output stays machine-readable.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let trunc = match cli.trunc {
        Some(t) => Some(t),
        None => env_trunc()?,
    };
    let mut out = String::new();
    if cli.format == Format::Table {
        out.push_str(&header());
        out.push('\n');
    }
    let mut exit_code = EXIT_OK;
    match &cli.command {
        Command::Delta {
            xi_sq,
            sigma,
            pair,
            quad,
            degree,
        } => {
            let cyc = CycleData::rational(pair.clone(), quad.clone());
            let table = wallcross::delta_eval_with(*xi_sq, *sigma, &cyc, *degree, trunc)?;
            match cli.format {
                Format::Json => out.push_str(&json(&table)),
                Format::Table => {
                    let _ = writeln!(
                        out,
                        "xi^2 = {xi_sq}, sigma = {sigma}, xi/2.alpha = {pair}, Q(alpha) = {quad}"
                    );
                    let _ = writeln!(out, "{:>4} {:>4}  value", "a", "r");
                    for ((a, r), v) in &table.entries {
                        let _ = writeln!(out, "{:>4} {r:>4}  {v}", a[0]);
                    }
                }
            }
        }
        Command::P2 {
            c1,
            max_degree,
            wallsum,
        } => {
            let n = u32::try_from(*max_degree).map_err(|_| {
                Error::Invalid(format!(
                    "--max-degree must be nonnegative, got {max_degree}"
                ))
            })?;
            let c1 = C1::from(*c1);
            let table = if *wallsum {
                donaldson::phi_via_wallsum_with(c1, n, trunc)?
            } else {
                donaldson::phi_p2_with(c1, n, trunc)?
            };
            match cli.format {
                Format::Json => out.push_str(&json(&table)),
                Format::Table => out.push_str(&table.to_table_string()),
            }
        }
        Command::Walls {
            geometry,
            degree,
            brute_force,
        } => {
            let walls = walls_for(*geometry, *degree, *brute_force)?;
            match cli.format {
                Format::Json => out.push_str(&json(&walls)),
                Format::Table => {
                    let _ = writeln!(out, "{} walls of type {degree}", walls.len());
                    for w in &walls {
                        let _ = writeln!(out, "{:?}  xi^2 = {}", w.coords, w.xi_sq);
                    }
                }
            }
        }
        Command::Verify { suite, kmax } => {
            let reports = run_suite(*suite, trunc, *kmax)?;
            if reports.iter().any(|r| !r.all_passed()) {
                exit_code = EXIT_FAILURE;
            }
            match cli.format {
                Format::Json => out.push_str(&json(&reports)),
                Format::Table => {
                    for r in &reports {
                        out.push_str(&r.to_string());
                    }
                    let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
                    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
                    let _ = writeln!(out, "{} of {total} checks passed", total - failed);
                }
            }
        }
    }
    Ok(Outcome {
        stdout: out,
        exit_code,
    })
}

/// Parses `args` (program name first) and runs; errors become messages and exit codes.
pub fn main_with_args<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                (String::new(), text, code)
            } else {
                (text, String::new(), code)
            };
        }
    };
    match run(&cli) {
        Ok(o) => (o.stdout, String::new(), o.exit_code),
        Err(e) => (String::new(), format!("error: {e}\n"), exit_code_for(&e)),
    }
}
