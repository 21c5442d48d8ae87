//! `congruence`: runs the checks of `congruence-core` and emits JSON reports.
//!
//! Exit codes: 0 when every assertion of the run holds, 1 on an assertion
//! failure, 2 on a configuration error, 3 when a budget cap is exceeded.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use congruence_core::report::{self, Report};
use serde::Serialize;

pub const CLOSURE_CAP_ENV: &str = "CONGRUENCE_CLOSURE_CAP";
pub const ENUM_CAP_ENV: &str = "CONGRUENCE_ENUM_CAP";

#[derive(Parser, Debug)]
#[command(
    name = "congruence",
    version,
    about = "Exact checks for congruence subgroups of SL(2, Z_p)"
)]
struct Cli {
    /// Print the JSON Schema of the report and exit
    #[arg(long, global = true)]
    json_schema: bool,

    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write the records as CSV
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Seed for every random choice in the run
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Report timing as 0 so repeated runs are byte-identical
    #[arg(long, global = true)]
    no_timing: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Approximate a Lie subalgebra by a proper isolated one
    Approx(ApproxArgs),
    /// Nori round trips over F_p and Z/p^N
    Nori(NoriArgs),
    /// Commutator volume of x against a subgroup K of SL(2, Z/p^n)
    Phi(PhiArgs),
    /// Fixed points of an integer matrix on SL(2, Z)/Δ
    Cdelta(CdeltaArgs),
    /// Zero counts of a polynomial with their bounds
    Count(CountArgs),
    /// Seeded exp/log round trips
    ExplogSelftest(ExplogArgs),
    /// Merge report files into one
    ReportMerge(MergeArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ApproxArgs {
    #[arg(long)]
    pub p: u64,
    /// Level exponent of the input subalgebra
    #[arg(long)]
    pub n: u32,
    /// Working precision (default n + 2)
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub precision: Option<u32>,
    /// Use the worst-case subalgebra p^(n/2) ker(φ) + p^n sl(2)
    #[arg(long)]
    pub worst_case: bool,
    /// Point c0 = (c1, c2, c3) defining φ for --worst-case
    #[arg(long, default_value = "1,0,0", value_delimiter = ',')]
    pub c0: Vec<i64>,
    /// Lattice file {"p":…, "N":…, "columns":[[e,h,f], …]}
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Search all proper isolated subalgebras above the achieved exponent
    #[arg(long)]
    pub certify_optimality: bool,
    /// Enable the p = 2 variant
    #[arg(long)]
    pub allow_p2: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct NoriArgs {
    #[arg(long)]
    pub p: u64,
    /// Run the F_p round trip
    #[arg(long)]
    pub roundtrip: bool,
    /// Also run the p-adic round trip at this precision
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub precision: Option<u32>,
    /// Number of sampled subgroups for the p-adic round trip
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PhiArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub n: u32,
    /// gamma0, gamma1, all, trivial, or principal:k
    #[arg(long = "K", default_value = "gamma0")]
    pub k: String,
    /// Matrix as JSON, e.g. "[[1,1],[0,1]]"; omit to sweep upper-triangular x
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct CdeltaArgs {
    /// Matrix in SL(2, Z) as JSON
    #[arg(long, default_value = "[[1,1],[0,1]]")]
    pub gamma: String,
    /// Δ = Γ_0(M)
    #[arg(long, conflicts_with = "gamma_full")]
    pub gamma0: Option<u64>,
    /// Δ = Γ(M)
    #[arg(long)]
    pub gamma_full: Option<u64>,
    /// Emit the decay table for Γ_0(p^n) instead
    #[arg(long)]
    pub decay_table: bool,
    #[arg(long, default_value = "3,5,7", value_delimiter = ',')]
    pub primes: Vec<u64>,
    #[arg(long, default_value_t = 3)]
    pub n_max: u32,
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    /// Polynomial, e.g. "x0^2 + x1^2" or "a*d - b*c"
    #[arg(long)]
    pub poly: String,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// affine, sl2, or schmidt
    #[arg(long, default_value = "affine")]
    pub mode: String,
}

#[derive(Args, Debug, Serialize)]
pub struct ExplogArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 6)]
    #[serde(rename = "N")]
    pub precision: u32,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct MergeArgs {
    /// Report files to merge
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

/// Budgets for one run; only these may come from the environment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Budgets {
    pub closure_cap: usize,
    /// replaces every command's default enumeration cap when set
    pub enumeration_cap: Option<u128>,
}

impl Budgets {
    fn from_env() -> Result<Self, Failure> {
        fn read<T: std::str::FromStr>(name: &str) -> Result<Option<T>, Failure> {
            match std::env::var(name) {
                Ok(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|_| Failure::Config(format!("{name}={v} is not a number"))),
                Err(_) => Ok(None),
            }
        }
        Ok(Budgets {
            closure_cap: read(CLOSURE_CAP_ENV)?
                .unwrap_or(congruence_core::padic::DEFAULT_CLOSURE_CAP),
            enumeration_cap: read(ENUM_CAP_ENV)?,
        })
    }

    pub fn enumeration(&self, default: u128) -> u128 {
        self.enumeration_cap.unwrap_or(default)
    }
}

/// Why a run stopped without a report.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Budget(String),
    Other(String),
}

impl From<congruence_core::Error> for Failure {
    fn from(e: congruence_core::Error) -> Self {
        use congruence_core::Error as E;
        if e.is_budget() {
            return Failure::Budget(e.to_string());
        }
        match e {
            E::NotPrime(_)
            | E::ZeroPrecision
            | E::PrecisionOverflow { .. }
            | E::PrecisionExceeded { .. }
            | E::UnsupportedPrime { .. }
            | E::UnsupportedPrecision(_)
            | E::PreconditionViolation(_)
            | E::DomainViolation(_)
            | E::Parse(_)
            | E::ZeroModP(_)
            | E::ZeroPolynomial(_)
            | E::IdenticallyZeroOnV(_)
            | E::OutOfRange { .. }
            | E::NotSurjective
            | E::DegenerateSpan
            | E::Degenerate(_) => Failure::Config(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn write_csv(path: &PathBuf, records: &[serde_json::Value]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Other(format!("writing {}: {e}", path.display()));
    let mut columns: Vec<String> = Vec::new();
    for r in records {
        if let Some(obj) = r.as_object() {
            for k in obj.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&columns).map_err(io)?;
    for r in records {
        let row = columns.iter().map(|c| match r.get(c) {
            None | Some(serde_json::Value::Null) => String::new(),
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        });
        w.write_record(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Failure::Other(format!("writing {}: {e}", path.display())))
}

fn emit(cli: &Cli, report: &Report) -> Result<(), Failure> {
    let text = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Other(format!("writing {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(path) = &cli.csv {
        write_csv(path, &report.records)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.json_schema {
        println!(
            "{}",
            serde_json::to_string_pretty(&report::json_schema()).expect("schema serializes")
        );
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let outcome = Budgets::from_env().and_then(|budgets| {
        let start = Instant::now();
        let report = commands::run(command, cli.seed, budgets)?;
        let ms = if cli.no_timing {
            0
        } else {
            start.elapsed().as_millis() as u64
        };
        let report = report.finalize(ms);
        emit(&cli, &report)?;
        Ok(report.pass)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("budget exceeded: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
