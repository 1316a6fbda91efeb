//! Command-line front end. Every command returns its process exit code.

pub mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hyperfactor_core::combinatorics::bound_holds;
use hyperfactor_core::document::{parse_certificate, parse_instance, serialize_certificate, serialize_instance};
use hyperfactor_core::generate::{random_instance, single_edge_instance, RPattern};
use hyperfactor_core::model::{admissibility_violation, Instance, Parameters};
use hyperfactor_core::pipeline::{extend, ExtendError, ExtendOptions};
use hyperfactor_core::verify::verify_certificate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_BOUND: i32 = 3;
pub const EXIT_INVALID_INPUT: i32 = 4;
pub const EXIT_STUCK: i32 = 5;
pub const EXIT_INTERNAL: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "hyperfactor", version, about = "Extend partial r-factorizations of lambda K_m^h to lambda K_n^h")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extend an instance document to a verified certificate.
    Extend {
        instance: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Check a certificate against its instance.
    Verify { certificate: PathBuf, instance: PathBuf },
    /// Generate a random valid instance.
    Gen {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        h: u32,
        #[arg(long, default_value_t = 1)]
        lambda: u64,
        /// `ones`, `const:<c>` or a list such as `2,2,1,1,1`.
        #[arg(long, default_value = "ones")]
        r: String,
        #[arg(long, env = "HYPERFACTOR_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a grid of generated instances and tabulate the outcomes as CSV.
    Sweep {
        grid: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also run cells at or below the threshold.
        #[arg(long)]
        force: bool,
        /// Write 0 in the millis column so output is reproducible.
        #[arg(long)]
        no_timing: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build an r-factorization of lambda K_n^h from a single seeded edge.
    Baranyai {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        h: u32,
        #[arg(long, default_value_t = 1)]
        lambda: u64,
        #[arg(long, default_value = "ones")]
        r: String,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Run below the threshold (best effort; may exit 5).
    #[arg(long)]
    pub force: bool,
    /// Shuffle the greedy coloring order.
    #[arg(long, env = "HYPERFACTOR_SEED")]
    pub seed: Option<u64>,
    /// Write JSON-lines trace records here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("hyperfactor: {message}");
    code
}

fn read(path: &Path) -> Result<String, i32> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_FAILURE, format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), i32> {
    let result = match path {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| fail(EXIT_FAILURE, format!("cannot write output: {e}")))
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Extend { instance, run } => cmd_extend(&instance, &run),
        Command::Verify { certificate, instance } => cmd_verify(&certificate, &instance),
        Command::Gen { n, m, h, lambda, r, seed, output } => cmd_gen(n, m, h, lambda, &r, seed, output.as_deref()),
        Command::Sweep { grid, jobs, force, no_timing, output } => {
            sweep::cmd_sweep(&grid, jobs, force, no_timing, output.as_deref())
        }
        Command::Baranyai { n, h, lambda, r, run } => cmd_baranyai(n, h, lambda, &r, &run),
    };
    result.unwrap_or_else(|code| code)
}

/// Exit code for a failed extension.
pub fn exit_code(err: &ExtendError, forced: bool) -> i32 {
    match err {
        ExtendError::Inadmissible(_) => EXIT_INADMISSIBLE,
        ExtendError::BoundViolated { .. } => EXIT_BOUND,
        ExtendError::InvalidInstance(_) => EXIT_INVALID_INPUT,
        ExtendError::GreedyStuck { .. } | ExtendError::NegativeAlphaHCount { .. } if forced => EXIT_STUCK,
        _ => EXIT_INTERNAL,
    }
}

fn run_extension(inst: &Instance, flags: &RunFlags) -> Result<i32, i32> {
    let options = ExtendOptions { force: flags.force, seed: flags.seed, trace: flags.trace.is_some() };
    let p = inst.params();
    if flags.force && !bound_holds(p.n() as u64, p.m() as u64, p.h() as u64) {
        eprintln!("hyperfactor: n = {} is not above the threshold; running best effort", p.n());
    }
    let ext = extend(inst, &options).map_err(|e| fail(exit_code(&e, flags.force), e))?;
    if let Some(path) = &flags.trace {
        let mut lines = String::new();
        for record in &ext.trace {
            lines.push_str(&serde_json::to_string(record).expect("trace serializes"));
            lines.push('\n');
        }
        fs::write(path, lines).map_err(|e| fail(EXIT_FAILURE, format!("cannot write trace: {e}")))?;
    }
    write_output(flags.output.as_deref(), &serialize_certificate(&ext.certificate))?;
    Ok(EXIT_OK)
}

pub fn cmd_extend(path: &Path, flags: &RunFlags) -> Result<i32, i32> {
    let text = read(path)?;
    let inst = parse_instance(&text).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    run_extension(&inst, flags)
}

pub fn cmd_verify(cert_path: &Path, inst_path: &Path) -> Result<i32, i32> {
    let cert = parse_certificate(&read(cert_path)?).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    let inst = parse_instance(&read(inst_path)?).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    let report = verify_certificate(&cert, &inst);
    let mut text = serde_json::to_string(&report).expect("report serializes");
    text.push('\n');
    write_output(None, &text)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE })
}

fn resolve_params(n: u32, m: u32, h: u32, lambda: u64, r: &str) -> Result<Parameters, i32> {
    let pattern: RPattern = r.parse().map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    if h < 2 || n == 0 {
        return Err(fail(EXIT_INVALID_INPUT, "need h >= 2 and n >= 1"));
    }
    let r = pattern.resolve(n, h, lambda).map_err(|e| fail(EXIT_INADMISSIBLE, e))?;
    let params = Parameters::new(n, m, h, lambda, r).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    if let Some(why) = admissibility_violation(&params) {
        return Err(fail(EXIT_INADMISSIBLE, why));
    }
    Ok(params)
}

pub fn cmd_gen(n: u32, m: u32, h: u32, lambda: u64, r: &str, seed: u64, output: Option<&Path>) -> Result<i32, i32> {
    let params = resolve_params(n, m, h, lambda, r)?;
    let inst = random_instance(&params, seed).map_err(|e| fail(EXIT_FAILURE, e))?;
    write_output(output, &serialize_instance(&inst))?;
    Ok(EXIT_OK)
}

pub fn cmd_baranyai(n: u32, h: u32, lambda: u64, r: &str, flags: &RunFlags) -> Result<i32, i32> {
    let params = resolve_params(n, h, h, lambda, r)?;
    let inst = single_edge_instance(n, h, lambda, params.r().to_vec()).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    run_extension(&inst, flags)
}
