mod modfile;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcalc_core::decompose::BlockSide;
use pcalc_core::lattice::{CubeOptions, FinitePoset};
use pcalc_core::persmod::{random_module, PersistenceModule};
use pcalc_core::suites::{run_suites, SuiteConfig, SuiteName};
use pcalc_core::Error;
use serde_json::{json, Value};

use modfile::ModuleFile;
use report::{ApproxKind, DecomposeMode, Output};

#[derive(Parser)]
#[command(name = "pcalc", version, about = "Functor calculus for persistence modules over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Module file (JSON).
    file: PathBuf,
    /// Write the full JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Cap on candidate covers examined during cube enumeration.
    #[arg(long)]
    max_covers: Option<u64>,
}

impl Common {
    fn cube_options(&self) -> CubeOptions {
        let mut opts = CubeOptions::default();
        if let Some(cap) = self.max_covers {
            opts.max_covers = cap;
        }
        opts
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lattice profile and (co)degree, exactness and projectivity verdicts.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Check (co)degree n for n up to this value (default: the factor count).
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Codegree or degree approximation.
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "degree", required_unless_present = "degree")]
        codegree: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        /// Write the approximation as a module file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decompose the module.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "blocks")]
        mode: Mode,
        /// Which block side to use with --mode blocks.
        #[arg(long, value_enum, default_value = "codegree")]
        side: Side,
    },
    /// Koszul complexes of strongly bicartesian cubes.
    Koszul {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Top element of a single cube (with --cover).
        #[arg(long, requires = "cover")]
        top: Option<String>,
        /// Pairwise cover of --top, separated by ';'.
        #[arg(long, requires = "top")]
        cover: Option<String>,
    },
    /// Chain-level lift of T_1 F on a 2-factor grid.
    Lift {
        #[command(flatten)]
        common: Common,
    },
    /// Run the randomized property suites.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Largest grid to draw from, e.g. 4x4x3.
        #[arg(long, default_value = "4x4x3")]
        grid: String,
        /// Primes to draw from, comma separated.
        #[arg(long, default_value = "2,3,5")]
        primes: String,
        /// Break the checks on purpose (harness self-test).
        #[arg(long, hide = true)]
        inject_fault: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Emit a random module file.
    Gen {
        #[arg(long, default_value = "3x3")]
        grid: String,
        #[arg(long, default_value_t = 2)]
        prime: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        dmax: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Blocks,
    Intervals,
    Bkc,
    Bidegree1,
    Split,
    Free,
    Cofree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Codegree,
    Degree,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Lattice,
    Calculus,
    Exactness,
    Decompose,
    Homotopy,
    All,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Internal(_) => 1,
        Error::PreconditionFailed(_) | Error::NoSplitting(_) | Error::CostCapExceeded { .. } => 3,
        Error::PosetUnsupported(_) | Error::NotDistributive | Error::NotALattice { .. } => 4,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "InvalidInput",
        Error::NotALattice { .. } => "NotALattice",
        Error::NotDistributive => "NotDistributive",
        Error::NotAPairwiseCover { .. } => "NotAPairwiseCover",
        Error::NotBelow { .. } => "NotBelow",
        Error::CostCapExceeded { .. } => "CostCapExceeded",
        Error::MissingCoverMap(_) => "MissingCoverMap",
        Error::DimensionMismatch(_) => "DimensionMismatch",
        Error::CommutativityViolation { .. } => "CommutativityViolation",
        Error::NaturalityViolation(_) => "NaturalityViolation",
        Error::NotComparable(..) => "NotComparable",
        Error::NotAnInterval(_) => "NotAnInterval",
        Error::PosetUnsupported(_) => "PosetUnsupported",
        Error::PreconditionFailed(_) => "PreconditionFailed",
        Error::NoSplitting(_) => "NoSplitting",
        Error::Internal(_) => "Internal",
    }
}

fn read_module(path: &Path) -> pcalc_core::Result<PersistenceModule> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    ModuleFile::parse(&text)
}

fn write_json(path: &Path, value: &Value) -> pcalc_core::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn parse_shape(s: &str) -> pcalc_core::Result<Vec<usize>> {
    let shape: Option<Vec<usize>> = s.split(['x', 'X']).map(|t| t.trim().parse().ok().filter(|&n| n > 0)).collect();
    shape
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::InvalidInput(format!("bad grid shape {s:?}, expected e.g. 4x4x3")))
}

fn lookup(poset: &FinitePoset, label: &str) -> pcalc_core::Result<usize> {
    poset.index_of(label.trim()).ok_or_else(|| Error::InvalidInput(format!("unknown element {label:?}")))
}

fn run(cli: Cli) -> pcalc_core::Result<(Output, Option<PathBuf>)> {
    match cli.command {
        Command::Analyze { common, max_n } => {
            let f = read_module(&common.file)?;
            let factors = f.poset().shape().map_or(1, |s| s.len());
            let out = report::analyze(&f, max_n.unwrap_or(factors), &common.cube_options());
            Ok((out, common.json))
        }
        Command::Approx { common, codegree, degree, output } => {
            let f = read_module(&common.file)?;
            let kind = match (codegree, degree) {
                (Some(n), _) => ApproxKind::Codegree(n),
                (None, Some(n)) => ApproxKind::Degree(n),
                (None, None) => unreachable!("clap requires one of --codegree and --degree"),
            };
            let (out, module) = report::approx(&f, &kind)?;
            if let Some(path) = output {
                write_json(&path, &serde_json::to_value(&module).expect("module file serializes"))?;
            }
            Ok((out, common.json))
        }
        Command::Decompose { common, mode, side } => {
            let f = read_module(&common.file)?;
            let mode = match mode {
                Mode::Blocks => DecomposeMode::Blocks,
                Mode::Intervals => DecomposeMode::Intervals,
                Mode::Bkc => DecomposeMode::Bkc,
                Mode::Bidegree1 => DecomposeMode::Bidegree1,
                Mode::Split => DecomposeMode::Split,
                Mode::Free => DecomposeMode::Free,
                Mode::Cofree => DecomposeMode::Cofree,
            };
            let side = match side {
                Side::Codegree => BlockSide::Codegree,
                Side::Degree => BlockSide::Degree,
            };
            Ok((report::decompose(&f, mode, side)?, common.json))
        }
        Command::Koszul { common, k, top, cover } => {
            let f = read_module(&common.file)?;
            let cube = match (top, cover) {
                (Some(top), Some(cover)) => {
                    let poset = f.poset();
                    let xs = cover.split(';').map(|l| lookup(poset, l)).collect::<pcalc_core::Result<Vec<_>>>()?;
                    Some((lookup(poset, &top)?, xs))
                }
                _ => None,
            };
            Ok((report::koszul_report(&f, k, cube, &common.cube_options())?, common.json))
        }
        Command::Lift { common } => {
            let f = read_module(&common.file)?;
            Ok((report::lift(&f)?, common.json))
        }
        Command::Check { suite, seed, trials, grid, primes, inject_fault, json } => {
            let primes = primes
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad prime {t:?}")))
                        .and_then(pcalc_core::exactla::check_prime)
                })
                .collect::<pcalc_core::Result<Vec<u32>>>()?;
            let cfg = SuiteConfig { seed, trials, max_shape: parse_shape(&grid)?, primes, inject_fault };
            let names: Vec<SuiteName> = match suite {
                SuiteArg::Lattice => vec![SuiteName::Lattice],
                SuiteArg::Calculus => vec![SuiteName::Calculus],
                SuiteArg::Exactness => vec![SuiteName::Exactness],
                SuiteArg::Decompose => vec![SuiteName::Decompose],
                SuiteArg::Homotopy => vec![SuiteName::Homotopy],
                SuiteArg::All => SuiteName::ALL.to_vec(),
            };
            Ok((report::check(&run_suites(&names, &cfg), seed, trials), json))
        }
        Command::Gen { grid, prime, seed, dmax, output } => {
            pcalc_core::exactla::check_prime(prime)?;
            let poset = Arc::new(FinitePoset::grid(&parse_shape(&grid)?)?);
            let f = random_module(poset, prime, seed, dmax);
            let module = serde_json::to_value(ModuleFile::from_module(&f)).expect("module file serializes");
            match output {
                Some(path) => write_json(&path, &module)?,
                None => print_lines(&[serde_json::to_string_pretty(&module).expect("module file serializes")]),
            }
            let summary = vec![format!("random module on {grid} over GF({prime}), total dimension {}", f.total_dim())];
            Ok((Output { json: json!({ "command": "gen" }), summary, failed: false }, None))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet_stdout = matches!(&cli.command, Command::Gen { output: None, .. });
    match run(cli) {
        Ok((out, json_path)) => {
            if !quiet_stdout {
                print_lines(&out.summary);
            }
            if let Some(path) = json_path {
                if let Err(e) = write_json(&path, &out.json) {
                    return fail(&e);
                }
            }
            if out.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(&e),
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn print_lines(lines: &[String]) {
    let mut out = std::io::stdout().lock();
    for line in lines {
        if writeln!(out, "{line}").is_err() {
            return;
        }
    }
}

fn fail(e: &Error) -> ExitCode {
    let code = exit_code(e);
    eprintln!("{}", json!({ "error": error_kind(e), "message": e.to_string(), "exit_code": code }));
    ExitCode::from(code)
}
