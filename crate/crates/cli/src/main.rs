use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpsim::generators::{brickwork, ghz_qasm, Entangler};
use mpsim_cli::{
    bench_csv, cmd_bench, cmd_run, sidecar_json, Backend, BenchConfig, CliError, Family, Nonlocal, RunConfig,
    Source, WORKERS_ENV,
};

/// Matrix-product-state quantum circuit simulator.
#[derive(Debug, Parser)]
#[command(name = "mpsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an OpenQASM 2.0 file and print a JSON report.
    Run(RunArgs),
    /// Print a GHZ preparation circuit.
    GenGhz(GhzArgs),
    /// Print a seeded brickwork circuit.
    GenBrickwork(BrickworkArgs),
    /// Sweep generated circuits over sizes, backends, workers and bond caps.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value_t = Nonlocal::Swap)]
    nonlocal: Nonlocal,
    /// Cutoff on discarded weight per SVD, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    cutoff: f64,
    /// Number of measurement shots; 0 skips sampling.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    qasm: PathBuf,
    /// JSON list of 4x4 matrices referenced by `unitary2(k)` statements.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Backend::MpsSerial)]
    backend: Backend,
    /// Maximum bond dimension; unbounded if omitted.
    #[arg(long)]
    max_bond: Option<usize>,
    /// Worker threads for mps-parallel (default: available cores).
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Force a single worker.
    #[arg(long)]
    deterministic: bool,
    /// Cap on cached sampling prefixes.
    #[arg(long)]
    cache_cap: Option<usize>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Args)]
struct GhzArgs {
    #[arg(long, short)]
    n: usize,
    /// Append `measure q -> c`.
    #[arg(long)]
    measure: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BrickworkArgs {
    #[arg(long, short)]
    n: usize,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Haar-random entanglers written as `unitary2(k)`; requires --sidecar.
    #[arg(long, requires = "sidecar")]
    haar: bool,
    /// Where to write the matrix list for --haar.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Family::Brickwork)]
    family: Family,
    #[arg(long, value_delimiter = ',', required = true)]
    qubits: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long)]
    haar: bool,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mps-serial")]
    backend: Vec<Backend>,
    #[arg(long, value_delimiter = ',', env = WORKERS_ENV, default_value = "1")]
    workers: Vec<usize>,
    /// Bond caps to sweep; omit for unbounded.
    #[arg(long, value_delimiter = ',')]
    max_bond: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Also write a flattened CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    sim: SimArgs,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(a) => {
            let mut config = RunConfig::new(
                Source::Qasm {
                    path: a.qasm,
                    sidecar: a.sidecar,
                },
                a.backend,
            );
            config.nonlocal = a.sim.nonlocal;
            config.max_bond = a.max_bond;
            config.cutoff = a.sim.cutoff;
            config.shots = a.sim.shots;
            config.seed = a.sim.seed;
            config.workers = if a.deterministic { 1 } else { a.workers.unwrap_or_else(default_workers) };
            config.cache_cap = a.cache_cap;
            let output = cmd_run(&config)?;
            emit(&to_json(&output), a.sim.out.as_deref())
        }
        Command::GenGhz(a) => {
            if a.n < 2 {
                return Err(CliError::Config("-n must be at least 2".into()));
            }
            emit(ghz_qasm(a.n, a.measure).trim_end(), a.out.as_deref())
        }
        Command::GenBrickwork(a) => {
            if a.n < 2 || a.depth < 1 {
                return Err(CliError::Config("need -n >= 2 and --depth >= 1".into()));
            }
            let entangler = if a.haar { Entangler::Haar } else { Entangler::Cx };
            let b = brickwork(a.n, a.depth, a.seed, entangler);
            if let Some(path) = &a.sidecar {
                std::fs::write(path, sidecar_json(&b.unitaries))
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            }
            emit(b.qasm.trim_end(), a.out.as_deref())
        }
        Command::Bench(a) => {
            let config = BenchConfig {
                family: a.family,
                qubits: a.qubits,
                depth: a.depth,
                seed: a.sim.seed,
                haar: a.haar,
                backends: a.backend,
                workers: a.workers,
                max_bonds: if a.max_bond.is_empty() {
                    vec![None]
                } else {
                    a.max_bond.into_iter().map(Some).collect()
                },
                cutoff: a.sim.cutoff,
                nonlocal: a.sim.nonlocal,
                shots: a.sim.shots,
                repeats: a.repeats,
            };
            let records = cmd_bench(&config)?;
            if let Some(path) = &a.csv {
                std::fs::write(path, bench_csv(config.family, &records)?)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            }
            emit(&to_json(&records), a.sim.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
