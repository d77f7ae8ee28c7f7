use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use tqpsim_cli::commands::{self, AlgebraParams, EntropyParams, FidelityParams, MsuqcParams};
use tqpsim_cli::{CliError, Context, Outcome, Overrides, THREADS_ENV};

/// Simulator for two-qumode parity encoded computation.
///
/// Thread count precedence: --threads, then TQPSIM_THREADS, then the
/// config file's "threads", then one worker per core.
#[derive(Parser)]
#[command(name = "tqpsim", version)]
struct Cli {
    /// JSON config: {"seed", "out", "cutoff", "threads", "params": {...}}.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file; CSV commands also write <PATH>.json.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Fock cutoff override.
    #[arg(long, global = true, value_name = "INT")]
    cutoff: Option<usize>,
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy and Landauer cost over an <n> grid (CSV + JSON).
    EntropySweep,
    /// Controlled-parity fidelity curves (CSV + JSON).
    FidelitySweep {
        /// Integrate the master equation with the configured bath.
        #[arg(long)]
        noisy: bool,
    },
    /// Operator algebra and gate-circuit checks (JSON).
    AlgebraCheck,
    /// Random-circuit mixed vs pure vs qubit comparison (JSON).
    MsuqcDemo,
    /// Collective-noise subsystem checks (JSON).
    NsCheck,
}

fn resolve<P: DeserializeOwned + Default>(o: &Overrides, default_out: &str) -> Result<(Context, P), CliError> {
    let env = std::env::var(THREADS_ENV).ok();
    Context::resolve(o, env.as_deref(), default_out)
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let o = Overrides {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        cutoff: cli.cutoff,
        threads: cli.threads,
    };
    match cli.command {
        Command::EntropySweep => {
            let (ctx, p) = resolve::<EntropyParams>(&o, "entropy-sweep.csv")?;
            commands::entropy_sweep(&p, &ctx)
        }
        Command::FidelitySweep { noisy } => {
            let (ctx, mut p) = resolve::<FidelityParams>(&o, "fidelity-sweep.csv")?;
            p.noisy |= noisy;
            commands::fidelity_sweep(&p, &ctx)
        }
        Command::AlgebraCheck => {
            let (ctx, p) = resolve::<AlgebraParams>(&o, "algebra-check.json")?;
            commands::algebra_check(&p, &ctx)
        }
        Command::MsuqcDemo => {
            let (ctx, p) = resolve::<MsuqcParams>(&o, "msuqc-demo.json")?;
            commands::msuqc_demo(&p, &ctx)
        }
        Command::NsCheck => {
            let (ctx, p) = resolve::<tqpsim::ns::NsConfig>(&o, "ns-check.json")?;
            commands::ns_check(&p, &ctx)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for c in outcome.failed_checks() {
                eprintln!("FAIL {}: {:e} (bound {:e})", c.name, c.value, c.bound);
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("tqpsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
