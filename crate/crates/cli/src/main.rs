use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isa_cli::commands::{self, Figure2Params};
use isa_cli::config::parse_sequence;
use isa_cli::output::to_json;
use isa_cli::{CliError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "isa", version, about = "Infeasible-point subgradient solver for Basis Pursuit")]
struct Cli {
    /// Suppress the report printed to stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Basis Pursuit instance with a planted sparse solution.
    Generate {
        #[arg(long, default_value_t = 128)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        support: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the solver from a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for trace.csv and summary.json, overriding the config paths.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two-step CG projections against high-accuracy projections.
    Figure2 {
        /// Instance file with a planted solution; a generated one is used otherwise.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 128)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        support: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Relaxation sequence, e.g. `1`, `constant:0.5` or `log_decay:1`.
        #[arg(long, default_value = "constant:1")]
        lambda: String,
        #[arg(long, default_value_t = 20_000)]
        max_iterations: usize,
        /// Record wall-clock times in comparison.json.
        #[arg(long)]
        timing: bool,
    },
    /// Validate an instance file.
    Check { path: PathBuf },
}

fn init_logging() {
    let level = std::env::var("ISA_LOG_LEVEL").unwrap_or_else(|_| "error".into());
    env_logger::Builder::new().parse_filters(&level).init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { m, support, seed, out } => {
            let inst = commands::cmd_generate(m, support, seed, &out)?;
            if !cli.quiet {
                println!(
                    "wrote {} ({}x{}) sigma_min = {} erc_value = {} certified = {}",
                    out.display(),
                    inst.m(),
                    inst.n(),
                    inst.sigma_min(),
                    inst.erc_value.map_or("none".into(), |e| e.to_string()),
                    inst.certified()
                );
            }
        }
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            log::info!("running {:?} on {:?}", cfg.variant, cfg.problem);
            let outcome = commands::cmd_run(&cfg, out.as_deref())?;
            if !cli.quiet {
                print!("{}", to_json(&outcome.summary));
            }
        }
        Command::Figure2 {
            instance,
            m,
            support,
            seed,
            out,
            lambda,
            max_iterations,
            timing,
        } => {
            let inst = match instance {
                Some(p) => commands::load_instance(&p)?,
                None => isa_core::generate_instance(m, support, seed)?,
            };
            let params = Figure2Params {
                lambda: parse_sequence(&lambda)?,
                max_iterations,
                timing,
                concurrent: true,
            };
            let outcome = commands::cmd_figure2(&inst, &params, &out)?;
            if !cli.quiet {
                print!("{}", to_json(&outcome.comparison(&params)));
            }
        }
        Command::Check { path } => {
            let report = commands::cmd_check(&path)?;
            if !cli.quiet {
                print!("{}", to_json(&report));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
