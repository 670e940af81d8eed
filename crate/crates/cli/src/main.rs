use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use curvdecay::inequality::{sobolev_constant_domain, sobolev_constant_submanifold, InequalityParams};
use curvdecay_cli::emit::format_f64;
use curvdecay_cli::{
    emit_report, exit_code, run_scenarios, CliError, ConfigFile, Format, RunOptions, Status, EXIT_USAGE,
};

#[derive(Parser)]
#[command(
    name = "curvdecay",
    version,
    about = "Verify comparison-geometry inequalities under quadratic curvature decay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file and write a report
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        workers: Option<usize>,
        /// Seed for randomized scenarios that do not set their own
        #[arg(long)]
        seed: Option<u64>,
        /// Include wall times (makes the output run-dependent)
        #[arg(long)]
        timings: bool,
    },
    /// Print a Sobolev constant
    Constant {
        #[arg(long, value_enum)]
        case: Case,
        #[arg(long)]
        n: usize,
        /// Codimension (submanifold case)
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long = "B")]
        b: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        r0: f64,
    },
    /// Check a config file without running it
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Domain,
    Submanifold,
}

fn validate(path: &Path) -> Result<usize, CliError> {
    let cfg = ConfigFile::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(cfg.resolve(base)?.len())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run { config, out, format, workers, seed, timings } => {
            run_scenarios(&config, &RunOptions { workers, seed, timings }).and_then(|reports| {
                let path = emit_report(&reports, format, &out)?;
                for r in &reports {
                    eprintln!("{:<40} {:?}", r.scenario_id, r.status);
                    for m in r.messages.iter().filter(|_| r.status != Status::Pass) {
                        eprintln!("    {m}");
                    }
                }
                eprintln!("wrote {}", path.display());
                Ok(exit_code(&reports))
            })
        }
        Command::Constant { case, n, p, theta, b, b1, r0 } => {
            let q = InequalityParams { n, p, theta, b, b1, r0 };
            let c = match case {
                Case::Domain => sobolev_constant_domain(&q),
                Case::Submanifold => sobolev_constant_submanifold(&q),
            };
            c.map(|c| {
                println!("{}", format_f64(c));
                0
            })
            .map_err(|e| CliError::Usage(e.to_string()))
        }
        Command::Validate { config } => validate(&config).map(|n| {
            println!("{}: {n} scenario(s) ok", config.display());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
