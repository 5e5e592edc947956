use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flatnormal::config::{load_config, RunConfig};
use flatnormal::geometry::Engine;
use flatnormal::report::{self, Outcome};

#[derive(Parser)]
#[command(name = "flatnormal", version, about = "Checks for immersions with flat normal bundle between space forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss, Codazzi, connection and g0-flatness residuals over a grid.
    Verify(RunArgs),
    /// Distances, balls, volumes and the growth fit around an anchor.
    Growth(RunArgs),
    /// Principal-coordinate flow map and its checks.
    Coords(RunArgs),
    /// Catalog operations.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// List the built-in charts.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Ad,
    Fd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog chart when no config is given.
    #[arg(long, conflicts_with = "config")]
    chart: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Treat INDETERMINATE verdicts and warnings as failures.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn config(&self) -> flatnormal::Result<RunConfig> {
        let mut cfg = match (&self.config, &self.chart) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => RunConfig::for_chart(name),
            (None, None) => RunConfig::for_chart("pseudosphere"),
        };
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if let Some(e) = self.engine {
            cfg.engine = match e {
                EngineArg::Ad => Engine::Ad,
                EngineArg::Fd => Engine::fd(),
            };
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn finish(outcome: Outcome) -> ExitCode {
    print!("{}", outcome.summary);
    ExitCode::from(outcome.code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (RunArgs, fn(&RunConfig, bool) -> Outcome) = match cli.command {
        Command::Verify(a) => (a, report::run_verify),
        Command::Growth(a) => (a, report::run_growth),
        Command::Coords(a) => (a, report::run_coords),
        Command::Catalog { action: CatalogAction::List } => {
            print!("{}", report::catalog_listing());
            return ExitCode::SUCCESS;
        }
    };
    match args.config() {
        Ok(cfg) => finish(run(&cfg, args.strict)),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(report::error_code(&e) as u8)
        }
    }
}
