use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use qmx_cli::{emit, load_scenario, resolve_scenario, run, shipped_scenarios, CliError, Format};

#[derive(Parser)]
#[command(name = "qmx", version, about = "Quasimorphism extension toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario and write the report.
    Run {
        /// Scenario file, or the name of a shipped scenario.
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a scenario against the schema without running it.
    Validate { scenario: String },
    /// Shipped scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
}

fn fail(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    let code = e.downcast_ref::<CliError>().map_or(3, CliError::exit_code);
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Scenarios { action: ScenarioAction::List } => {
            for name in shipped_scenarios() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario } => match load_scenario(&resolve_scenario(&scenario)) {
            Ok(sc) => {
                println!("{}: ok ({} tasks)", sc.name, sc.tasks.len());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&anyhow::Error::new(e)),
        },
        Command::Run { scenario, out, format, seed } => {
            let result = (|| -> anyhow::Result<i32> {
                let sc = load_scenario(&resolve_scenario(&scenario))?;
                let report = run(&sc, seed)?;
                let files = emit(&report, format, &out).with_context(|| format!("writing to {}", out.display()))?;
                for t in &report.tasks {
                    match &t.error {
                        None => println!("{:>2} {:<26} {:?}", t.index, t.name, t.status),
                        Some(e) => println!("{:>2} {:<26} {:?}: {e}", t.index, t.name, t.status),
                    }
                }
                for f in files {
                    println!("wrote {}", f.display());
                }
                Ok(report.exit_code())
            })();
            match result {
                Ok(code) => ExitCode::from(code as u8),
                Err(e) => fail(&e),
            }
        }
    }
}
