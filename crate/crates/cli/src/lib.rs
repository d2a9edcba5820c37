//! Scenario-driven runner for `qmx-core`: loads a JSON scenario, runs its
//! tasks in order and writes a JSON report or a CSV bundle.

pub mod build;
pub mod emit;
pub mod error;
pub mod pipeline;
pub mod scenario;

pub use emit::{emit, to_json, Format};
pub use error::CliError;
pub use pipeline::{run, Report, TaskOutcome, TaskStatus};
pub use scenario::{load_scenario, parse_scenario, Scenario};

use std::path::{Path, PathBuf};

/// Directory holding the shipped scenarios.
pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Names of the shipped scenarios, sorted.
pub fn shipped_scenarios() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(scenarios_dir())
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

/// Path of a shipped scenario by name, or the argument itself when it names
/// an existing file.
pub fn resolve_scenario(arg: &str) -> PathBuf {
    let p = PathBuf::from(arg);
    if p.exists() {
        return p;
    }
    scenarios_dir().join(format!("{arg}.json"))
}
