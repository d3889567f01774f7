use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::Scenario;
use crate::CliError;

/// 17 significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    scenario: &'a Scenario,
    seed: u64,
    grid_points: usize,
    tolerance: f64,
    outputs: &'a [String],
}

/// Files written by one command. Wall-clock times go to `timings.txt` so that
/// the manifest itself is reproducible.
pub struct Artifacts {
    dir: PathBuf,
    command: &'static str,
    outputs: Vec<String>,
    timings: Vec<(&'static str, f64)>,
    /// Set once a solution has been written.
    pub solved: bool,
    quiet: bool,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &'static str, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command, outputs: Vec::new(), timings: Vec::new(), solved: false, quiet })
    }

    pub fn say(&self, line: String) {
        if !self.quiet {
            println!("{line}");
        }
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::config(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn time(&mut self, stage: &'static str, since: Instant) {
        self.timings.push((stage, since.elapsed().as_secs_f64()));
    }

    pub fn finish(mut self, scenario: &Scenario, tolerance: f64) -> Result<(), CliError> {
        let mut outputs = self.outputs.clone();
        outputs.push("manifest.json".into());
        outputs.push("timings.txt".into());
        let manifest = Manifest {
            tool: "contest",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            scenario,
            seed: scenario.simulation.seed,
            grid_points: scenario.solver.grid_points,
            tolerance,
            outputs: &outputs,
        };
        self.write_json("manifest.json", &manifest)?;
        let mut t = String::from("stage\tseconds\n");
        for (stage, secs) in &self.timings {
            t.push_str(&format!("{stage}\t{secs:.6}\n"));
        }
        fs::write(self.dir.join("timings.txt"), t)?;
        Ok(())
    }
}
