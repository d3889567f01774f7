//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "fig1"
//!
//! [dist]
//! family = "power"
//! a = 2.0
//!
//! [mechanism]
//! n = 2
//! k = 1
//! eta = 1.0
//! alpha = 0.5
//!
//! [solver]
//! grid_points = 2001
//! ```
//!
//! Every section other than `dist` and `mechanism` is optional; the manifest
//! records the values actually used.

use std::path::Path;

use contest_core::{Family, MechParams, TypeDist};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Structured solver when it applies, the linear program otherwise.
    #[default]
    Auto,
    Convex,
    LargeScale,
    Lp,
    Wta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub kind: SolverChoice,
    pub grid_points: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { kind: SolverChoice::Auto, grid_points: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { trials: 1_000_000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub n: Vec<usize>,
    pub z: Vec<usize>,
    /// Slack added to `1 − 1/e` in the utility-bound column.
    pub epsilon: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { n: vec![10, 20, 50, 100, 200], z: vec![10, 50, 100], epsilon: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub dist: Family,
    pub mechanism: MechParams,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_name() -> String {
    "scenario".to_string()
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Builds the distribution and checks every parameter.
    pub fn validate(&self) -> Result<TypeDist, CliError> {
        let dist = TypeDist::new(self.dist.clone()).map_err(CliError::from)?;
        self.mechanism.validate().map_err(CliError::from)?;
        if self.solver.grid_points < 2 {
            return Err(CliError::validation("solver.grid_points must be at least 2"));
        }
        if self.simulation.trials == 0 {
            return Err(CliError::validation("simulation.trials must be at least 1"));
        }
        Ok(dist)
    }
}
