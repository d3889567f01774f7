//! Command line front end: runs scenarios and sweeps and writes their
//! artifacts.
//!
//! Exit codes: 0 success, 1 malformed input or I/O failure, 2 invalid
//! parameters or a solution failing its checks, 3 solver failure.

pub mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use contest_core::dist::TypeGrid;
use contest_core::efficient::EfficientProfile;
use contest_core::expost::{synthesize, validate_interim};
use contest_core::ic::{canonical_utility, check_feasibility, check_ic};
use contest_core::sim::{
    large_scale_pool_check, optimal_solution, payoff_ratio, simulate_interim, wta_utility_bound_check, SimConfig,
    SimReport,
};
use contest_core::solver_lp::{build_program, solve_lp_structured};
use contest_core::solver_param::{solve_convex_case, solve_large_scale, wta_baseline, StructuredSolution};
use contest_core::{Error, Family, MechParams, TypeDist};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use config::{Scenario, SolverChoice};
use output::{fmt_f64, fmt_opt, Artifacts};

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } | Error::InvalidParameters(_) | Error::NotSupported(_) => Self::validation(e.to_string()),
            _ => Self::solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("i/o error: {e}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "contest", version, about = "Optimal contest design: solve, simulate and sweep scenarios")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Override the scenario's grid size.
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Override the scenario's random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Tolerance of the incentive and feasibility checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Do not print the summary to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the efficient rule.
    Efficient { config: PathBuf },
    /// Solve a scenario with the configured solver.
    Solve { config: PathBuf },
    /// Solve a scenario with the linear program.
    SolveLp {
        config: PathBuf,
        /// Also write the program in LP text format.
        #[arg(long)]
        emit_program: bool,
    },
    /// Solve, then estimate population outcomes by Monte Carlo.
    Simulate { config: PathBuf },
    /// Cutoff, payoff ratio and utility bound across market sizes.
    SweepN { config: PathBuf },
    /// Pool location across replicated economies.
    SweepZ { config: PathBuf },
    /// Build and validate an ex post rule for two agents.
    SynthExpost {
        config: PathBuf,
        /// Also write the kernels.
        #[arg(long)]
        emit_kernel: bool,
    },
    /// Re-check a solution file.
    Validate { solution: PathBuf },
}

/// Contents of `solution.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub dist: Family,
    pub solution: StructuredSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationsFile {
    pub tolerance: f64,
    pub ic: Vec<contest_core::ic::IcViolation>,
    pub feasibility_worst_slack: f64,
    pub feasibility: Vec<contest_core::ic::Violation<contest_core::ic::FeasibilityKind>>,
}

impl ViolationsFile {
    pub fn is_clean(&self) -> bool {
        self.ic.is_empty() && self.feasibility.is_empty()
    }
}

/// Runs one command, returning the process exit code on failure.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Command::Validate { solution } = &cli.command {
        return validate_file(solution, g.tolerance, g.quiet);
    }
    let (path, name) = match &cli.command {
        Command::Efficient { config } => (config, "efficient"),
        Command::Solve { config } => (config, "solve"),
        Command::SolveLp { config, .. } => (config, "solve-lp"),
        Command::Simulate { config } => (config, "simulate"),
        Command::SweepN { config } => (config, "sweep-n"),
        Command::SweepZ { config } => (config, "sweep-z"),
        Command::SynthExpost { config, .. } => (config, "synth-expost"),
        Command::Validate { .. } => unreachable!(),
    };
    let mut scenario = Scenario::load(path)?;
    if let Some(gp) = g.grid_points {
        scenario.solver.grid_points = gp;
    }
    if let Some(seed) = g.seed {
        scenario.simulation.seed = seed;
    }
    let dist = scenario.validate()?;
    let mut art = Artifacts::new(&g.out_dir, name, g.quiet)?;
    let outcome = match &cli.command {
        Command::Efficient { .. } => efficient(&scenario, &dist, &mut art),
        Command::Solve { .. } => solve_and_write(&scenario, &dist, scenario.solver.kind, g.tolerance, &mut art).map(|_| ()),
        Command::SolveLp { emit_program, .. } => {
            if *emit_program {
                let grid = TypeGrid::new(&dist, scenario.solver.grid_points)?;
                let program = build_program(&dist, &scenario.mechanism, &grid)?;
                art.write("program.lp", &program.to_lp_text())?;
            }
            solve_and_write(&scenario, &dist, SolverChoice::Lp, g.tolerance, &mut art).map(|_| ())
        }
        Command::Simulate { .. } => simulate(&scenario, &dist, g.tolerance, &mut art),
        Command::SweepN { .. } => sweep_n(&scenario, &dist, &mut art),
        Command::SweepZ { .. } => sweep_z(&scenario, &dist, &mut art),
        Command::SynthExpost { emit_kernel, .. } => synth(&scenario, &dist, *emit_kernel, g.tolerance, &mut art),
        Command::Validate { .. } => unreachable!(),
    };
    // the manifest is written even when the checks fail
    let checks_failed = matches!(&outcome, Err(e) if e.code == 2 && art.solved);
    if outcome.is_ok() || checks_failed {
        art.finish(&scenario, g.tolerance)?;
    }
    outcome
}

fn solver_for(
    choice: SolverChoice,
    dist: &TypeDist,
    params: &MechParams,
    grid: &TypeGrid,
) -> contest_core::Result<StructuredSolution> {
    match choice {
        SolverChoice::Auto if params.z > 1 => solve_large_scale(dist, params, grid),
        SolverChoice::Auto => optimal_solution(dist, params, grid),
        SolverChoice::Convex => solve_convex_case(dist, params, grid),
        SolverChoice::LargeScale => solve_large_scale(dist, params, grid),
        SolverChoice::Lp => solve_lp_structured(dist, params, grid),
        SolverChoice::Wta => wta_baseline(dist, params, grid),
    }
}

fn check(sol: &StructuredSolution, dist: &TypeDist, tol: f64) -> Result<ViolationsFile, CliError> {
    let ic = check_ic(&sol.q, &sol.u, &sol.grid, sol.params.eta, tol)?;
    let feas = check_feasibility(&sol.q, dist, &sol.grid, sol.params.agents(), sol.params.items(), tol)?;
    Ok(ViolationsFile {
        tolerance: tol,
        ic,
        feasibility_worst_slack: feas.worst_slack,
        feasibility: feas.violations,
    })
}

fn curve_csv(sol: &StructuredSolution) -> Result<String, CliError> {
    let qe = contest_core::InterimRule::new(sol.q_efficient.clone());
    let ue = canonical_utility(&qe, &sol.grid, sol.params.eta, qe.values[0])?;
    let labels = sol.node_labels();
    let mut out = String::from("theta,q_efficient,q_optimal,u_optimal,u_efficient,region_label\n");
    for i in 0..sol.grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(sol.grid.points[i]),
            fmt_f64(qe.values[i]),
            fmt_f64(sol.q.values[i]),
            fmt_f64(sol.u.values[i]),
            fmt_f64(ue.values[i]),
            labels[i].label()
        ));
    }
    Ok(out)
}

fn solve_and_write(
    s: &Scenario,
    dist: &TypeDist,
    choice: SolverChoice,
    tol: f64,
    art: &mut Artifacts,
) -> Result<StructuredSolution, CliError> {
    let t = Instant::now();
    let grid = TypeGrid::new(dist, s.solver.grid_points)?;
    let sol = solver_for(choice, dist, &s.mechanism, &grid)?;
    art.time("solve", t);
    let t = Instant::now();
    let violations = check(&sol, dist, tol)?;
    art.time("check", t);
    art.write_json("solution.json", &SolutionFile { dist: s.dist.clone(), solution: sol.clone() })?;
    art.write("curve.csv", &curve_csv(&sol)?)?;
    art.write_json("violations.json", &violations)?;
    art.solved = true;
    let kinds: Vec<&str> = sol.kinds().iter().map(|k| k.label()).collect();
    art.say(format!("objective {} segments [{}]", fmt_f64(sol.objective), kinds.join(", ")));
    if let Some(c) = sol.cutoffs {
        art.say(format!("theta1 {} theta2 {} theta3 {}", fmt_f64(c.theta1), fmt_f64(c.theta2), fmt_opt(c.theta3)));
    }
    if !violations.is_clean() {
        return Err(CliError::validation(format!(
            "solution fails its checks: {} incentive and {} feasibility violations",
            violations.ic.len(),
            violations.feasibility.len()
        )));
    }
    Ok(sol)
}

fn efficient(s: &Scenario, dist: &TypeDist, art: &mut Artifacts) -> Result<(), CliError> {
    let t = Instant::now();
    let grid = TypeGrid::new(dist, s.solver.grid_points)?;
    let p = &s.mechanism;
    let prof = EfficientProfile::new(dist, &grid, p.agents(), p.items())?;
    let mut out = String::from("theta,q_efficient,q_efficient_cell,tail_above\n");
    for i in 0..grid.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(grid.points[i]),
            fmt_f64(prof.point[i]),
            fmt_f64(prof.cell[i]),
            fmt_f64(prof.tail[i])
        ));
    }
    art.time("efficient", t);
    art.write("efficient.csv", &out)?;
    art.say(format!("convex {}", prof.is_convex(&grid)));
    Ok(())
}

fn simulate(s: &Scenario, dist: &TypeDist, tol: f64, art: &mut Artifacts) -> Result<(), CliError> {
    let sol = solve_and_write(s, dist, s.solver.kind, tol, art)?;
    let t = Instant::now();
    let config = SimConfig::new(s.simulation.trials, s.simulation.seed)?;
    let rep = simulate_interim(&sol, dist, &config)?;
    art.time("simulate", t);
    art.write_json("sim.json", &rep)?;
    art.write("sim.csv", &format!("{}\n{}\n", SimReport::CSV_HEADER, rep.csv_row()))?;
    art.say(format!(
        "total utility {} ± {}",
        fmt_f64(rep.total_utility.mean),
        fmt_f64(rep.total_utility.stderr)
    ));
    Ok(())
}

fn sweep_n(s: &Scenario, dist: &TypeDist, art: &mut Artifacts) -> Result<(), CliError> {
    let t = Instant::now();
    let grid = TypeGrid::new(dist, s.solver.grid_points)?;
    let base = s.mechanism;
    let rows = s
        .sweep
        .n
        .par_iter()
        .map(|&n| {
            let p = MechParams::new(n, base.k, base.eta, base.alpha)?;
            let sol = solve_convex_case(dist, &p, &grid)?;
            let theta1 = sol.cutoffs.map_or(dist.hi(), |c| c.theta1);
            let ratio = payoff_ratio(dist, &p, &grid)?;
            let bound = wta_utility_bound_check(dist, n, p.eta, s.sweep.epsilon)?;
            Ok(format!("{n},{},{},{},{}\n", fmt_f64(theta1), fmt_f64(ratio), fmt_f64(bound.value), bound.pass))
        })
        .collect::<contest_core::Result<Vec<String>>>()?;
    art.time("sweep", t);
    art.write("sweep_n.csv", &format!("n,theta1,ratio,wta_total_utility,bound_pass\n{}", rows.concat()))?;
    Ok(())
}

fn sweep_z(s: &Scenario, dist: &TypeDist, art: &mut Artifacts) -> Result<(), CliError> {
    let t = Instant::now();
    let grid = TypeGrid::new(dist, s.solver.grid_points)?;
    let rows = large_scale_pool_check(dist, &s.mechanism, &s.sweep.z, &grid)?;
    art.time("sweep", t);
    let mut out = String::from("z,theta1,theta2,theta3,straddles_cutoff\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.z,
            fmt_opt(r.theta1),
            fmt_opt(r.theta2),
            fmt_opt(r.theta3),
            r.straddles
        ));
    }
    art.write("sweep_z.csv", &out)?;
    art.write_json("sweep_z.json", &rows)?;
    Ok(())
}

fn synth(s: &Scenario, dist: &TypeDist, emit_kernel: bool, tol: f64, art: &mut Artifacts) -> Result<(), CliError> {
    let p = &s.mechanism;
    if p.n != 2 || p.k != 1 || p.z != 1 {
        return Err(CliError::validation(format!(
            "ex post synthesis needs n = 2, k = 1, z = 1; got n = {}, k = {}, z = {}",
            p.n, p.k, p.z
        )));
    }
    let sol = solve_and_write(s, dist, s.solver.kind, tol, art)?;
    let t = Instant::now();
    let rule = synthesize(&sol, dist)?;
    art.time("synthesize", t);
    let t = Instant::now();
    let report = validate_interim(&sol, &rule, dist, s.simulation.trials, s.simulation.seed)?;
    art.time("validate", t);
    if emit_kernel {
        art.write_json("kernel.json", &rule)?;
    }
    art.write_json("validation.json", &report)?;
    art.say(format!(
        "{} pools, interim checkpoints {}",
        rule.pools.len(),
        if report.all_pass { "match" } else { "do not match" }
    ));
    if !report.all_pass {
        return Err(CliError::validation("interim win probabilities do not match the solution"));
    }
    Ok(())
}

fn validate_file(path: &Path, tol: f64, quiet: bool) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let file: SolutionFile =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let dist = TypeDist::new(file.dist)?;
    let grid = &file.solution.grid;
    if grid.len() != file.solution.q.values.len() || grid.len() != file.solution.u.values.len() {
        return Err(CliError::validation("solution arrays do not match its grid"));
    }
    let v = check(&file.solution, &dist, tol)?;
    if !quiet {
        println!(
            "{} incentive violations, {} feasibility violations, worst tail slack {}",
            v.ic.len(),
            v.feasibility.len(),
            fmt_f64(v.feasibility_worst_slack)
        );
    }
    if v.is_clean() {
        Ok(())
    } else {
        Err(CliError::validation("solution fails its checks"))
    }
}
