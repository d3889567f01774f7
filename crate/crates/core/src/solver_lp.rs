//! The relaxed principal's program on the type grid, solved by simplex.
//!
//! Incentive compatibility is relaxed to `0 <= U' <= η` and `U <= Q`; the
//! optimum is then made incentive compatible by replacing `U` with the
//! canonical utility of `Q`, which never lowers the objective.

use contest_lp::{Problem, Status};
use serde::{Deserialize, Serialize};

use crate::dist::{TypeDist, TypeGrid};
use crate::efficient::EfficientProfile;
use crate::error::{Error, Result};
use crate::ic::{canonical_values, objective_values, InterimRule, MechParams, UtilityProfile};
use crate::solver_param::{classify_with, SolverKind, StructuredSolution, CLASSIFY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTemplate {
    /// `Q_{i+1} − Q_i >= 0`
    MonotoneQ,
    /// `0 <= U_{i+1} − U_i <= η Δθ_i`
    USlope,
    /// `U_i − Q_i <= 0`
    Level,
    /// `M_i − M_{i+1} − m_i Q_i = 0`, with `M_G = 0`
    SuffixMass,
    /// `M_i <= T_i`
    TailMajorization,
}

/// Variables are laid out as `Q_0..Q_{G-1}`, `U_0..U_{G-1}`, `M_0..M_{G-1}`.
#[derive(Debug, Clone)]
pub struct DiscretizedProgram {
    pub problem: Problem,
    pub templates: Vec<RowTemplate>,
    pub tail: Vec<f64>,
    pub params: MechParams,
    pub grid: TypeGrid,
    pub efficient: EfficientProfile,
}

impl DiscretizedProgram {
    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn q_var(&self, i: usize) -> usize {
        i
    }

    pub fn u_var(&self, i: usize) -> usize {
        self.size() + i
    }

    pub fn m_var(&self, i: usize) -> usize {
        2 * self.size() + i
    }

    pub fn var_name(&self, j: usize) -> String {
        let g = self.size();
        match j / g {
            0 => format!("q{j}"),
            1 => format!("u{}", j - g),
            _ => format!("m{}", j - 2 * g),
        }
    }

    /// CPLEX LP text of the program, for checking against external solvers.
    pub fn to_lp_text(&self) -> String {
        self.problem.to_lp_format(|j| self.var_name(j))
    }
}

pub fn build_program(dist: &TypeDist, params: &MechParams, grid: &TypeGrid) -> Result<DiscretizedProgram> {
    params.validate()?;
    let eff = params.efficient_profile(dist, grid)?;
    let g = grid.len();
    let (th, m) = (&grid.points, &grid.cell_mass);
    let a = params.alpha;
    let mut p = Problem::new();
    for i in 0..g {
        p.add_var(a * th[i] * m[i], 0.0, 1.0);
    }
    for &mi in m.iter() {
        p.add_var((1.0 - a) * mi, 0.0, 1.0);
    }
    for _ in 0..g {
        p.add_var(0.0, 0.0, f64::INFINITY);
    }
    let (q, u, mv) = (|i| i, |i| g + i, |i| 2 * g + i);
    let mut templates = Vec::new();
    for i in 0..g - 1 {
        p.add_ge(vec![(q(i + 1), 1.0), (q(i), -1.0)], 0.0);
        templates.push(RowTemplate::MonotoneQ);
    }
    for i in 0..g - 1 {
        p.add_row(vec![(u(i + 1), 1.0), (u(i), -1.0)], 0.0, params.eta * (th[i + 1] - th[i]));
        templates.push(RowTemplate::USlope);
    }
    for i in 0..g {
        p.add_le(vec![(u(i), 1.0), (q(i), -1.0)], 0.0);
        templates.push(RowTemplate::Level);
    }
    for i in 0..g {
        let mut row = vec![(mv(i), 1.0), (q(i), -m[i])];
        if i + 1 < g {
            row.push((mv(i + 1), -1.0));
        }
        p.add_eq(row, 0.0);
        templates.push(RowTemplate::SuffixMass);
    }
    for i in 0..g {
        p.add_le(vec![(mv(i), 1.0)], eff.tail[i]);
        templates.push(RowTemplate::TailMajorization);
    }
    Ok(DiscretizedProgram {
        problem: p,
        templates,
        tail: eff.tail[..g].to_vec(),
        params: *params,
        grid: grid.clone(),
        efficient: eff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    /// Per-agent objective of the program; multiply by the number of agents
    /// for the population total.
    pub objective: f64,
    pub status: Status,
    pub iterations: usize,
}

pub fn solve_lp(program: &DiscretizedProgram) -> Result<LpSolution> {
    let s = contest_lp::solve(&program.problem)?;
    Ok(LpSolution { values: s.x, objective: s.objective, status: s.status, iterations: s.iterations })
}

/// Monotone allocation from the program's `Q` block with the canonical
/// utility seeded at `Q(θ_lo)`.
pub fn canonicalize(program: &DiscretizedProgram, sol: &LpSolution) -> (InterimRule, UtilityProfile) {
    let g = program.size();
    let mut q: Vec<f64> = sol.values[..g].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    for i in 1..g {
        if q[i] < q[i - 1] {
            q[i] = q[i - 1];
        }
    }
    let u = canonical_values(&q, &program.grid.points, program.params.eta, q[0]);
    (InterimRule::new(q), UtilityProfile::new(u))
}

/// Builds, solves and canonicalises the program.
pub fn solve_lp_structured(dist: &TypeDist, params: &MechParams, grid: &TypeGrid) -> Result<StructuredSolution> {
    let program = build_program(dist, params, grid)?;
    let sol = solve_lp(&program)?;
    if sol.status != Status::Optimal {
        return Err(Error::LpStatus(format!("{:?}", sol.status)));
    }
    let (q, u) = canonicalize(&program, &sol);
    let objective = objective_values(&q.values, &u.values, grid, params);
    let segments = classify_with(&q.values, &u.values, &program.efficient.cell, grid, params.eta, CLASSIFY_TOL);
    Ok(StructuredSolution {
        solver: SolverKind::Lp,
        params: *params,
        grid: grid.clone(),
        q,
        u,
        q_efficient: program.efficient.cell.clone(),
        segments,
        objective,
        cutoffs: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    /// `objective(a) − objective(b)`.
    pub objective_gap: f64,
    pub q_sup_gap: f64,
    pub u_sup_gap: f64,
    /// Fraction of grid nodes carrying the same region label.
    pub label_agreement: f64,
    pub within_tolerance: bool,
}

pub fn cross_validate(a: &StructuredSolution, b: &StructuredSolution, tol: f64) -> Result<CrossReport> {
    if a.grid.len() != b.grid.len() {
        return Err(Error::InvalidParameters("solutions live on different grids".into()));
    }
    let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let (la, lb) = (a.node_labels(), b.node_labels());
    let same = la.iter().zip(&lb).filter(|(x, y)| x == y).count();
    let objective_gap = a.objective - b.objective;
    Ok(CrossReport {
        objective_gap,
        q_sup_gap: sup(&a.q.values, &b.q.values),
        u_sup_gap: sup(&a.u.values, &b.u.values),
        label_agreement: same as f64 / la.len() as f64,
        within_tolerance: objective_gap.abs() <= tol,
    })
}
