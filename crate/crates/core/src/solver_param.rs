//! Cutoff-family solvers, the winner-take-all baseline and region labelling.
//!
//! Both structured solvers search one family. Below the first cutoff the
//! allocation is efficient with no effort. From there a pool allocates along
//! a line of slope η until the pooled mass matches the efficient mass, after
//! which the allocation is efficient again. The line is either pinned to the
//! efficient rule at a grid node, or (for pools starting at the bottom type)
//! has a free intercept fixed by the mass balance. The cell where the line
//! crosses back is mixed so the balance holds exactly on the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{TypeDist, TypeGrid};
use crate::efficient::EfficientProfile;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::ic::{canonical_values, objective_values, InterimRule, MechParams, UtilityProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    NoTension,
    NoEffort,
    Efficient,
    Unclassified,
}

impl RegionKind {
    pub fn label(self) -> &'static str {
        match self {
            RegionKind::NoTension => "no_tension",
            RegionKind::NoEffort => "no_effort",
            RegionKind::Efficient => "efficient",
            RegionKind::Unclassified => "unclassified",
        }
    }
}

/// A labelled interval `[lo, hi]` covering grid nodes `start..=end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSegment {
    pub lo: f64,
    pub hi: f64,
    pub kind: RegionKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    ConvexCase,
    LargeScale,
    WinnerTakeAll,
    Lp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredSolution {
    pub solver: SolverKind,
    pub params: MechParams,
    pub grid: TypeGrid,
    pub q: InterimRule,
    pub u: UtilityProfile,
    /// Grid efficient rule (cell averages) the solution was built against.
    pub q_efficient: Vec<f64>,
    pub segments: Vec<RegionSegment>,
    /// Population total of the objective.
    pub objective: f64,
    pub cutoffs: Option<Cutoffs>,
}

impl StructuredSolution {
    pub fn kinds(&self) -> Vec<RegionKind> {
        self.segments.iter().map(|s| s.kind).collect()
    }

    /// Label of the segment containing each node.
    pub fn node_labels(&self) -> Vec<RegionKind> {
        let mut out = vec![RegionKind::Unclassified; self.grid.len()];
        for s in &self.segments {
            for l in &mut out[s.start..=s.end] {
                *l = s.kind;
            }
        }
        out
    }

    pub fn segments_of(&self, kind: RegionKind) -> impl Iterator<Item = &RegionSegment> {
        self.segments.iter().filter(move |s| s.kind == kind)
    }
}

/// Default tolerance for region labelling.
pub const CLASSIFY_TOL: f64 = 1e-7;

/// Labels maximal runs of grid nodes by which of the region patterns holds.
///
/// A node is NoEffort when `U = Q` and the slope is `η`, NoTension when
/// `U = Q = Q_E` with a slack slope, and Efficient when `Q = Q_E > U`. Single
/// nodes are absorbed into the preceding run, so the kinks at segment ends do
/// not show up as segments of their own.
pub fn classify_regions(
    q: &InterimRule,
    u: &UtilityProfile,
    dist: &TypeDist,
    grid: &TypeGrid,
    params: &MechParams,
    tol: f64,
) -> Result<Vec<RegionSegment>> {
    let eff = params.efficient_profile(dist, grid)?;
    Ok(classify_with(&q.values, &u.values, &eff.cell, grid, params.eta, tol))
}

pub(crate) fn classify_with(
    q: &[f64],
    u: &[f64],
    qe: &[f64],
    grid: &TypeGrid,
    eta: f64,
    tol: f64,
) -> Vec<RegionSegment> {
    let g = grid.len();
    let th = &grid.points;
    let label = |i: usize| {
        let slope = if i + 1 < g {
            (u[i + 1] - u[i]) / (th[i + 1] - th[i])
        } else {
            (u[i] - u[i - 1]) / (th[i] - th[i - 1])
        };
        let gap = q[i] - u[i];
        let efficient = (q[i] - qe[i]).abs() <= tol;
        if gap.abs() <= tol {
            if slope >= eta * (1.0 - tol) {
                RegionKind::NoEffort
            } else if efficient {
                RegionKind::NoTension
            } else {
                RegionKind::Unclassified
            }
        } else if gap > tol && efficient {
            RegionKind::Efficient
        } else {
            RegionKind::Unclassified
        }
    };

    let mut runs: Vec<(RegionKind, usize, usize)> = Vec::new();
    for i in 0..g {
        let k = label(i);
        match runs.last_mut() {
            Some(r) if r.0 == k => r.2 = i,
            _ => runs.push((k, i, i)),
        }
    }
    let mut merged: Vec<(RegionKind, usize, usize)> = Vec::new();
    let mut pending_start: Option<usize> = None;
    for &(k, s, e) in &runs {
        if s == e && runs.len() > 1 {
            if let Some(last) = merged.last_mut() {
                last.2 = e;
            } else {
                pending_start.get_or_insert(s);
            }
            continue;
        }
        let s = pending_start.take().unwrap_or(s);
        match merged.last_mut() {
            Some(last) if last.0 == k => last.2 = e,
            _ => merged.push((k, s, e)),
        }
    }
    if merged.is_empty() {
        // every run was a single node
        merged.push((runs[0].0, 0, g - 1));
    } else if let Some(s) = pending_start {
        merged[0].1 = s;
    }
    let los: Vec<f64> = merged
        .iter()
        .enumerate()
        .map(|(j, r)| if j == 0 { grid.lo() } else { th[r.1] })
        .collect();
    merged
        .iter()
        .enumerate()
        .map(|(j, &(kind, start, end))| RegionSegment {
            lo: los[j],
            hi: los.get(j + 1).copied().unwrap_or(grid.hi()),
            kind,
            start,
            end,
        })
        .collect()
}

/// One member of the cutoff family.
#[derive(Debug, Clone, Copy)]
enum Shape {
    Efficient { onset: usize },
    /// Line through `(θ_i1, Q_E(θ_i1))` with a mixed crossing cell.
    Pinned { i1: usize },
    /// Line `v + η(θ − θ_s)` on nodes `s..end` with `v` set by the mass
    /// balance, then a jump back to the efficient rule.
    Balanced { s: usize, end: usize, v: f64 },
}

struct Candidate {
    q: Vec<f64>,
    theta1: f64,
    theta2: f64,
    /// Last node of the pool, if there is one.
    pool_end: Option<usize>,
}

const CROSS_TOL: f64 = 1e-13;

struct Family<'a> {
    grid: &'a TypeGrid,
    eff: &'a EfficientProfile,
    eta: f64,
    /// Prefix sums of `m_j` and `θ_j m_j`.
    mass: Vec<f64>,
    moment: Vec<f64>,
}

impl<'a> Family<'a> {
    fn new(grid: &'a TypeGrid, eff: &'a EfficientProfile, eta: f64) -> Self {
        let g = grid.len();
        let (mut mass, mut moment) = (vec![0.0; g + 1], vec![0.0; g + 1]);
        let (mut sm, mut st) = (KahanSum::new(), KahanSum::new());
        for j in 0..g {
            sm.add(grid.cell_mass[j]);
            st.add(grid.points[j] * grid.cell_mass[j]);
            mass[j + 1] = sm.value();
            moment[j + 1] = st.value();
        }
        Self { grid, eff, eta, mass, moment }
    }

    /// Scans the pinned line from `i1` to its crossing cell.
    fn pinned(&self, i1: usize) -> Option<(usize, f64)> {
        let (th, m) = (&self.grid.points, &self.grid.cell_mass);
        let qe = &self.eff.cell;
        let mut d = 0.0;
        for j in i1 + 1..self.grid.len() {
            let lj = qe[i1] + self.eta * (th[j] - th[i1]);
            let nd = d + (lj - qe[j]) * m[j];
            if nd <= CROSS_TOL {
                if j == i1 + 1 {
                    return None;
                }
                let c = if m[j] > 0.0 { qe[j] - d / m[j] } else { qe[j] };
                return Some((j, c.clamp(lj.min(qe[j]), qe[j])));
            }
            if lj > 1.0 + 1e-12 {
                return None;
            }
            d = nd;
        }
        None
    }

    /// Intercept balancing the pool on nodes `s..end`, if the resulting
    /// allocation is monotone, feasible and within `[0, 1]`.
    fn balanced(&self, s: usize, end: usize) -> Option<f64> {
        let (th, m) = (&self.grid.points, &self.grid.cell_mass);
        let qe = &self.eff.cell;
        let g = self.grid.len();
        let eta = self.eta;
        let sm = self.mass[end] - self.mass[s];
        if sm <= 0.0 {
            return None;
        }
        let st = (self.moment[end] - self.moment[s]) - th[s] * sm;
        let v = (self.eff.tail[s] - self.eff.tail[end] - eta * st) / sm;
        if v < qe[s] - 1e-12 {
            return None;
        }
        // the pool may not start above the slope-η step from the node below
        if s > 0 && v > qe[s - 1] + eta * (th[s] - th[s - 1]) + 1e-15 {
            return None;
        }
        let top = v + eta * (th[end - 1] - th[s]);
        if top > 1.0 + 1e-12 || (end < g && top > qe[end]) {
            return None;
        }
        let mut d = 0.0;
        for j in s..end {
            d += (v + eta * (th[j] - th[s]) - qe[j]) * m[j];
            if d < -CROSS_TOL {
                return None;
            }
        }
        Some(v)
    }

    fn build(&self, shape: Shape) -> Candidate {
        let (th, b) = (&self.grid.points, &self.grid.bounds);
        let qe = &self.eff.cell;
        let eta = self.eta;
        let mut q = qe.clone();
        match shape {
            Shape::Efficient { onset } => Candidate {
                q,
                theta1: th[onset],
                theta2: th[onset],
                pool_end: None,
            },
            Shape::Pinned { i1 } => {
                let (j, c) = self.pinned(i1).expect("validated pinned shape");
                let line = |jj: usize| qe[i1] + eta * (th[jj] - th[i1]);
                for (jj, val) in q.iter_mut().enumerate().take(j).skip(i1 + 1) {
                    *val = line(jj);
                }
                q[j] = c;
                let lj = line(j);
                let share = if qe[j] > lj { (qe[j] - c) / (qe[j] - lj) } else { 1.0 };
                Candidate {
                    q,
                    theta1: th[i1],
                    theta2: b[j] + share * (b[j + 1] - b[j]),
                    pool_end: Some(j),
                }
            }
            Shape::Balanced { s, end, v } => {
                for (j, val) in q.iter_mut().enumerate().take(end).skip(s) {
                    *val = (v + eta * (th[j] - th[s])).min(1.0);
                }
                // where the line meets the interpolated efficient rule below s
                let theta1 = if s == 0 {
                    th[0]
                } else {
                    let h = th[s] - th[s - 1];
                    let slope = (qe[s] - qe[s - 1]) / h;
                    let x = if eta > slope {
                        ((qe[s - 1] - v + eta * h) / (eta - slope)).clamp(0.0, h)
                    } else {
                        h
                    };
                    th[s - 1] + x
                };
                Candidate { q, theta1, theta2: b[end], pool_end: Some(end - 1) }
            }
        }
    }
}

fn first_tension(q: &[f64], u: &[f64]) -> Option<usize> {
    q.iter().zip(u).position(|(q, u)| q - u > 1e-12)
}

fn pool_family(
    params: &MechParams,
    grid: &TypeGrid,
    eff: &EfficientProfile,
    solver: SolverKind,
) -> Result<StructuredSolution> {
    let g = grid.len();
    if g < 11 {
        return Err(Error::ResolutionTooCoarse { suggested: 4 * (g - 1) + 1 });
    }
    let eta = params.eta;
    let qe = &eff.cell;
    let th = &grid.points;
    let ue = canonical_values(qe, th, eta, qe[0]);
    let Some(onset) = first_tension(qe, &ue) else {
        let mut sol = assemble(solver, params, grid, eff, qe.clone());
        sol.cutoffs = Some(Cutoffs { theta1: grid.hi(), theta2: grid.hi(), theta3: None });
        return Ok(sol);
    };

    let fam = Family::new(grid, eff, eta);
    let mut shapes: Vec<Shape> = (0..onset)
        .into_par_iter()
        .filter(|&i1| fam.pinned(i1).is_some())
        .map(|i1| Shape::Pinned { i1 })
        .collect();
    shapes.extend(
        (0..=onset)
            .into_par_iter()
            .flat_map_iter(|s| {
                let fam = &fam;
                (s + 1..=g).filter_map(move |end| {
                    fam.balanced(s, end).map(|v| Shape::Balanced { s, end, v })
                })
            })
            .collect::<Vec<_>>(),
    );
    if shapes.is_empty() {
        return Err(Error::ResolutionTooCoarse { suggested: 4 * (g - 1) + 1 });
    }
    shapes.push(Shape::Efficient { onset });

    let scored: Vec<(f64, f64, f64)> = shapes
        .par_iter()
        .map(|&shape| {
            let c = fam.build(shape);
            let u = canonical_values(&c.q, th, eta, c.q[0]);
            (objective_values(&c.q, &u, grid, params), c.theta1, c.theta2)
        })
        .collect();
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let pick = (0..shapes.len())
        .filter(|&i| scored[i].0 >= best - 1e-9)
        .min_by(|&a, &b| {
            let (sa, sb) = (scored[a], scored[b]);
            sa.1.total_cmp(&sb.1).then(sa.2.total_cmp(&sb.2))
        })
        .expect("at least one candidate");
    let c = fam.build(shapes[pick]);

    let mut sol = assemble(solver, params, grid, eff, c.q);
    let theta3 = c.pool_end.and_then(|end| {
        let (q, u) = (&sol.q.values, &sol.u.values);
        let mut seen_gap = false;
        (end..g).find_map(|i| {
            if q[i] - u[i] > 1e-12 {
                seen_gap = true;
                None
            } else if seen_gap {
                Some(th[i])
            } else {
                None
            }
        })
    });
    sol.cutoffs = Some(Cutoffs { theta1: c.theta1, theta2: c.theta2, theta3 });
    if let Some(i) = sol.segments.iter().position(|s| s.kind == RegionKind::NoEffort) {
        if i > 0 && c.theta1 > sol.segments[i - 1].lo && c.theta1 < sol.segments[i].hi {
            sol.segments[i - 1].hi = c.theta1;
            sol.segments[i].lo = c.theta1;
        }
        if i + 1 < sol.segments.len() && c.theta2 > sol.segments[i].lo && c.theta2 < sol.segments[i + 1].hi {
            sol.segments[i].hi = c.theta2;
            sol.segments[i + 1].lo = c.theta2;
        }
    }
    Ok(sol)
}

fn assemble(
    solver: SolverKind,
    params: &MechParams,
    grid: &TypeGrid,
    eff: &EfficientProfile,
    q: Vec<f64>,
) -> StructuredSolution {
    let u = canonical_values(&q, &grid.points, params.eta, q[0]);
    let objective = objective_values(&q, &u, grid, params);
    let segments = classify_with(&q, &u, &eff.cell, grid, params.eta, CLASSIFY_TOL);
    StructuredSolution {
        solver,
        params: *params,
        grid: grid.clone(),
        q: InterimRule::new(q),
        u: UtilityProfile::new(u),
        q_efficient: eff.cell.clone(),
        segments,
        objective,
        cutoffs: None,
    }
}

/// Optimal mechanism when `Q_E` is convex: efficient without effort, then a
/// slope-η pool, then efficient with effort.
pub fn solve_convex_case(
    dist: &TypeDist,
    params: &MechParams,
    grid: &TypeGrid,
) -> Result<StructuredSolution> {
    params.validate()?;
    let eff = params.efficient_profile(dist, grid)?;
    if !eff.is_convex(grid) {
        return Err(Error::NotApplicable(
            "the efficient rule is not convex on this grid; use the linear programming solver"
                .into(),
        ));
    }
    pool_family(params, grid, &eff, SolverKind::ConvexCase)
}

/// Optimal mechanism in the economy replicated `params.z` times. The efficient
/// region may end where the slope-η utility meets the efficient rule again,
/// after which there is a second no-tension region.
pub fn solve_large_scale(
    dist: &TypeDist,
    params: &MechParams,
    grid: &TypeGrid,
) -> Result<StructuredSolution> {
    params.validate()?;
    let eff = params.efficient_profile(dist, grid)?;
    pool_family(params, grid, &eff, SolverKind::LargeScale)
}

/// The efficient rule with its canonical utility.
pub fn wta_baseline(dist: &TypeDist, params: &MechParams, grid: &TypeGrid) -> Result<StructuredSolution> {
    params.validate()?;
    let eff = params.efficient_profile(dist, grid)?;
    Ok(assemble(SolverKind::WinnerTakeAll, params, grid, &eff, eff.cell.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ic::{check_feasibility_with, check_ic};

    fn setup(d: TypeDist, g: usize, n: usize, eta: f64, alpha: f64) -> (TypeDist, TypeGrid, MechParams) {
        let grid = TypeGrid::new(&d, g).unwrap();
        (d, grid, MechParams::new(n, 1, eta, alpha).unwrap())
    }

    #[test]
    fn uniform_without_tension_is_efficient() {
        let (d, grid, p) = setup(TypeDist::uniform(), 2001, 2, 2.0, 0.5);
        let s = solve_convex_case(&d, &p, &grid).unwrap();
        assert_eq!(s.kinds(), vec![RegionKind::NoTension]);
        assert!((s.objective - 5.0 / 6.0).abs() < 1e-6);
        let w = wta_baseline(&d, &p, &grid).unwrap();
        assert_eq!(w.q, s.q);
        assert_eq!(w.segments, s.segments);
    }

    // Two-dimensional oracle over (θ1, θ2) for Uniform, n = 2: the pool
    // `Q = c + ηθ` on [θ1, θ2] with `c` from the continuous mass balance.
    fn uniform_pair_oracle(eta: f64, alpha: f64) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let steps = 400;
        for i in 0..=steps {
            let t1 = i as f64 / steps as f64;
            for j in i..=steps {
                let t2 = j as f64 / steps as f64;
                // below a pinned pool U = Q = θ, which needs slope 1 <= η
                if t1 > 0.0 && eta < 1.0 {
                    continue;
                }
                // intercept: pinned if t1 > 0, else free
                let c = if t1 > 0.0 {
                    t1 - eta * t1
                } else {
                    t2 * (1.0 - eta) / 2.0
                };
                if c < 0.0 || c + eta * t2 > 1.0 + 1e-12 {
                    continue;
                }
                if t1 > 0.0 {
                    // mass balance pins θ2 given θ1
                    let bal = (c * (t2 - t1) + eta * (t2 * t2 - t1 * t1) / 2.0) - (t2 * t2 - t1 * t1) / 2.0;
                    if bal.abs() > 2e-3 {
                        continue;
                    }
                }
                let end = c + eta * t2;
                // objective: α∫θQ + (1−α)∫U with U following slope η above θ2
                let mut v = 0.0;
                let k = 2000;
                for s in 0..k {
                    let t = (s as f64 + 0.5) / k as f64;
                    let (q, u) = if t < t1 {
                        (t, t)
                    } else if t < t2 {
                        (c + eta * t, c + eta * t)
                    } else {
                        (t, (end + eta * (t - t2)).min(t))
                    };
                    v += (alpha * t * q + (1.0 - alpha) * u) / k as f64;
                }
                if 2.0 * v > best.0 {
                    best = (2.0 * v, t1, t2);
                }
            }
        }
        best
    }

    #[test]
    fn small_eta_pools_from_the_bottom() {
        let (d, grid, p) = setup(TypeDist::uniform(), 2001, 2, 0.5, 0.5);
        let s = solve_convex_case(&d, &p, &grid).unwrap();
        let c = s.cutoffs.unwrap();
        assert_eq!(c.theta1, 0.0);
        let (v, t1, t2) = uniform_pair_oracle(0.5, 0.5);
        assert_eq!(t1, 0.0);
        assert!((c.theta2 - t2).abs() < 0.01, "{} vs {t2}", c.theta2);
        assert!((s.objective - v).abs() < 2e-3, "{} vs {v}", s.objective);
        // intercept c = θ2(1 − η)/2
        let want = c.theta2 * 0.25;
        assert!((s.q.values[0] - want).abs() < 1e-3, "{} vs {want}", s.q.values[0]);
    }

    #[test]
    fn solutions_pass_ic_and_feasibility() {
        for (d, n, eta) in [
            (TypeDist::uniform(), 2, 1.0),
            (TypeDist::uniform(), 5, 1.0),
            (TypeDist::power(2.0).unwrap(), 2, 1.0),
            (TypeDist::uniform(), 20, 0.5),
        ] {
            let (d, grid, p) = setup(d, 1001, n, eta, 0.5);
            let s = solve_convex_case(&d, &p, &grid).unwrap();
            assert!(check_ic(&s.q, &s.u, &grid, eta, 1e-6).unwrap().is_empty());
            let eff = p.efficient_profile(&d, &grid).unwrap();
            let f = check_feasibility_with(&s.q, &eff, &grid, 1e-8).unwrap();
            assert!(f.is_feasible(), "{}", f.worst_slack);
            assert!(s.objective >= wta_baseline(&d, &p, &grid).unwrap().objective - 1e-12);
        }
    }

    #[test]
    fn wta_labels_for_many_agents() {
        let (d, grid, p) = setup(TypeDist::uniform(), 2001, 50, 1.0, 0.0);
        let w = wta_baseline(&d, &p, &grid).unwrap();
        assert_eq!(w.kinds(), vec![RegionKind::NoTension, RegionKind::Efficient]);
        let kink = w.segments[1].lo;
        let dagger = (1.0f64 / 49.0).powf(1.0 / 48.0);
        assert!((kink - dagger).abs() < 2e-3, "{kink} vs {dagger}");
        assert!((w.objective - 0.2425).abs() < 1e-3);
    }

    #[test]
    fn huge_eta_means_no_effort() {
        let (d, grid, p) = setup(TypeDist::power(2.0).unwrap(), 501, 5, 1e6, 0.5);
        let w = wta_baseline(&d, &p, &grid).unwrap();
        assert_eq!(w.u.values, w.q.values);
    }

    #[test]
    fn non_convex_efficient_rule_is_rejected() {
        let d = TypeDist::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        let (d, grid, p) = setup(d, 201, 2, 1.0, 0.5);
        assert!(matches!(solve_convex_case(&d, &p, &grid), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn coarse_grids_ask_for_more_points() {
        let (d, grid, p) = setup(TypeDist::uniform(), 5, 2, 1.0, 0.5);
        assert_eq!(
            solve_convex_case(&d, &p, &grid).unwrap_err(),
            Error::ResolutionTooCoarse { suggested: 17 }
        );
    }

    #[test]
    fn scale_one_large_scale_matches_convex_case() {
        let (d, grid, p) = setup(TypeDist::uniform(), 1001, 2, 2.0, 0.5);
        let a = solve_convex_case(&d, &p, &grid).unwrap();
        let b = solve_large_scale(&d, &p, &grid).unwrap();
        assert_eq!(a.q, b.q);
        assert_eq!(a.kinds(), vec![RegionKind::NoTension]);
        assert_eq!(b.kinds(), a.kinds());
    }

    #[test]
    fn segments_tile_the_support() {
        let (d, grid, p) = setup(TypeDist::power(2.0).unwrap(), 2001, 2, 1.0, 0.9);
        let s = solve_convex_case(&d, &p, &grid).unwrap();
        assert_eq!(s.segments[0].lo, 0.0);
        assert_eq!(s.segments.last().unwrap().hi, 1.0);
        for w in s.segments.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
            assert_eq!(w[0].end + 1, w[1].start);
        }
        assert_eq!(
            s.kinds(),
            vec![RegionKind::NoTension, RegionKind::NoEffort, RegionKind::Efficient]
        );
    }
}
