//! Incentive compatibility, canonical utilities, tail feasibility and the
//! principal's objective on a type grid.

use serde::{Deserialize, Serialize};

use crate::dist::{TypeDist, TypeGrid};
use crate::efficient::{check_nk, EfficientProfile};
use crate::error::{invalid, Result};
use crate::numeric::{compensated_sum, KahanSum};

/// Market and cost parameters. `z` replicates the economy: the solvers see
/// `z * n` agents and `z * k` items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechParams {
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    pub alpha: f64,
    #[serde(default = "one")]
    pub z: usize,
}

fn one() -> usize {
    1
}

impl MechParams {
    pub fn new(n: usize, k: usize, eta: f64, alpha: f64) -> Result<Self> {
        let p = Self { n, k, eta, alpha, z: 1 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_scale(mut self, z: usize) -> Result<Self> {
        self.z = z;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_nk(self.n, self.k)?;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("eta must be positive and finite, got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.z == 0 {
            return Err(invalid("scale z must be at least 1"));
        }
        Ok(())
    }

    /// Agents in the (possibly replicated) economy.
    pub fn agents(&self) -> usize {
        self.z * self.n
    }

    pub fn items(&self) -> usize {
        self.z * self.k
    }

    pub fn efficient_profile(&self, dist: &TypeDist, grid: &TypeGrid) -> Result<EfficientProfile> {
        EfficientProfile::new(dist, grid, self.agents(), self.items())
    }
}

/// Interim allocation probabilities at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InterimRule {
    pub values: Vec<f64>,
}

/// Interim utilities at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UtilityProfile {
    pub values: Vec<f64>,
}

impl InterimRule {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl UtilityProfile {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

fn check_len(len: usize, grid: &TypeGrid, what: &str) -> Result<()> {
    if len != grid.len() {
        return Err(invalid(format!(
            "{what} has {len} values but the grid has {} points",
            grid.len()
        )));
    }
    Ok(())
}

/// The largest utility profile implementing `q` with slope at most `eta` and
/// `U(θ_lo) <= u_low`: a running minimum of `Q(θ') + η(θ − θ')`.
pub fn canonical_utility(
    q: &InterimRule,
    grid: &TypeGrid,
    eta: f64,
    u_low: f64,
) -> Result<UtilityProfile> {
    check_len(q.values.len(), grid, "allocation")?;
    let q0 = q.values[0];
    if u_low > q0 {
        return Err(invalid(format!("u_low = {u_low} exceeds Q at the lowest type ({q0})")));
    }
    Ok(UtilityProfile::new(canonical_values(&q.values, &grid.points, eta, u_low)))
}

pub(crate) fn canonical_values(q: &[f64], theta: &[f64], eta: f64, u_low: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(q.len());
    let mut r = u_low.min(q[0]);
    u.push(r);
    for i in 1..q.len() {
        r = (r + eta * (theta[i] - theta[i - 1])).min(q[i]);
        u.push(r);
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcViolationKind {
    /// Utility decreasing on a cell.
    NegativeSlope,
    /// Utility rising faster than the marginal inflation cost.
    SlopeAboveEta,
    /// Utility above the allocation.
    UtilityAboveAllocation,
    /// Positive effort without a binding slope.
    SlackWithEffort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation<K> {
    pub kind: K,
    pub grid_index: usize,
    pub theta: f64,
    pub magnitude: f64,
}

pub type IcViolation = Violation<IcViolationKind>;

/// Lists every node or cell breaking one of the three incentive conditions:
/// slope in `[0, η]`, `U <= Q`, and slope `η` wherever `U < Q`. Slopes are
/// forward differences with tolerance `tol * η`; the gap band is `tol`.
///
/// A node with positive effort passes the last condition if the cell on
/// either side has slope `η`: the canonical utility kinks exactly at nodes,
/// so at the last node of a pool only one neighbouring cell is steep.
pub fn check_ic(
    q: &InterimRule,
    u: &UtilityProfile,
    grid: &TypeGrid,
    eta: f64,
    tol: f64,
) -> Result<Vec<IcViolation>> {
    check_len(q.values.len(), grid, "allocation")?;
    check_len(u.values.len(), grid, "utility")?;
    let (q, u, th) = (&q.values, &u.values, &grid.points);
    let g = grid.len();
    let tol_slope = tol * eta;
    let slope = |i: usize| (u[i + 1] - u[i]) / (th[i + 1] - th[i]);
    let mut out = Vec::new();
    let mut push = |kind, i: usize, magnitude: f64| {
        out.push(Violation { kind, grid_index: i, theta: th[i], magnitude })
    };
    for i in 0..g {
        if i + 1 < g {
            let s = slope(i);
            if s < -tol_slope {
                push(IcViolationKind::NegativeSlope, i, -s);
            }
            if s > eta + tol_slope {
                push(IcViolationKind::SlopeAboveEta, i, s - eta);
            }
        }
        let gap = q[i] - u[i];
        if gap < -tol {
            push(IcViolationKind::UtilityAboveAllocation, i, -gap);
        }
        // a gap that closes before the next node may meet Q inside the cell
        let closes = i + 1 < g && q[i + 1] - u[i + 1] <= tol;
        if gap > tol && !closes {
            let left = (i > 0).then(|| (slope(i - 1) - eta).abs());
            let right = (i + 1 < g).then(|| (slope(i) - eta).abs());
            let best = left.into_iter().chain(right).fold(f64::INFINITY, f64::min);
            if best > tol_slope {
                push(IcViolationKind::SlackWithEffort, i, best);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityKind {
    TailExceedsEfficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Smallest tail slack `T_i − Σ_{j≥i} Q_j m_j` over all cell boundaries.
    pub worst_slack: f64,
    pub violations: Vec<Violation<FeasibilityKind>>,
    /// Boundary indices where the tail constraint binds within `tol`.
    pub binding: Vec<usize>,
    /// Slack at every cell boundary, `G + 1` entries with the last one 0.
    pub slack: Vec<f64>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tail majorisation check against the efficient rule of `(n, k)`.
pub fn check_feasibility(
    q: &InterimRule,
    dist: &TypeDist,
    grid: &TypeGrid,
    n: usize,
    k: usize,
    tol: f64,
) -> Result<FeasibilityReport> {
    let eff = EfficientProfile::new(dist, grid, n, k)?;
    check_feasibility_with(q, &eff, grid, tol)
}

pub fn check_feasibility_with(
    q: &InterimRule,
    eff: &EfficientProfile,
    grid: &TypeGrid,
    tol: f64,
) -> Result<FeasibilityReport> {
    check_len(q.values.len(), grid, "allocation")?;
    let g = grid.len();
    let mut slack = vec![0.0; g + 1];
    let mut tail = KahanSum::new();
    for i in (0..g).rev() {
        tail.add(q.values[i] * grid.cell_mass[i]);
        slack[i] = eff.tail[i] - tail.value();
    }
    let mut violations = Vec::new();
    let mut binding = Vec::new();
    for (i, &s) in slack.iter().enumerate() {
        if s < -tol {
            violations.push(Violation {
                kind: FeasibilityKind::TailExceedsEfficient,
                grid_index: i,
                theta: grid.bounds[i],
                magnitude: -s,
            });
        }
        if s.abs() <= tol {
            binding.push(i);
        }
    }
    let worst_slack = slack.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FeasibilityReport { worst_slack, violations, binding, slack })
}

/// Population total `n · E[α θ Q + (1 − α) U]` by cell-mass quadrature.
pub fn objective(
    q: &InterimRule,
    u: &UtilityProfile,
    grid: &TypeGrid,
    params: &MechParams,
) -> Result<f64> {
    check_len(q.values.len(), grid, "allocation")?;
    check_len(u.values.len(), grid, "utility")?;
    Ok(objective_values(&q.values, &u.values, grid, params))
}

pub(crate) fn objective_values(q: &[f64], u: &[f64], grid: &TypeGrid, p: &MechParams) -> f64 {
    let a = p.alpha;
    let per_agent = compensated_sum(
        (0..grid.len()).map(|i| grid.cell_mass[i] * (a * grid.points[i] * q[i] + (1.0 - a) * u[i])),
    );
    p.agents() as f64 * per_agent
}

/// Population totals of the objective's ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub matching_efficiency: f64,
    pub allocation: f64,
    pub utility: f64,
    pub effort_cost: f64,
}

pub fn accounting(q: &InterimRule, u: &UtilityProfile, grid: &TypeGrid, params: &MechParams) -> Accounting {
    let n = params.agents() as f64;
    let m = &grid.cell_mass;
    let (q, u) = (&q.values, &u.values);
    let total = |f: &dyn Fn(usize) -> f64| n * compensated_sum((0..grid.len()).map(|i| m[i] * f(i)));
    Accounting {
        matching_efficiency: total(&|i| grid.points[i] * q[i]),
        allocation: total(&|i| q[i]),
        utility: total(&|i| u[i]),
        effort_cost: total(&|i| q[i] - u[i]),
    }
}

/// Objective of the best incentive compatible implementation of `q`: the
/// canonical utility seeded with `u_low = Q(θ_lo)`.
pub fn v_alpha(q: &InterimRule, dist: &TypeDist, grid: &TypeGrid, params: &MechParams) -> Result<f64> {
    let rep = check_feasibility(q, dist, grid, params.agents(), params.items(), 1e-8)?;
    if !rep.is_feasible() {
        return Err(invalid(format!(
            "allocation is not feasible (worst tail slack {:e})",
            rep.worst_slack
        )));
    }
    let u = canonical_utility(q, grid, params.eta, q.values[0])?;
    objective(q, &u, grid, params)
}

/// Signal that type `theta` sends in the direct mechanism: inflation by the
/// effort `(Q − U) / η`.
pub fn signal_recommendation(q: f64, u: f64, eta: f64, theta: f64) -> Result<f64> {
    if u > q {
        return Err(invalid(format!("utility {u} exceeds allocation {q}")));
    }
    Ok(theta + (q - u) / eta)
}

pub fn effort_cost(s: f64, theta: f64, eta: f64) -> f64 {
    eta * (s - theta).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_grid(g: usize) -> (TypeDist, TypeGrid) {
        let d = TypeDist::uniform();
        let grid = TypeGrid::new(&d, g).unwrap();
        (d, grid)
    }

    fn rule(grid: &TypeGrid, f: impl Fn(f64) -> f64) -> InterimRule {
        InterimRule::new(grid.points.iter().map(|&t| f(t)).collect())
    }

    #[test]
    fn canonical_utility_kinks_at_one_half() {
        let (_, grid) = uniform_grid(4001);
        let q = rule(&grid, |t| t * t);
        let u = canonical_utility(&q, &grid, 1.0, 0.0).unwrap();
        let i = grid.nearest(0.75);
        assert!((u.values[i] - 0.5).abs() < 1e-6, "{}", u.values[i]);
        // analytic: θ² below 1/2, then 1/4 + (θ − 1/2)
        for (j, &t) in grid.points.iter().enumerate() {
            let exact = if t <= 0.5 { t * t } else { 0.25 + t - 0.5 };
            assert!((u.values[j] - exact).abs() < 1e-7);
        }
        assert!(check_ic(&q, &u, &grid, 1.0, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn canonical_utility_trivial_cases() {
        let (_, grid) = uniform_grid(101);
        let c = rule(&grid, |_| 0.3);
        assert_eq!(canonical_utility(&c, &grid, 0.7, 0.3).unwrap().values, c.values);
        let q = rule(&grid, |t| t);
        let u = canonical_utility(&q, &grid, 2.0, 0.0).unwrap();
        assert_eq!(u.values, q.values);
        assert!(canonical_utility(&q, &grid, 2.0, 0.1).is_err());
    }

    #[test]
    fn ic_violation_examples() {
        let (_, grid) = uniform_grid(11);
        let q = rule(&grid, |t| t);
        let slope = check_ic(&q, &UtilityProfile::new(q.values.clone()), &grid, 0.5, 1e-6).unwrap();
        assert_eq!(slope.len(), 10);
        assert!(slope.iter().all(|v| v.kind == IcViolationKind::SlopeAboveEta));

        let u = UtilityProfile::new(q.values.iter().map(|v| 0.9 * v).collect());
        let rep = check_ic(&q, &u, &grid, 1.0, 1e-6).unwrap();
        // every node but θ = 0 has U < Q with slope 0.9
        assert_eq!(rep.len(), 10);
        assert!(rep.iter().all(|v| v.kind == IcViolationKind::SlackWithEffort));

        let json = serde_json::to_value(&rep[0]).unwrap();
        for key in ["kind", "grid_index", "theta", "magnitude"] {
            assert!(json.get(key).is_some());
        }
        let short = InterimRule::new(vec![0.0; 3]);
        assert!(check_ic(&short, &u, &grid, 1.0, 1e-6).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let (d, grid) = uniform_grid(201);
        let eff = EfficientProfile::new(&d, &grid, 3, 1).unwrap();
        let q_e = InterimRule::new(eff.cell.clone());
        let rep = check_feasibility_with(&q_e, &eff, &grid, 1e-12).unwrap();
        assert!(rep.is_feasible());
        assert_eq!(rep.binding.len(), grid.len() + 1);

        let lottery = rule(&grid, |_| 1.0 / 3.0);
        let rep = check_feasibility_with(&lottery, &eff, &grid, 1e-12).unwrap();
        assert!(rep.is_feasible());
        assert_eq!(rep.binding, vec![0, grid.len()]);

        // shifted up on the top decile
        let mut bumped = eff.cell.clone();
        let cut = grid.nearest(0.9);
        for v in &mut bumped[cut..] {
            *v += 0.01;
        }
        let rep = check_feasibility_with(&InterimRule::new(bumped.clone()), &eff, &grid, 1e-9).unwrap();
        assert!(!rep.is_feasible());
        let mut tail = 0.0;
        let mut expect = Vec::new();
        for i in (0..grid.len()).rev() {
            tail += bumped[i] * grid.cell_mass[i];
            if eff.tail[i] - tail < -1e-9 {
                expect.push(i);
            }
        }
        expect.reverse();
        let got: Vec<usize> = rep.violations.iter().map(|v| v.grid_index).collect();
        assert_eq!(got, expect);
        // Q_E binds everywhere, so every boundary but the top one fails
        assert!(got.contains(&cut));
        assert_eq!(got.len(), grid.len());
    }

    #[test]
    fn objective_examples() {
        let (d, grid) = uniform_grid(2001);
        let params = MechParams::new(2, 1, 2.0, 0.5).unwrap();
        let q = rule(&grid, |t| t);
        let u = UtilityProfile::new(q.values.clone());
        let v = objective(&q, &u, &grid, &params).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-6, "{v}");

        let p1 = MechParams { alpha: 1.0, ..params };
        let zero_u = UtilityProfile::new(vec![0.0; grid.len()]);
        assert_eq!(
            objective(&q, &u, &grid, &p1).unwrap(),
            objective(&q, &zero_u, &grid, &p1).unwrap()
        );

        let c = rule(&grid, |_| 0.5);
        let cu = UtilityProfile::new(c.values.clone());
        let v = objective(&c, &cu, &grid, &params).unwrap();
        assert!((v - (0.5 * 0.5 + 0.5)).abs() < 1e-12);
        assert!((v_alpha(&c, &d, &grid, &params).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn wta_golden_value() {
        let (d, grid) = uniform_grid(2001);
        let params = MechParams::new(50, 1, 1.0, 0.0).unwrap();
        let eff = params.efficient_profile(&d, &grid).unwrap();
        let v = v_alpha(&InterimRule::new(eff.cell), &d, &grid, &params).unwrap();
        // θ† = (1/49)^(1/48) solves (n − 1)θ^(n − 2) = 1
        let n = 50.0f64;
        let t: f64 = (1.0f64 / 49.0).powf(1.0 / 48.0);
        let exact = n * (t.powf(n) / n + t.powf(n - 1.0) * (1.0 - t) + (1.0 - t).powi(2) / 2.0);
        assert!((exact - 0.242_264).abs() < 1e-6, "{exact}");
        assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
        assert!((v - 0.2425).abs() < 1e-3);
    }

    #[test]
    fn signals_and_costs() {
        assert!((signal_recommendation(0.5625, 0.5, 1.0, 0.75).unwrap() - 0.8125).abs() < 1e-15);
        assert_eq!(signal_recommendation(0.3, 0.3, 2.0, 0.4).unwrap(), 0.4);
        assert!((signal_recommendation(0.6, 0.4, 2.0, 0.5).unwrap() - 0.6).abs() < 1e-15);
        assert!(signal_recommendation(0.4, 0.6, 2.0, 0.5).is_err());
        assert!((effort_cost(0.8125, 0.75, 1.0) - 0.0625).abs() < 1e-15);
        assert_eq!(effort_cost(0.2, 0.3, 1.0), 0.0);
        assert_eq!(effort_cost(1.0, 0.0, 2.0), 2.0);
    }

    #[test]
    fn accounting_identity() {
        let (d, grid) = uniform_grid(501);
        let params = MechParams::new(5, 2, 1.0, 0.3).unwrap();
        let eff = params.efficient_profile(&d, &grid).unwrap();
        let q = InterimRule::new(eff.cell);
        let u = canonical_utility(&q, &grid, 1.0, q.values[0]).unwrap();
        let acc = accounting(&q, &u, &grid, &params);
        let direct = objective(&q, &u, &grid, &params).unwrap();
        let a = params.alpha;
        let via = a * acc.matching_efficiency + (1.0 - a) * (acc.allocation - acc.effort_cost);
        assert!((direct - via).abs() < 1e-10);
        assert!((acc.allocation - 2.0).abs() < 1e-12);
    }
}
