//! Population outcomes by Monte Carlo, and the quadrature comparisons for
//! scarce items and large economies.
//!
//! All population metrics are totals over the `z · n` agents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{draw, Family, TypeDist, TypeGrid};
use crate::efficient::{cutoff_type, shard_ranges, Estimate};
use crate::error::{invalid, Error, Result};
use crate::ic::{accounting, v_alpha, InterimRule, MechParams};
use crate::numeric::{gauss_legendre, KahanSum};
use crate::solver_lp::solve_lp_structured;
use crate::solver_param::{solve_convex_case, solve_large_scale, wta_baseline, RegionKind, StructuredSolution};

/// Grid used where an operation takes no grid of its own.
pub const DEFAULT_GRID: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: usize, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        Ok(Self { trials, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: usize,
    pub seed: u64,
    /// `n · E[θ Q(θ)]`.
    pub matching_efficiency: Estimate,
    /// `n · E[U(θ)]`.
    pub total_utility: Estimate,
    /// `n · E[Q(θ) − U(θ)]`.
    pub total_effort_cost: Estimate,
    /// `n · E[Q(θ)]`.
    pub total_allocation: Estimate,
    pub objective: Estimate,
    /// Mean signal sent in the direct mechanism.
    pub mean_signal: Estimate,
    /// Smallest effort cost seen in any trial.
    pub min_effort_cost: f64,
}

impl SimReport {
    pub const CSV_HEADER: &'static str = "trials,seed,matching_efficiency,matching_efficiency_se,\
total_utility,total_utility_se,total_effort_cost,total_effort_cost_se,total_allocation,\
total_allocation_se,objective,objective_se,mean_signal,mean_signal_se,min_effort_cost";

    /// One CSV row in the order of [`SimReport::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.trials.to_string(), self.seed.to_string()];
        for e in [
            self.matching_efficiency,
            self.total_utility,
            self.total_effort_cost,
            self.total_allocation,
            self.objective,
            self.mean_signal,
        ] {
            cols.push(format!("{:.16e}", e.mean));
            cols.push(format!("{:.16e}", e.stderr));
        }
        cols.push(format!("{:.16e}", self.min_effort_cost));
        cols.join(",")
    }
}

const FIELDS: usize = 6;

#[derive(Clone)]
struct Moments {
    sum: Vec<KahanSum>,
    sq: Vec<KahanSum>,
    min_cost: f64,
}

impl Moments {
    fn new() -> Self {
        Self { sum: vec![KahanSum::new(); FIELDS], sq: vec![KahanSum::new(); FIELDS], min_cost: f64::INFINITY }
    }

    fn push(&mut self, x: [f64; FIELDS]) {
        for (j, v) in x.into_iter().enumerate() {
            self.sum[j].add(v);
            self.sq[j].add(v * v);
        }
    }

    fn merge(mut self, other: &Moments) -> Self {
        for j in 0..FIELDS {
            self.sum[j].add(other.sum[j].value());
            self.sq[j].add(other.sq[j].value());
        }
        self.min_cost = self.min_cost.min(other.min_cost);
        self
    }

    fn estimate(&self, j: usize, trials: usize, scale: f64) -> Estimate {
        let t = trials as f64;
        let mean = self.sum[j].value() / t;
        let var = if trials > 1 {
            ((self.sq[j].value() - t * mean * mean) / (t - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate { mean: scale * mean, stderr: scale * (var / t).sqrt() }
    }
}

/// Draws types, looks up the interim allocation and utility of each type's
/// grid cell, and reports population totals.
pub fn simulate_interim(sol: &StructuredSolution, dist: &TypeDist, config: &SimConfig) -> Result<SimReport> {
    if config.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let p = &sol.params;
    let (q, u) = (&sol.q.values, &sol.u.values);
    if q.iter().zip(u).any(|(a, b)| b > &(a + 1e-9)) {
        return Err(invalid("utility exceeds allocation; the solution is not incentive compatible"));
    }
    let shards: Vec<Moments> = shard_ranges(config.trials)
        .into_par_iter()
        .map(|(shard, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(shard as u64);
            let mut m = Moments::new();
            for _ in 0..count {
                let theta = draw(dist, &mut rng);
                let i = sol.grid.nearest(theta);
                let cost = q[i] - u[i];
                m.min_cost = m.min_cost.min(cost);
                let me = theta * q[i];
                m.push([me, u[i], cost, q[i], p.alpha * me + (1.0 - p.alpha) * u[i], theta + cost / p.eta]);
            }
            m
        })
        .collect();
    let total = shards.iter().fold(Moments::new(), Moments::merge);
    let n = p.agents() as f64;
    let e = |j| total.estimate(j, config.trials, n);
    Ok(SimReport {
        trials: config.trials,
        seed: config.seed,
        matching_efficiency: e(0),
        total_utility: e(1),
        total_effort_cost: e(2),
        total_allocation: e(3),
        objective: e(4),
        mean_signal: total.estimate(5, config.trials, 1.0),
        min_effort_cost: total.min_cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Total utility `n · E[U_E]` of winner-take-all against `1 − 1/e + ε`.
pub fn wta_utility_bound_check(dist: &TypeDist, n: usize, eta: f64, eps: f64) -> Result<BoundCheck> {
    let grid = TypeGrid::new(dist, DEFAULT_GRID)?;
    let params = MechParams::new(n, 1, eta, 0.5)?;
    let sol = wta_baseline(dist, &params, &grid)?;
    let value = accounting(&sol.q, &sol.u, &grid, &params).utility;
    let bound = 1.0 - (-1.0f64).exp() + eps;
    Ok(BoundCheck { value, bound, pass: value <= bound })
}

/// Optimal solution, using the structured solver when `Q_E` is convex and
/// the linear program otherwise.
pub fn optimal_solution(dist: &TypeDist, params: &MechParams, grid: &TypeGrid) -> Result<StructuredSolution> {
    match solve_convex_case(dist, params, grid) {
        Err(Error::NotApplicable(_)) => solve_lp_structured(dist, params, grid),
        other => other,
    }
}

/// `V_α(optimal) / V_α(Q_E)` by quadrature.
pub fn payoff_ratio(dist: &TypeDist, params: &MechParams, grid: &TypeGrid) -> Result<f64> {
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(Error::Domain { what: "alpha", value: params.alpha, lo: 0.0, hi: 1.0 });
    }
    let best = optimal_solution(dist, params, grid)?;
    let eff = InterimRule::new(best.q_efficient.clone());
    Ok(v_alpha(&best.q, dist, grid, params)? / v_alpha(&eff, dist, grid, params)?)
}

/// `∫_t^θ̄ (θ − t) dF = ∫_t^θ̄ (1 − F)`.
fn upper_tail_integral(dist: &TypeDist, t: f64) -> f64 {
    let mut cuts = vec![t];
    cuts.extend(dist.breakpoints().into_iter().filter(|&b| b > t && b < dist.hi()));
    cuts.push(dist.hi());
    let mut s = KahanSum::new();
    for w in cuts.windows(2) {
        s.add(gauss_legendre(|x| 1.0 - dist.cdf_clamped(x), w[0], w[1], 4));
    }
    s.value()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub n: usize,
    pub theta1: f64,
    pub tail_integral: f64,
    /// `1 / (n η)`.
    pub tail_bound: f64,
    pub tail_ok: bool,
    /// `√(2 (θ̄ − θ̲) / (n η))`, uniform types only.
    pub width_bound: Option<f64>,
    pub width_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffTrend {
    pub rows: Vec<CutoffRow>,
    pub nondecreasing: bool,
}

/// Bottom of the first pool for each market size, with the tail bound that
/// forces it towards the top as `n` grows.
pub fn scarce_cutoff_trend(
    dist: &TypeDist,
    params: &MechParams,
    n_list: &[usize],
    grid: &TypeGrid,
) -> Result<CutoffTrend> {
    if params.k != 1 {
        return Err(invalid("the scarce-item trend is defined for k = 1"));
    }
    let uniform = matches!(dist.family(), Family::Uniform { .. });
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let p = MechParams { n, ..*params };
            let sol = solve_convex_case(dist, &p, grid)?;
            let theta1 = sol.cutoffs.map_or(dist.hi(), |c| c.theta1);
            let tail_integral = upper_tail_integral(dist, theta1);
            let tail_bound = 1.0 / (n as f64 * p.eta);
            let width_bound = uniform.then(|| (2.0 * (dist.hi() - dist.lo()) * tail_bound).sqrt());
            Ok(CutoffRow {
                n,
                theta1,
                tail_integral,
                tail_bound,
                tail_ok: tail_integral <= tail_bound,
                width_bound,
                width_ok: width_bound.map(|b| dist.hi() - theta1 <= b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nondecreasing = rows.windows(2).all(|w| w[1].theta1 >= w[0].theta1);
    Ok(CutoffTrend { rows, nondecreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRow {
    pub z: usize,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub theta3: Option<f64>,
    pub theta_c: f64,
    pub straddles: bool,
    pub labels: Vec<RegionKind>,
    pub objective: f64,
    pub wta_objective: f64,
}

/// Whether the pool of the `z`-replicated economy contains the efficient
/// cutoff type.
pub fn large_scale_pool_check(
    dist: &TypeDist,
    params: &MechParams,
    z_list: &[usize],
    grid: &TypeGrid,
) -> Result<Vec<PoolRow>> {
    if params.k >= params.n {
        return Err(invalid("large-scale check needs k < n"));
    }
    let theta_c = cutoff_type(dist, params.n, params.k)?;
    z_list
        .par_iter()
        .map(|&z| {
            let p = params.with_scale(z)?;
            let sol = solve_large_scale(dist, &p, grid)?;
            let wta = wta_baseline(dist, &p, grid)?;
            let pool = sol.segments_of(RegionKind::NoEffort).next();
            let (theta1, theta2) = match pool {
                Some(s) => (Some(s.lo), Some(s.hi)),
                None => (None, None),
            };
            Ok(PoolRow {
                z,
                theta1,
                theta2,
                theta3: sol.cutoffs.and_then(|c| c.theta3),
                theta_c,
                straddles: pool.is_some_and(|s| s.lo < theta_c && theta_c < s.hi),
                labels: sol.kinds(),
                objective: sol.objective,
                wta_objective: wta.objective,
            })
        })
        .collect()
}
