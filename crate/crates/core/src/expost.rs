//! Ex post allocation for two agents and one item.
//!
//! Outside pools the higher type wins. Inside a pool the winner is drawn from
//! a tie-breaking kernel `w[a][b]` on a sub-grid of the pool, chosen by a
//! small linear program so that the interim win probability of each pooled
//! type matches the target allocation.

use contest_lp::{Problem, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{draw, TypeDist};
use crate::efficient::{shard_ranges, Estimate};
use crate::error::{invalid, Error, Result};
use crate::numeric::{gauss_legendre, KahanSum};
use crate::solver_param::{RegionKind, CLASSIFY_TOL, RegionSegment, StructuredSolution};

/// Sub-grid resolution inside each pool.
pub const POOL_NODES: usize = 101;

/// Pool win probabilities against a pooled opponent, on the pool sub-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledTarget {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    /// Conditional probability of each hat function given the pool.
    pub mu: Vec<f64>,
    pub p: Vec<f64>,
    /// `E[p]` before rescaling to exactly one half.
    pub raw_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolKernel {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub mu: Vec<f64>,
    pub p: Vec<f64>,
    /// Win probabilities the kernel implements: `p` moved onto the set of
    /// marginals realizable on the sub-grid.
    pub marginals: Vec<f64>,
    /// `max |marginals − p|`, nonzero only when `p` is tight against the
    /// efficient rule at a pool edge.
    pub target_gap: f64,
    /// `w[a][b]`: probability that pooled type `a` beats pooled type `b`.
    pub w: Vec<Vec<f64>>,
    pub marginal_residual: f64,
    pub antisymmetry_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpostRule {
    pub pools: Vec<PoolKernel>,
}

fn require_pair(sol: &StructuredSolution) -> Result<()> {
    let p = &sol.params;
    if p.n != 2 || p.k != 1 || p.z != 1 {
        return Err(Error::NotSupported(format!(
            "ex post synthesis needs n = 2, k = 1, z = 1; got n = {}, k = {}, z = {}",
            p.n, p.k, p.z
        )));
    }
    Ok(())
}

fn integrate_cdf(dist: &TypeDist, a: f64, b: f64) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(dist.breakpoints().into_iter().filter(|&t| t > a && t < b));
    cuts.push(b);
    let mut s = KahanSum::new();
    for w in cuts.windows(2) {
        s.add(gauss_legendre(|t| dist.cdf_clamped(t), w[0], w[1], 2));
    }
    s.value()
}

/// Hat-function masses of `nodes` under `dist`, conditional on `[lo, hi]`.
fn hat_masses(dist: &TypeDist, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let total = dist.cdf_clamped(nodes[n - 1]) - dist.cdf_clamped(nodes[0]);
    let mut mu = vec![0.0; n];
    for b in 0..n - 1 {
        let h = nodes[b + 1] - nodes[b];
        let area = integrate_cdf(dist, nodes[b], nodes[b + 1]);
        // ∫ (x_{b+1} − θ)/h dF and ∫ (θ − x_b)/h dF over the cell
        mu[b] += area / h - dist.cdf_clamped(nodes[b]);
        mu[b + 1] += dist.cdf_clamped(nodes[b + 1]) - area / h;
    }
    mu.iter().map(|m| m / total).collect()
}

/// Target `p(θ) = (Q(θ) − F(lo)) / (F(hi) − F(lo))` on the pool sub-grid, from
/// a least-squares line through the pooled nodes, rescaled to mean one half.
pub fn pooled_target(
    sol: &StructuredSolution,
    segment: &RegionSegment,
    dist: &TypeDist,
) -> Result<PooledTarget> {
    require_pair(sol)?;
    if segment.kind != RegionKind::NoEffort {
        return Err(invalid("pooled targets are defined on no-effort segments only"));
    }
    let (lo, hi) = (segment.lo, segment.hi);
    let nodes: Vec<f64> = (0..POOL_NODES)
        .map(|i| lo + (hi - lo) * i as f64 / (POOL_NODES - 1) as f64)
        .collect();
    let (flo, fhi) = (dist.cdf_clamped(lo), dist.cdf_clamped(hi));
    let flat = |raw_mean| PooledTarget {
        lo,
        hi,
        nodes: nodes.clone(),
        mu: vec![1.0 / POOL_NODES as f64; POOL_NODES],
        p: vec![0.5; POOL_NODES],
        raw_mean,
    };
    if fhi - flo <= 1e-14 {
        return Ok(flat(0.5));
    }
    let mu = hat_masses(dist, &nodes);
    let (q, u, th) = (&sol.q.values, &sol.u.values, &sol.grid.points);
    let pooled: Vec<usize> = (segment.start..=segment.end)
        .filter(|&i| (q[i] - u[i]).abs() <= 1e-9)
        .collect();
    if pooled.len() < 2 {
        return Ok(PooledTarget { mu, ..flat(0.5) });
    }
    let k = pooled.len() as f64;
    let mx = pooled.iter().map(|&i| th[i]).sum::<f64>() / k;
    let my = pooled.iter().map(|&i| q[i]).sum::<f64>() / k;
    let sxy: f64 = pooled.iter().map(|&i| (th[i] - mx) * (q[i] - my)).sum();
    let sxx: f64 = pooled.iter().map(|&i| (th[i] - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut p: Vec<f64> = nodes
        .iter()
        .map(|&x| ((my + slope * (x - mx) - flo) / (fhi - flo)).clamp(0.0, 1.0))
        .collect();
    let mean = |p: &[f64]| p.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>();
    let raw_mean = mean(&p);
    if (raw_mean - 0.5).abs() > 1e-3 {
        return Err(invalid(format!(
            "pooled mass is unbalanced (mean win probability {raw_mean}); the solution is not a valid pool"
        )));
    }
    // Rescale towards the nearer end so p stays in [0, 1].
    if raw_mean > 0.5 {
        let f = 0.5 / raw_mean;
        p.iter_mut().for_each(|v| *v *= f);
    } else if raw_mean < 0.5 {
        let f = 0.5 / (1.0 - raw_mean);
        p.iter_mut().for_each(|v| *v = 1.0 - (1.0 - *v) * f);
    }
    Ok(PooledTarget { lo, hi, nodes, mu, p, raw_mean })
}

fn suffix_sums(mu: &[f64]) -> Vec<f64> {
    let mut suffix = vec![0.0; mu.len() + 1];
    for a in (0..mu.len()).rev() {
        suffix[a] = suffix[a + 1] + mu[a];
    }
    suffix
}

/// Adds one variable per pair `a > b` and returns their indices.
fn pair_vars(prob: &mut Problem, mu: &[f64], obj: f64) -> Vec<Vec<usize>> {
    let n = mu.len();
    let mut index = vec![vec![usize::MAX; n]; n];
    for a in 0..n {
        for b in 0..a {
            index[a][b] = prob.add_var(obj * mu[a] * mu[b], 0.0, 1.0);
        }
    }
    index
}

fn marginal_row(index: &[Vec<usize>], mu: &[f64], a: usize) -> Vec<(usize, f64)> {
    let n = mu.len();
    let mut row = Vec::with_capacity(n + 1);
    for b in 0..a {
        row.push((index[a][b], mu[b]));
    }
    for b in a + 1..n {
        row.push((index[b][a], -mu[b]));
    }
    row
}

fn optimal(prob: &Problem) -> Result<Vec<f64>> {
    let sol = contest_lp::solve(prob)?;
    if sol.status != Status::Optimal {
        return Err(Error::LpStatus(format!("{:?}", sol.status)));
    }
    Ok(sol.x)
}

/// Nearest realizable marginals to `p` in μ-weighted L1.
fn realizable_marginals(mu: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let n = mu.len();
    let suffix = suffix_sums(mu);
    let mut prob = Problem::new();
    let index = pair_vars(&mut prob, mu, 0.0);
    let mut dev = Vec::with_capacity(n);
    for a in 0..n {
        let up = prob.add_var(-mu[a], 0.0, 1.0);
        let down = prob.add_var(-mu[a], 0.0, 1.0);
        let mut row = marginal_row(&index, mu, a);
        row.push((up, -1.0));
        row.push((down, 1.0));
        prob.add_eq(row, p[a] - 0.5 * mu[a] - suffix[a + 1]);
        dev.push((up, down));
    }
    let x = optimal(&prob)?;
    Ok(p.iter().zip(&dev).map(|(&v, &(u, d))| v + x[u] - x[d]).collect())
}

/// Finds a kernel with marginals `p` that favours higher types as much as
/// possible. A flat target gets the fair coin.
pub fn synth_kernel(target: &PooledTarget) -> Result<PoolKernel> {
    let (mu, p) = (&target.mu, &target.p);
    let n = mu.len();
    let mean: f64 = p.iter().zip(mu).map(|(a, b)| a * b).sum();
    if (mean - 0.5).abs() > 1e-6 {
        return Err(invalid(format!("target mean {mean} is not one half")));
    }
    let mut w = vec![vec![0.5; n]; n];
    let mut marginals = p.clone();
    if p.iter().any(|v| (v - 0.5).abs() > 1e-12) {
        marginals = realizable_marginals(mu, p)?;
        let suffix = suffix_sums(mu);
        let mut prob = Problem::new();
        let index = pair_vars(&mut prob, mu, 1.0);
        // the last marginal row is implied by the others
        for a in 0..n - 1 {
            prob.add_eq(marginal_row(&index, mu, a), marginals[a] - 0.5 * mu[a] - suffix[a + 1]);
        }
        let x = optimal(&prob)?;
        for a in 0..n {
            for b in 0..a {
                w[a][b] = x[index[a][b]];
                w[b][a] = 1.0 - x[index[a][b]];
            }
        }
    }
    let marginal_residual = (0..n)
        .map(|a| {
            let m: f64 = (0..n).map(|b| w[a][b] * mu[b]).sum();
            (m - marginals[a]).abs()
        })
        .fold(0.0, f64::max);
    let antisymmetry_residual = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| (w[a][b] + w[b][a] - 1.0).abs())
        .fold(0.0, f64::max);
    if marginal_residual > 1e-8 {
        return Err(Error::SynthesisFailure { residual: marginal_residual });
    }
    let target_gap = p.iter().zip(&marginals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(PoolKernel {
        lo: target.lo,
        hi: target.hi,
        nodes: target.nodes.clone(),
        mu: mu.clone(),
        p: p.clone(),
        marginals,
        target_gap,
        w,
        marginal_residual,
        antisymmetry_residual,
    })
}

/// Kernels for every no-effort segment of `sol`.
pub fn synthesize(sol: &StructuredSolution, dist: &TypeDist) -> Result<ExpostRule> {
    require_pair(sol)?;
    let pools = sol
        .segments_of(RegionKind::NoEffort)
        // strict ranking already implements segments where Q is efficient
        .filter(|s| (s.start..=s.end).any(|i| (sol.q.values[i] - sol.q_efficient[i]).abs() > CLASSIFY_TOL))
        .map(|seg| synth_kernel(&pooled_target(sol, seg, dist)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpostRule { pools })
}

impl ExpostRule {
    fn pool_of(&self, t: f64) -> Option<usize> {
        self.pools.iter().position(|k| t >= k.lo && t <= k.hi)
    }
}

/// Node of the pool sub-grid for type `t`, rounded to a neighbour with
/// probability proportional to proximity so that expected kernel values
/// interpolate linearly between nodes.
fn pool_node(k: &PoolKernel, t: f64, rng: &mut impl Rng) -> usize {
    let last = k.nodes.len() - 1;
    if k.hi <= k.lo {
        return 0;
    }
    let x = ((t - k.lo) / (k.hi - k.lo) * last as f64).clamp(0.0, last as f64);
    let a = (x.floor() as usize).min(last);
    let frac = x - a as f64;
    if a < last && rng.gen::<f64>() < frac {
        a + 1
    } else {
        a
    }
}

/// Index (0 or 1) of the agent receiving the item.
pub fn expost_allocate(types: (f64, f64), rule: &ExpostRule, rng: &mut impl Rng) -> usize {
    let (t0, t1) = types;
    let (p0, p1) = (rule.pool_of(t0), rule.pool_of(t1));
    if let (Some(i), Some(j)) = (p0, p1) {
        if i == j {
            let k = &rule.pools[i];
            let (a, b) = (pool_node(k, t0, rng), pool_node(k, t1, rng));
            let win = if a == b { 0.5 } else { k.w[a][b] };
            return if rng.gen::<f64>() < win { 0 } else { 1 };
        }
    }
    let rank = |t: f64, p: Option<usize>| p.map_or(t, |i| rule.pools[i].lo);
    let (r0, r1) = (rank(t0, p0), rank(t1, p1));
    if r0 > r1 {
        0
    } else if r1 > r0 {
        1
    } else if rng.gen::<bool>() {
        0
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub grid_index: usize,
    pub theta: f64,
    pub q: f64,
    pub estimate: Estimate,
    /// Standard error under the hypothesised win probability.
    pub sigma: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimValidation {
    pub trials: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub all_pass: bool,
}

/// Ten interior grid nodes, skipping mixed cells where `Q` is not a pure
/// pool or efficient value.
pub fn checkpoints(sol: &StructuredSolution) -> Vec<usize> {
    let g = sol.grid.len();
    let (q, u) = (&sol.q.values, &sol.u.values);
    let mixed = |i: usize| {
        sol.segments_of(RegionKind::NoEffort)
            .any(|s| i >= s.start && i <= s.end && (q[i] - u[i]).abs() > 1e-9)
    };
    (0..10)
        .map(|j| {
            let mut i = (((j as f64 + 0.5) / 10.0) * (g - 1) as f64).round() as usize;
            while mixed(i) && i > 0 {
                i -= 1;
            }
            i
        })
        .collect()
}

/// Monte Carlo interim win probabilities of the ex post rule at ten
/// checkpoints, each compared with the solution's `Q` at three standard errors.
pub fn validate_interim(
    sol: &StructuredSolution,
    rule: &ExpostRule,
    dist: &TypeDist,
    trials: usize,
    seed: u64,
) -> Result<InterimValidation> {
    require_pair(sol)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let points = checkpoints(sol);
    let checkpoints: Vec<Checkpoint> = points
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            let theta = sol.grid.points[i];
            let wins: usize = shard_ranges(trials)
                .into_par_iter()
                .map(|(shard, count)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((j * 1000 + shard) as u64);
                    (0..count)
                        .filter(|_| {
                            let other = draw(dist, &mut rng);
                            expost_allocate((theta, other), rule, &mut rng) == 0
                        })
                        .count()
                })
                .sum();
            let est = wins as f64 / trials as f64;
            let q = sol.q.values[i];
            let sigma = (q * (1.0 - q) / trials as f64).sqrt().max(1.0 / trials as f64);
            let estimate = Estimate { mean: est, stderr: (est * (1.0 - est) / trials as f64).sqrt() };
            Checkpoint { grid_index: i, theta, q, estimate, sigma, pass: (est - q).abs() <= 3.0 * sigma }
        })
        .collect();
    let all_pass = checkpoints.iter().all(|c| c.pass);
    Ok(InterimValidation { trials, checkpoints, all_pass })
}
