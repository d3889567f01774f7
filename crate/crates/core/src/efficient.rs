//! The interim efficient allocation rule and its tail masses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{draw, RegularityParams, TypeDist, TypeGrid};
use crate::error::{invalid, Error, Result};
use crate::numeric::KahanSum;

pub(crate) fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(invalid(format!("need 1 <= k < n, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// Log-space binomial pmf terms `ln P[Bin(m, p) = j]` for `j` in `range`,
/// summed with weights after shifting by the largest exponent.
fn binomial_weighted_sum(
    m: usize,
    p: f64,
    range: std::ops::RangeInclusive<usize>,
    weight: impl Fn(usize) -> f64,
) -> Result<f64> {
    // Degenerate success probabilities put all mass on one point.
    if p <= 0.0 {
        return Ok(if range.contains(&0) { weight(0) } else { 0.0 });
    }
    if p >= 1.0 {
        return Ok(if range.contains(&m) { weight(m) } else { 0.0 });
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let (start, end) = (*range.start(), (*range.end()).min(m));
    if start > end {
        return Ok(0.0);
    }
    let mut ln_choose = 0.0;
    for j in 0..start {
        ln_choose += ((m - j) as f64).ln() - ((j + 1) as f64).ln();
    }
    let mut logs = Vec::with_capacity(end - start + 1);
    for j in start..=end {
        logs.push(ln_choose + j as f64 * lp + (m - j) as f64 * lq);
        if j < m {
            ln_choose += ((m - j) as f64).ln() - ((j + 1) as f64).ln();
        }
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = KahanSum::new();
    for (off, l) in logs.iter().enumerate() {
        s.add(weight(start + off) * (l - top).exp());
    }
    let v = s.value() * top.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericFailure(format!(
            "binomial sum with m = {m}, p = {p} is not finite"
        )))
    }
}

/// `Q_E` as a function of the CDF value `F(θ)`: the probability that at most
/// `k - 1` of `n - 1` opponents are above the agent.
pub fn q_efficient_from_cdf(n: usize, k: usize, cdf: f64) -> Result<f64> {
    check_nk(n, k)?;
    let v = binomial_weighted_sum(n - 1, 1.0 - cdf, 0..=k - 1, |_| 1.0)?;
    if v <= 0.5 {
        return Ok(v.clamp(0.0, 1.0));
    }
    // complement of the small upper tail keeps values near 1 monotone
    let upper = binomial_weighted_sum(n - 1, 1.0 - cdf, k..=n - 1, |_| 1.0)?;
    Ok((1.0 - upper).clamp(0.0, 1.0))
}

/// Per-agent efficient mass above a type with CDF value `F`:
/// `E[min(k, Bin(n, 1 - F))] / n`, equal to the tail integral of `Q_E dF`.
pub fn efficient_tail_from_cdf(n: usize, k: usize, cdf: f64) -> Result<f64> {
    check_nk(n, k)?;
    let v = binomial_weighted_sum(n, 1.0 - cdf, 1..=n, |j| j.min(k) as f64)?;
    Ok((v / n as f64).clamp(0.0, k as f64 / n as f64))
}

/// `k/n − T`: mass of the efficient rule below a boundary, accurate where
/// that mass is small.
fn efficient_head_from_cdf(n: usize, k: usize, cdf: f64) -> Result<f64> {
    let v = binomial_weighted_sum(n, 1.0 - cdf, 0..=k - 1, |j| (k - j) as f64)?;
    Ok((v / n as f64).clamp(0.0, k as f64 / n as f64))
}

pub fn q_efficient(dist: &TypeDist, n: usize, k: usize, theta: f64) -> Result<f64> {
    q_efficient_from_cdf(n, k, dist.cdf(theta)?)
}

/// The efficient rule of the economy replicated `z` times.
pub fn q_efficient_scaled(dist: &TypeDist, n: usize, k: usize, z: usize, theta: f64) -> Result<f64> {
    if z == 0 {
        return Err(invalid("scale factor z must be at least 1"));
    }
    q_efficient(dist, z * n, z * k, theta)
}

/// Type whose upper tail has probability `k / n`.
pub fn cutoff_type(dist: &TypeDist, n: usize, k: usize) -> Result<f64> {
    check_nk(n, k)?;
    dist.quantile(1.0 - k as f64 / n as f64)
}

/// Agent count beyond which `Q_E` is convex for a single item.
pub fn convexity_bound(params: &RegularityParams) -> usize {
    (2.0 + params.beta2 / (params.beta1_lo * params.beta1_lo)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `Q_E(θ)` from sampled opponent profiles.
pub fn q_efficient_mc(
    dist: &TypeDist,
    n: usize,
    k: usize,
    theta: f64,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    check_nk(n, k)?;
    dist.cdf(theta)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let wins: usize = shard_ranges(trials)
        .into_par_iter()
        .map(|(shard, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let mut wins = 0;
            for _ in 0..count {
                let above = (1..n).filter(|_| draw(dist, &mut rng) > theta).count();
                if above < k {
                    wins += 1;
                }
            }
            wins
        })
        .sum();
    Ok(bernoulli_estimate(wins, trials))
}

pub(crate) fn bernoulli_estimate(hits: usize, trials: usize) -> Estimate {
    let p = hits as f64 / trials as f64;
    Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
    }
}

pub(crate) const SHARDS: usize = 16;

/// Splits `trials` over a fixed number of shards, so results do not depend on
/// the thread count.
pub(crate) fn shard_ranges(trials: usize) -> Vec<(usize, usize)> {
    (0..SHARDS)
        .map(|s| (s, trials / SHARDS + usize::from(s < trials % SHARDS)))
        .collect()
}

/// `Q_E` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficientProfile {
    pub n: usize,
    pub k: usize,
    /// Per-agent efficient mass above each cell boundary; `tail[0] = k / n`
    /// and the last entry is 0.
    pub tail: Vec<f64>,
    /// Cell averages of `Q_E`, i.e. tail differences over cell masses. These
    /// are the values the solvers and the feasibility check work with.
    pub cell: Vec<f64>,
    /// Point values `Q_E(θ_i)`.
    pub point: Vec<f64>,
}

impl EfficientProfile {
    pub fn new(dist: &TypeDist, grid: &TypeGrid, n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        let g = grid.len();
        let mut tail = Vec::with_capacity(g + 1);
        tail.push(k as f64 / n as f64);
        for &b in &grid.bounds[1..g] {
            tail.push(efficient_tail_from_cdf(n, k, dist.cdf_clamped(b))?);
        }
        tail.push(0.0);
        let mut head = Vec::with_capacity(g + 1);
        head.push(0.0);
        for &b in &grid.bounds[1..g] {
            head.push(efficient_head_from_cdf(n, k, dist.cdf_clamped(b))?);
        }
        head.push(k as f64 / n as f64);
        let point = grid
            .points
            .iter()
            .map(|&t| q_efficient_from_cdf(n, k, dist.cdf_clamped(t)))
            .collect::<Result<Vec<_>>>()?;
        let cell = (0..g)
            .map(|i| {
                let m = grid.cell_mass[i];
                // difference whichever cumulative is small, to avoid cancellation
                let d = if head[i + 1] <= tail[i] { head[i + 1] - head[i] } else { tail[i] - tail[i + 1] };
                if m > 0.0 {
                    (d / m).clamp(0.0, 1.0)
                } else {
                    point[i]
                }
            })
            .collect();
        Ok(Self { n, k, tail, cell, point })
    }

    /// Second-difference convexity test on the point values with tolerance
    /// `1e-9 * G^2` on the scaled second difference.
    pub fn is_convex(&self, grid: &TypeGrid) -> bool {
        let g = grid.len();
        let h = grid.step();
        let tol = 1e-9 * (g * g) as f64;
        self.point
            .windows(3)
            .all(|w| (w[2] - 2.0 * w[1] + w[0]) / (h * h) >= -tol)
    }
}
