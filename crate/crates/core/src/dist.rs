//! Type distributions, type grids and density regularity checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Distribution family as written in scenario files, e.g.
/// `{ "family": "power", "a": 2.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Uniform {
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    /// `F(θ) = θ^a` on `[0, 1]`.
    Power { a: f64 },
    /// CDF interpolating `(θ, F(θ))` knots linearly.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

fn one() -> f64 {
    1.0
}

/// A validated continuous distribution on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct TypeDist {
    family: Family,
}

impl TryFrom<Family> for TypeDist {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        TypeDist::new(family)
    }
}

impl From<TypeDist> for Family {
    fn from(d: TypeDist) -> Family {
        d.family
    }
}

impl TypeDist {
    pub fn new(family: Family) -> Result<Self> {
        match &family {
            Family::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            Family::Power { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(invalid(format!("power exponent must be positive, got {a}")));
                }
            }
            Family::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(invalid("piecewise linear CDF needs at least two knots"));
                }
                if knots.iter().any(|(t, f)| !t.is_finite() || !f.is_finite()) {
                    return Err(invalid("knots must be finite"));
                }
                if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 1.0 {
                    return Err(invalid("knot CDF values must start at 0 and end at 1"));
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(invalid("knot abscissae must be strictly increasing"));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(invalid("knot CDF values must be nondecreasing"));
                    }
                }
            }
        }
        Ok(Self { family })
    }

    pub fn uniform() -> Self {
        Self::new(Family::Uniform { lo: 0.0, hi: 1.0 }).unwrap()
    }

    pub fn power(a: f64) -> Result<Self> {
        Self::new(Family::Power { a })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(Family::PiecewiseLinear { knots })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn lo(&self) -> f64 {
        match &self.family {
            Family::Uniform { lo, .. } => *lo,
            Family::Power { .. } => 0.0,
            Family::PiecewiseLinear { knots } => knots[0].0,
        }
    }

    pub fn hi(&self) -> f64 {
        match &self.family {
            Family::Uniform { hi, .. } => *hi,
            Family::Power { .. } => 1.0,
            Family::PiecewiseLinear { knots } => knots[knots.len() - 1].0,
        }
    }

    fn check_support(&self, theta: f64) -> Result<()> {
        if theta >= self.lo() && theta <= self.hi() {
            Ok(())
        } else {
            Err(Error::Domain { what: "theta", value: theta, lo: self.lo(), hi: self.hi() })
        }
    }

    pub fn cdf(&self, theta: f64) -> Result<f64> {
        self.check_support(theta)?;
        Ok(self.cdf_clamped(theta))
    }

    pub fn pdf(&self, theta: f64) -> Result<f64> {
        self.check_support(theta)?;
        Ok(self.pdf_clamped(theta))
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain { what: "u", value: u, lo: 0.0, hi: 1.0 });
        }
        Ok(self.quantile_clamped(u))
    }

    /// CDF with `theta` clamped into the support.
    pub fn cdf_clamped(&self, theta: f64) -> f64 {
        let (lo, hi) = (self.lo(), self.hi());
        if theta <= lo {
            return 0.0;
        }
        if theta >= hi {
            return 1.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => (theta - lo) / (hi - lo),
            Family::Power { a } => theta.powf(*a),
            Family::PiecewiseLinear { knots } => {
                let i = segment_of(knots, theta);
                let ((t0, f0), (t1, f1)) = (knots[i], knots[i + 1]);
                f0 + (f1 - f0) * (theta - t0) / (t1 - t0)
            }
        }
    }

    /// Density; right-continuous at piecewise-linear knots, left limit at `hi`.
    pub fn pdf_clamped(&self, theta: f64) -> f64 {
        let theta = theta.clamp(self.lo(), self.hi());
        match &self.family {
            Family::Uniform { lo, hi } => 1.0 / (hi - lo),
            Family::Power { a } => {
                if theta == 0.0 {
                    if *a < 1.0 {
                        f64::INFINITY
                    } else if *a == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    a * theta.powf(a - 1.0)
                }
            }
            Family::PiecewiseLinear { knots } => {
                let i = segment_of(knots, theta);
                let ((t0, f0), (t1, f1)) = (knots[i], knots[i + 1]);
                (f1 - f0) / (t1 - t0)
            }
        }
    }

    /// Smallest type with `cdf >= u`, `u` clamped into `[0, 1]`.
    pub fn quantile_clamped(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let t = match &self.family {
            Family::Uniform { lo, hi } => lo + u * (hi - lo),
            Family::Power { a } => u.powf(1.0 / a),
            Family::PiecewiseLinear { knots } => {
                if u <= 0.0 {
                    return knots[0].0;
                }
                // first knot with F >= u
                let j = knots.partition_point(|&(_, f)| f < u).max(1);
                let ((t0, f0), (t1, f1)) = (knots[j - 1], knots[j]);
                if f1 == f0 {
                    t0
                } else {
                    t0 + (t1 - t0) * (u - f0) / (f1 - f0)
                }
            }
        };
        t.clamp(self.lo(), self.hi())
    }

    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::Power { a } => a / (a + 1.0),
            Family::PiecewiseLinear { knots } => knots
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) * 0.5 * (w[0].0 + w[1].0))
                .sum(),
        }
    }

    /// Points where the density is discontinuous, other than the support ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::PiecewiseLinear { knots } => {
                knots[1..knots.len() - 1].iter().map(|k| k.0).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Whether the density vanishes somewhere on the support, which the
    /// structural results assume away. Such distributions are accepted with a
    /// warning.
    pub fn density_vanishes(&self) -> bool {
        match &self.family {
            Family::Uniform { .. } => false,
            Family::Power { a } => *a > 1.0,
            Family::PiecewiseLinear { knots } => knots.windows(2).any(|w| w[1].1 == w[0].1),
        }
    }
}

fn segment_of(knots: &[(f64, f64)], theta: f64) -> usize {
    // last knot with abscissa <= theta, so knots belong to the segment on their right
    let i = knots.partition_point(|&(t, _)| t <= theta);
    i.saturating_sub(1).min(knots.len() - 2)
}

/// Density bounds and derivative lower bound of the regularity assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub beta1_lo: f64,
    pub beta1_hi: f64,
    pub beta2: f64,
}

impl RegularityParams {
    pub fn new(beta1_lo: f64, beta1_hi: f64, beta2: f64) -> Result<Self> {
        if !(beta1_lo > 0.0 && beta1_lo <= beta1_hi && beta1_hi.is_finite()) {
            return Err(invalid(format!(
                "need 0 < beta1_lo <= beta1_hi < inf, got {beta1_lo}, {beta1_hi}"
            )));
        }
        if !(beta2 >= 0.0 && beta2.is_finite()) {
            return Err(invalid(format!("beta2 must be nonnegative, got {beta2}")));
        }
        Ok(Self { beta1_lo, beta1_hi, beta2 })
    }
}

/// Uniform grid of `G` nodes on the support.
///
/// Each node owns the dual cell between the midpoints to its neighbours, so
/// there are `G` masses and `G + 1` cell boundaries, the first and last being
/// the support ends. Masses are exact CDF differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeGrid {
    pub points: Vec<f64>,
    pub bounds: Vec<f64>,
    pub cell_mass: Vec<f64>,
}

impl TypeGrid {
    pub fn new(dist: &TypeDist, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {size}")));
        }
        let (lo, hi) = (dist.lo(), dist.hi());
        let step = (hi - lo) / (size - 1) as f64;
        let mut points: Vec<f64> = (0..size).map(|i| lo + i as f64 * step).collect();
        points[size - 1] = hi;
        let mut bounds = Vec::with_capacity(size + 1);
        bounds.push(lo);
        bounds.extend(points.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        bounds.push(hi);
        let cdf: Vec<f64> = bounds.iter().map(|&b| dist.cdf_clamped(b)).collect();
        let cell_mass = cdf.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { points, bounds, cell_mass })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.points[1] - self.points[0]
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.len() - 1]
    }

    /// Index of the node whose cell contains `theta`.
    pub fn nearest(&self, theta: f64) -> usize {
        let i = ((theta - self.lo()) / self.step()).round();
        (i.max(0.0) as usize).min(self.len() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityKind {
    DensityBelowBound,
    DensityAboveBound,
    SlopeBelowBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityViolation {
    pub kind: RegularityKind,
    pub grid_index: usize,
    pub theta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub violations: Vec<RegularityViolation>,
}

impl RegularityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the density bounds at every node and the forward-difference density
/// slope on every cell.
pub fn check_regularity(
    dist: &TypeDist,
    params: &RegularityParams,
    grid: &TypeGrid,
) -> RegularityReport {
    let f: Vec<f64> = grid.points.iter().map(|&t| dist.pdf_clamped(t)).collect();
    let mut violations = Vec::new();
    for (i, (&t, &fi)) in grid.points.iter().zip(&f).enumerate() {
        if fi < params.beta1_lo {
            violations.push(RegularityViolation {
                kind: RegularityKind::DensityBelowBound,
                grid_index: i,
                theta: t,
                value: fi,
            });
        }
        if fi > params.beta1_hi {
            violations.push(RegularityViolation {
                kind: RegularityKind::DensityAboveBound,
                grid_index: i,
                theta: t,
                value: fi,
            });
        }
        if i + 1 < grid.len() {
            let slope = (f[i + 1] - fi) / (grid.points[i + 1] - t);
            if slope < -params.beta2 {
                violations.push(RegularityViolation {
                    kind: RegularityKind::SlopeBelowBound,
                    grid_index: i,
                    theta: t,
                    value: slope,
                });
            }
        }
    }
    RegularityReport { violations }
}

/// `count` iid draws by inverse transform from a seeded ChaCha8 stream.
pub fn sample_types(dist: &TypeDist, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| draw(dist, &mut rng)).collect()
}

pub fn draw(dist: &TypeDist, rng: &mut impl Rng) -> f64 {
    dist.quantile_clamped(rng.gen::<f64>())
}
