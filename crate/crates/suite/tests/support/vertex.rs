//! Brute-force optimum of a small linear program over all basic points.

use contest_lp::Problem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Halfspace `g . x <= h`.
struct Half {
    g: Vec<f64>,
    h: f64,
}

fn halfspaces(p: &Problem) -> Vec<Half> {
    let n = p.num_vars();
    let mut out = Vec::new();
    let unit = |j: usize, s: f64| {
        let mut g = vec![0.0; n];
        g[j] = s;
        g
    };
    for j in 0..n {
        let (lo, hi) = p.var_bounds(j);
        if lo.is_finite() {
            out.push(Half { g: unit(j, -1.0), h: -lo });
        }
        if hi.is_finite() {
            out.push(Half { g: unit(j, 1.0), h: hi });
        }
    }
    for row in p.rows() {
        let mut g = vec![0.0; n];
        for &(j, a) in &row.coeffs {
            g[j] += a;
        }
        if row.hi.is_finite() {
            out.push(Half { g: g.clone(), h: row.hi });
        }
        if row.lo.is_finite() {
            out.push(Half { g: g.iter().map(|v| -v).collect(), h: -row.lo });
        }
    }
    out
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all basic feasible points, or `None` if there are none.
pub fn vertex_optimum(p: &Problem) -> Option<f64> {
    let n = p.num_vars();
    let hs = halfspaces(p);
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| hs[i].g.clone()).collect();
        let b = idx.iter().map(|&i| hs[i].h).collect();
        if let Some(x) = solve_square(a, b) {
            let ok = hs.iter().all(|h| {
                let lhs: f64 = h.g.iter().zip(&x).map(|(g, v)| g * v).sum();
                lhs <= h.h + 1e-9
            });
            if ok {
                let v = p.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < hs.len() - n + k {
                break;
            }
        }
        idx[k] += 1;
        for t in k + 1..n {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> Problem {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let mut p = Problem::new();
    for _ in 0..n {
        let lo = rng.gen_range(-4.0..1.0);
        let hi = lo + rng.gen_range(0.0..6.0);
        p.add_var(rng.gen_range(-5.0..5.0), lo, hi);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, rng.gen_range(-3.0..3.0)));
            }
        }
        let c = rng.gen_range(-3.0..6.0);
        match rng.gen_range(0..4) {
            0 => p.add_le(coeffs, c),
            1 => p.add_ge(coeffs, -c),
            2 => p.add_eq(coeffs, c * 0.3),
            _ => p.add_row(coeffs, -c.abs() - 1.0, c.abs()),
        };
    }
    p
}

