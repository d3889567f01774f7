use contest_lp::{solve, Problem, Status};
use rand::{Rng, SeedableRng};
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
fn vertex_optimum(p: &Problem) -> Option<f64> {
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

fn random_lp(rng: &mut ChaCha8Rng) -> Problem {
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

#[test]
fn two_hundred_random_programs_match_vertex_enumeration() {
    let mut optimal = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_lp(&mut rng);
        let s = solve(&p).unwrap();
        match vertex_optimum(&p) {
            Some(best) => {
                assert_eq!(s.status, Status::Optimal, "seed {seed}: {p:?}");
                assert!(
                    (s.objective - best).abs() <= 1e-9,
                    "seed {seed}: simplex {} vs vertices {best}",
                    s.objective
                );
                assert!(p.max_violation(&s.x) <= 1e-9, "seed {seed}");
                optimal += 1;
            }
            None => assert_eq!(s.status, Status::Infeasible, "seed {seed}: {s:?}"),
        }
    }
    assert!(optimal > 50, "too few feasible instances: {optimal}");
}

#[test]
fn solution_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let p = random_lp(&mut rng);
    let a = solve(&p).unwrap();
    let b = solve(&p).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degenerate_assignment_polytope() {
    // 4x4 assignment: highly degenerate, integral optimum.
    let w = [
        [7.0, 5.0, 3.0, 1.0],
        [2.0, 8.0, 6.0, 4.0],
        [5.0, 5.0, 5.0, 5.0],
        [1.0, 3.0, 9.0, 2.0],
    ];
    let mut p = Problem::new();
    let mut v = [[0usize; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            v[i][j] = p.add_var(w[i][j], 0.0, f64::INFINITY);
        }
    }
    for i in 0..4 {
        p.add_eq((0..4).map(|j| (v[i][j], 1.0)).collect(), 1.0);
        p.add_eq((0..4).map(|j| (v[j][i], 1.0)).collect(), 1.0);
    }
    let s = solve(&p).unwrap();
    assert_eq!(s.status, Status::Optimal);
    // 7 + 8 + 9 + 5
    assert!((s.objective - 29.0).abs() < 1e-9, "{}", s.objective);
}
