use crate::problem::Problem;
use crate::scaling::equilibrate;
use crate::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct Options {
    /// Iteration cap across both phases; `None` means 50 per variable.
    pub max_iter: Option<usize>,
    /// Primal feasibility tolerance on the scaled problem.
    pub feas_tol: f64,
    /// Reduced-cost tolerance on the scaled problem.
    pub opt_tol: f64,
    pub scale: bool,
    pub presolve: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iter: None,
            feas_tol: 1e-10,
            opt_tol: 1e-10,
            scale: true,
            presolve: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Primal point. For non-optimal statuses this is the last iterate.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve(problem: &Problem) -> Result<Solution, LpError> {
    solve_with(problem, &Options::default())
}

pub fn solve_with(problem: &Problem, opts: &Options) -> Result<Solution, LpError> {
    problem.validate()?;
    let n = problem.num_vars();
    let mut lo = problem.var_lo.clone();
    let mut hi = problem.var_hi.clone();

    let infeasible = |x: Vec<f64>| Solution {
        status: Status::Infeasible,
        objective: problem.objective_value(&x),
        x,
        iterations: 0,
    };
    let start_point = |lo: &[f64], hi: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| {
                if lo[j].is_finite() {
                    lo[j]
                } else if hi[j].is_finite() {
                    hi[j]
                } else {
                    0.0
                }
            })
            .collect()
    };

    // Merge duplicates, drop empty and free rows, fold singletons into bounds.
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut row_lo = Vec::new();
    let mut row_hi = Vec::new();
    for row in &problem.rows {
        let mut coeffs = row.coeffs.clone();
        coeffs.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        if row.lo > row.hi + bound_tol(row.lo, row.hi) {
            return Ok(infeasible(start_point(&lo, &hi)));
        }
        if !row.lo.is_finite() && !row.hi.is_finite() {
            continue;
        }
        if merged.is_empty() {
            if row.lo > 1e-12 || row.hi < -1e-12 {
                return Ok(infeasible(start_point(&lo, &hi)));
            }
            continue;
        }
        if opts.presolve && merged.len() == 1 {
            let (j, a) = merged[0];
            let (mut l, mut h) = (row.lo / a, row.hi / a);
            if a < 0.0 {
                std::mem::swap(&mut l, &mut h);
            }
            lo[j] = lo[j].max(l);
            hi[j] = hi[j].min(h);
            continue;
        }
        rows.push(merged);
        row_lo.push(row.lo);
        row_hi.push(row.hi);
    }
    for j in 0..n {
        if lo[j] > hi[j] {
            if lo[j] - hi[j] > bound_tol(lo[j], hi[j]) {
                return Ok(infeasible(start_point(&lo, &hi)));
            }
            let mid = 0.5 * (lo[j] + hi[j]);
            lo[j] = mid;
            hi[j] = mid;
        }
    }

    let (rs, cs) = if opts.scale {
        equilibrate(&rows, n, 6)
    } else {
        (vec![1.0; rows.len()], vec![1.0; n])
    };
    let cmax = problem
        .obj
        .iter()
        .zip(&cs)
        .map(|(c, s)| (c * s).abs())
        .fold(0.0, f64::max);
    let obj_scale = if cmax > 0.0 {
        2f64.powi((1.0 / cmax).log2().round() as i32)
    } else {
        1.0
    };

    let m = rows.len();
    let mut sx = Simplex::new(m, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, a) in row {
            sx.cols[j].push((i, a * rs[i] * cs[j]));
        }
    }
    for j in 0..n {
        sx.lo[j] = lo[j] / cs[j];
        sx.hi[j] = hi[j] / cs[j];
        sx.obj[j] = problem.obj[j] * cs[j] * obj_scale;
    }
    for i in 0..m {
        sx.lo[n + i] = row_lo[i] * rs[i];
        sx.hi[n + i] = row_hi[i] * rs[i];
    }

    let max_iter = opts.max_iter.unwrap_or(50 * n.max(20));
    let status = sx.run(max_iter, opts.feas_tol, opts.opt_tol);

    let x: Vec<f64> = (0..n)
        .map(|j| {
            let v = sx.x[j] * cs[j];
            v.clamp(lo[j], hi[j])
        })
        .collect();
    Ok(Solution {
        status,
        objective: problem.objective_value(&x),
        x,
        iterations: sx.iterations,
    })
}

fn bound_tol(a: f64, b: f64) -> f64 {
    let s = [a.abs(), b.abs(), 1.0]
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(1.0, f64::max);
    1e-9 * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

/// Column layout: `n` structurals, then `m` logicals (column `-e_i`), then
/// artificials (column `sign * e_row`).
struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    obj: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Dense basis inverse, column-major.
    binv: Vec<f64>,
    iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

const PIVOT_TOL: f64 = 1e-9;
const RECOMPUTE_EVERY: usize = 50;
const REINVERT_EVERY: usize = 1000;

impl Simplex {
    fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            cols: vec![Vec::new(); n],
            art_row: Vec::new(),
            art_sign: Vec::new(),
            lo: vec![0.0; n + m],
            hi: vec![0.0; n + m],
            obj: vec![0.0; n + m],
            x: vec![0.0; n + m],
            state: vec![State::Lower; n + m],
            basis: vec![0; m],
            binv: vec![0.0; m * m],
            iterations: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                f(i, a);
            }
        } else if j < self.n + self.m {
            f(j - self.n, -1.0);
        } else {
            let k = j - self.n - self.m;
            f(self.art_row[k], self.art_sign[k]);
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_col(j, |i, a| s += a * y[i]);
        s
    }

    fn run(&mut self, max_iter: usize, feas_tol: f64, opt_tol: f64) -> Status {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let (l, h) = (self.lo[j], self.hi[j]);
            (self.x[j], self.state[j]) = if l.is_finite() {
                (l, State::Lower)
            } else if h.is_finite() {
                (h, State::Upper)
            } else {
                (0.0, State::Free)
            };
        }
        let mut act = vec![0.0; m];
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, a) in &self.cols[j] {
                    act[i] += a * xj;
                }
            }
        }
        for i in 0..m {
            let s = n + i;
            let (l, h) = (self.lo[s], self.hi[s]);
            if act[i] >= l - feas_tol && act[i] <= h + feas_tol {
                self.x[s] = act[i];
                self.state[s] = State::Basic;
                self.basis[i] = s;
                self.binv[i * m + i] = -1.0;
            } else {
                let (b, st) = if act[i] < l {
                    (l, State::Lower)
                } else {
                    (h, State::Upper)
                };
                self.x[s] = b;
                self.state[s] = st;
                let sign = if b - act[i] >= 0.0 { 1.0 } else { -1.0 };
                let a = self.ncols();
                self.art_row.push(i);
                self.art_sign.push(sign);
                self.lo.push(0.0);
                self.hi.push(f64::INFINITY);
                self.obj.push(0.0);
                self.x.push((b - act[i]).abs());
                self.state.push(State::Basic);
                self.basis[i] = a;
                self.binv[i * m + i] = sign;
            }
        }

        let first_art = n + m;
        if self.ncols() > first_art {
            let cost: Vec<f64> = (0..self.ncols())
                .map(|j| if j >= first_art { -1.0 } else { 0.0 })
                .collect();
            match self.phase(&cost, max_iter, feas_tol, opt_tol) {
                Phase::IterationLimit => return Status::IterationLimit,
                Phase::Unbounded => unreachable!("phase one objective is bounded"),
                Phase::Optimal => {}
            }
            self.reinvert();
            self.recompute_basics();
            let infeas: f64 = self.x[first_art..].iter().sum();
            if infeas > feas_tol * (1.0 + m as f64) {
                return Status::Infeasible;
            }
            for j in first_art..self.ncols() {
                self.hi[j] = 0.0;
                if self.state[j] != State::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = State::Lower;
                }
            }
        }
        let cost = self.obj.clone();
        let status = match self.phase(&cost, max_iter, feas_tol, opt_tol) {
            Phase::Optimal => Status::Optimal,
            Phase::Unbounded => Status::Unbounded,
            Phase::IterationLimit => Status::IterationLimit,
        };
        self.reinvert();
        self.recompute_basics();
        status
    }

    fn phase(&mut self, cost: &[f64], max_iter: usize, feas_tol: f64, opt_tol: f64) -> Phase {
        let m = self.m;
        let ncols = self.ncols();
        let bland_after = 10 * ncols;
        let mut degenerate_run = 0usize;
        let mut since_reinvert = 0usize;
        let mut y = vec![0.0; m];
        let mut cb = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            if self.iterations >= max_iter {
                return Phase::IterationLimit;
            }
            let bland = degenerate_run >= bland_after;
            for i in 0..m {
                cb[i] = cost[self.basis[i]];
            }
            for (r, yr) in y.iter_mut().enumerate() {
                let col = &self.binv[r * m..(r + 1) * m];
                *yr = col.iter().zip(&cb).map(|(b, c)| b * c).sum();
            }

            // Pricing.
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..ncols {
                let dir = match self.state[j] {
                    State::Basic => continue,
                    _ if self.hi[j] <= self.lo[j] => continue,
                    st => {
                        let d = cost[j] - self.col_dot(j, &y);
                        match st {
                            State::Lower if d > opt_tol => (1.0, d),
                            State::Upper if d < -opt_tol => (-1.0, d),
                            State::Free if d.abs() > opt_tol => (d.signum(), d),
                            _ => continue,
                        }
                    }
                };
                let score = dir.1.abs();
                match enter {
                    None => enter = Some((j, dir.0, score)),
                    Some((_, _, best)) if !bland && score > best => {
                        enter = Some((j, dir.0, score))
                    }
                    _ => {}
                }
                if bland && enter.is_some() {
                    break;
                }
            }
            let Some((q, dir, _)) = enter else {
                return Phase::Optimal;
            };

            // alpha = B^-1 a_q
            alpha.iter_mut().for_each(|a| *a = 0.0);
            {
                let binv = &self.binv;
                self.for_col(q, |r, a| {
                    let col = &binv[r * m..(r + 1) * m];
                    for (al, b) in alpha.iter_mut().zip(col) {
                        *al += a * b;
                    }
                });
            }

            // Ratio test.
            let range = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, f64)> = None;
            if bland {
                let mut best_t = f64::INFINITY;
                for i in 0..m {
                    if alpha[i].abs() <= PIVOT_TOL {
                        continue;
                    }
                    let Some(t) = self.step_to_bound(i, -dir * alpha[i], 0.0) else {
                        continue;
                    };
                    let better = match leave {
                        None => true,
                        Some((p, _)) => {
                            t < best_t - 1e-12 || (t <= best_t + 1e-12 && self.basis[i] < self.basis[p])
                        }
                    };
                    if better {
                        best_t = best_t.min(t);
                        leave = Some((i, t));
                    }
                }
            } else {
                let mut tmax = f64::INFINITY;
                for i in 0..m {
                    if alpha[i].abs() <= PIVOT_TOL {
                        continue;
                    }
                    if let Some(t) = self.step_to_bound(i, -dir * alpha[i], feas_tol) {
                        tmax = tmax.min(t);
                    }
                }
                if tmax.is_finite() {
                    let mut best_a = 0.0;
                    for i in 0..m {
                        if alpha[i].abs() <= PIVOT_TOL {
                            continue;
                        }
                        if let Some(t) = self.step_to_bound(i, -dir * alpha[i], 0.0) {
                            if t <= tmax && alpha[i].abs() > best_a {
                                best_a = alpha[i].abs();
                                leave = Some((i, t));
                            }
                        }
                    }
                }
            }

            self.iterations += 1;
            let flip = match leave {
                None => {
                    if !range.is_finite() {
                        return Phase::Unbounded;
                    }
                    true
                }
                Some((_, t)) => range.is_finite() && range <= t,
            };
            let t = if flip { range } else { leave.unwrap().1 };
            let step = dir * t;
            self.x[q] += step;
            for i in 0..m {
                self.x[self.basis[i]] -= step * alpha[i];
            }
            if t <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            if flip {
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            } else {
                let (p, _) = leave.unwrap();
                let out = self.basis[p];
                let rate = -dir * alpha[p];
                if rate < 0.0 {
                    self.x[out] = self.lo[out];
                    self.state[out] = State::Lower;
                } else {
                    self.x[out] = self.hi[out];
                    self.state[out] = State::Upper;
                }
                self.state[q] = State::Basic;
                self.basis[p] = q;
                let piv = alpha[p];
                for r in 0..m {
                    let col = &mut self.binv[r * m..(r + 1) * m];
                    let e = col[p] / piv;
                    if e != 0.0 {
                        for (b, al) in col.iter_mut().zip(&alpha) {
                            *b -= al * e;
                        }
                    }
                    col[p] = e;
                }
                since_reinvert += 1;
            }

            if since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                since_reinvert = 0;
                self.recompute_basics();
            } else if self.iterations.is_multiple_of(RECOMPUTE_EVERY) {
                self.recompute_basics();
            }
        }
    }

    /// Step length until basic `i`, moving at `rate` per unit step, reaches a
    /// bound relaxed by `tol`.
    fn step_to_bound(&self, i: usize, rate: f64, tol: f64) -> Option<f64> {
        let b = self.basis[i];
        let xb = self.x[b];
        if rate < 0.0 && self.lo[b].is_finite() {
            Some(((xb - self.lo[b] + tol) / -rate).max(0.0))
        } else if rate > 0.0 && self.hi[b].is_finite() {
            Some(((self.hi[b] - xb + tol) / rate).max(0.0))
        } else {
            None
        }
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.ncols() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |i, a| rhs[i] -= a * xj);
            }
        }
        let mut xb = vec![0.0; m];
        for (r, &v) in rhs.iter().enumerate() {
            if v != 0.0 {
                for (x, b) in xb.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *x += v * b;
                }
            }
        }
        for i in 0..m {
            self.x[self.basis[i]] = xb[i];
        }
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting. A numerically singular basis keeps the old inverse.
    fn reinvert(&mut self) {
        let m = self.m;
        if m == 0 {
            return;
        }
        // Row-major augmented [B | I].
        let w = 2 * m;
        let mut a = vec![0.0; m * w];
        for (k, &j) in self.basis.iter().enumerate() {
            self.for_col(j, |i, v| a[i * w + k] = v);
        }
        for i in 0..m {
            a[i * w + m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut best = a[c * w + c].abs();
            for r in c + 1..m {
                let v = a[r * w + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-13 {
                return;
            }
            if p != c {
                for k in 0..w {
                    a.swap(c * w + k, p * w + k);
                }
            }
            let inv = 1.0 / a[c * w + c];
            for k in c..w {
                a[c * w + k] *= inv;
            }
            let (head, tail) = a.split_at_mut(c * w);
            let (pivot_row, rest) = tail.split_at_mut(w);
            for row in head.chunks_mut(w).chain(rest.chunks_mut(w)) {
                let f = row[c];
                if f != 0.0 {
                    for k in c..w {
                        row[k] -= f * pivot_row[k];
                    }
                }
            }
        }
        // binv[i][r] stored column-major at r * m + i.
        for i in 0..m {
            for r in 0..m {
                self.binv[r * m + i] = a[i * w + m + r];
            }
        }
    }
}
