use std::fmt::Write as _;

use crate::LpError;

/// A constraint row `lo <= sum(coef * x[var]) <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// A maximisation problem. Minimise by negating the objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Problem {
    pub(crate) obj: Vec<f64>,
    pub(crate) var_lo: Vec<f64>,
    pub(crate) var_hi: Vec<f64>,
    pub(crate) rows: Vec<Row>,
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient `obj` and bounds `[lo, hi]`;
    /// use infinities for missing bounds. Returns its index.
    pub fn add_var(&mut self, obj: f64, lo: f64, hi: f64) -> usize {
        self.obj.push(obj);
        self.var_lo.push(lo);
        self.var_hi.push(hi);
        self.obj.len() - 1
    }

    /// Adds a ranged row. Duplicate variable entries are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        self.rows.push(Row { coeffs, lo, hi });
        self.rows.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, hi: f64) -> usize {
        self.add_row(coeffs, f64::NEG_INFINITY, hi)
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, lo: f64) -> usize {
        self.add_row(coeffs, lo, f64::INFINITY)
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, rhs, rhs)
    }

    pub fn set_objective(&mut self, var: usize, obj: f64) {
        self.obj[var] = obj;
    }

    pub fn num_vars(&self) -> usize {
        self.obj.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.obj
    }

    pub fn var_bounds(&self, var: usize) -> (f64, f64) {
        (self.var_lo[var], self.var_hi[var])
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest absolute violation of any row or variable bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.var_lo[j] - v).max(v - self.var_hi[j]);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            worst = worst.max(row.lo - act).max(act - row.hi);
        }
        worst
    }

    pub(crate) fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for j in 0..n {
            if !self.obj[j].is_finite() {
                return Err(LpError::NonFiniteObjective { var: j });
            }
            if self.var_lo[j].is_nan() || self.var_hi[j].is_nan() {
                return Err(LpError::NanBound { what: "variable", index: j });
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.lo.is_nan() || row.hi.is_nan() {
                return Err(LpError::NanBound { what: "row", index: i });
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::VariableOutOfRange { index: j, num_vars: n });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFiniteCoefficient { row: i });
                }
            }
        }
        Ok(())
    }

    /// Writes the problem in CPLEX LP text format. Variables are named by
    /// `var_name`, rows `r0, r1, ...`.
    pub fn to_lp_format(&self, var_name: impl Fn(usize) -> String) -> String {
        let mut out = String::from("Maximize\n obj:");
        let term = |out: &mut String, a: f64, name: &str| {
            let sign = if a < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {} {name}", a.abs());
        };
        for (j, &c) in self.obj.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, c, &var_name(j));
            }
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let mut lhs = String::new();
            for &(j, a) in &row.coeffs {
                term(&mut lhs, a, &var_name(j));
            }
            if lhs.is_empty() {
                lhs.push_str(" 0 ");
            }
            match (row.lo.is_finite(), row.hi.is_finite()) {
                (true, true) if row.lo == row.hi => {
                    let _ = writeln!(out, " r{i}:{lhs} = {}", row.lo);
                }
                (true, true) => {
                    let _ = writeln!(out, " r{i}_lo:{lhs} >= {}", row.lo);
                    let _ = writeln!(out, " r{i}_hi:{lhs} <= {}", row.hi);
                }
                (true, false) => {
                    let _ = writeln!(out, " r{i}:{lhs} >= {}", row.lo);
                }
                (false, true) => {
                    let _ = writeln!(out, " r{i}:{lhs} <= {}", row.hi);
                }
                (false, false) => {}
            }
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let name = var_name(j);
            let (lo, hi) = (self.var_lo[j], self.var_hi[j]);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    let _ = writeln!(out, " {lo} <= {name} <= {hi}");
                }
                (true, false) => {
                    let _ = writeln!(out, " {name} >= {lo}");
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {name} <= {hi}");
                }
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
            }
        }
        out.push_str("End\n");
        out
    }
}
