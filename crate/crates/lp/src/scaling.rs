/// Geometric-mean equilibration. Returns `(row_scale, col_scale)` such that
/// `row_scale[i] * a[i][j] * col_scale[j]` has entries near one in magnitude.
/// Factors are rounded to powers of two so scaling introduces no rounding.
pub(crate) fn equilibrate(
    rows: &[Vec<(usize, f64)>],
    num_vars: usize,
    passes: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut rs = vec![1.0; rows.len()];
    let mut cs = vec![1.0; num_vars];
    for _ in 0..passes {
        for (i, row) in rows.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(j, a) in row {
                let v = (a * cs[j]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi > 0.0 {
                rs[i] = pow2(1.0 / (lo * hi).sqrt());
            }
        }
        let mut lo = vec![f64::INFINITY; num_vars];
        let mut hi = vec![0.0f64; num_vars];
        for (i, row) in rows.iter().enumerate() {
            for &(j, a) in row {
                let v = (a * rs[i]).abs();
                if v > 0.0 {
                    lo[j] = lo[j].min(v);
                    hi[j] = hi[j].max(v);
                }
            }
        }
        for j in 0..num_vars {
            if hi[j] > 0.0 {
                cs[j] = pow2(1.0 / (lo[j] * hi[j]).sqrt());
            }
        }
    }
    (rs, cs)
}

fn pow2(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    2f64.powi(v.log2().round().clamp(-60.0, 60.0) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_are_powers_of_two() {
        let rows = vec![vec![(0, 1000.0), (1, 0.001)], vec![(0, 3.0)]];
        let (rs, cs) = equilibrate(&rows, 2, 4);
        for f in rs.iter().chain(&cs) {
            assert_eq!(f.log2().fract(), 0.0);
        }
    }

    #[test]
    fn badly_scaled_entries_are_pulled_together() {
        let rows = vec![vec![(0, 1e6), (1, 1e-6)]];
        let (rs, cs) = equilibrate(&rows, 2, 4);
        let a = (1e6 * rs[0] * cs[0]).abs();
        let b = (1e-6 * rs[0] * cs[1]).abs();
        assert!(a < 4.0 && b > 0.25, "{a} {b}");
    }
}
