/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = KahanSum::new();
    for v in values {
        s.add(v);
    }
    s.value()
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let p = panels.max(2).next_multiple_of(2);
    let h = (b - a) / p as f64;
    let mut s = KahanSum::new();
    s.add(f(a));
    s.add(f(b));
    for i in 1..p {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s.add(w * f(a + i as f64 * h));
    }
    s.value() * h / 3.0
}

/// Five-point Gauss-Legendre on `pieces` equal subintervals.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut s = KahanSum::new();
    for p in 0..pieces {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            s.add(w * f(mid + 0.5 * h * x));
        }
    }
    s.value() * 0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v.drain(..)), 2.0);
    }

    #[test]
    fn quadratures_integrate_polynomials() {
        assert!((simpson(|x| x * x, 0.0, 1.0, 10) - 1.0 / 3.0).abs() < 1e-14);
        let v = gauss_legendre(|x| x.powi(7), 0.0, 2.0, 1);
        assert!((v - 32.0).abs() < 1e-9, "{v}");
    }
}
