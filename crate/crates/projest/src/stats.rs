//! Small statistical utilities: compensated summation, sample moments and the
//! one-sample Kolmogorov-Smirnov statistic.

/// Compensated accumulator (Kahan-Babuška-Neumaier variant).
///
/// Tracks a running correction term so that long sums, and sums with heavy
/// cancellation, keep close to full f64 accuracy. The correction handles the
/// case where the incoming term is larger than the running sum, which plain
/// Kahan summation does not.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    correction: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.correction += (self.sum - t) + value;
        } else {
            self.correction += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.correction
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc.value()
    }
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two observations");
    let mean = KahanSum::sum_iter(values.iter().copied()) / n as f64;
    let ss = KahanSum::sum_iter(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1) as f64)
}

/// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
///
/// D = sup_x |F_n(x) - F(x)| evaluated at the jump points of the empirical
/// distribution function.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    assert!(n > 0.0, "empty sample");
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let upper = (i as f64 + 1.0) / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    d
}
