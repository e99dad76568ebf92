//! Compensated accumulation and stable powers of `1 - s`.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// `(1 - s)^m` computed as `exp(m * log1p(-s))`. Mass at or beyond 1 gives 0,
/// except for the empty power which is 1.
pub fn pow_one_minus(s: f64, m: u32) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    (f64::from(m) * (-s).ln_1p()).exp()
}
