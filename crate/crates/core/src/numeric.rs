//! Log-domain arithmetic shared by the samplers and enumeration routines.

use statrs::function::gamma::ln_gamma;

/// ln(k!) via the log-gamma function; exactly 0 for k <= 1.
pub fn ln_factorial(k: u64) -> f64 {
    if k <= 1 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// k * ln(k) with the 0 * ln(0) = 0 convention.
pub fn xlnx(k: f64) -> f64 {
    if k > 0.0 {
        k * k.ln()
    } else {
        0.0
    }
}

/// log(sum_i exp(x_i)) without leaving the log domain.
///
/// Returns -inf on an empty slice or when every entry is -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Streaming log-sum-exp accumulator for sums too large to materialize.
#[derive(Debug, Clone)]
pub struct LogSumAcc {
    max: f64,
    sum: f64, // sum of exp(x - max)
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum > 0.0 {
            self.max + self.sum.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// Mean and standard error of a slice.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Linear interpolation of y at `x` on a curve given by parallel sorted-x arrays.
/// Clamps outside the x range.
pub fn interp_sorted(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.partition_point(|&v| v < x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if x1 == x0 {
        return 0.5 * (y0 + y1);
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
