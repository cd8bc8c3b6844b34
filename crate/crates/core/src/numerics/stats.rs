//! Streaming log-domain means, batch-means confidence intervals and
//! weighted linear regression.

/// Normal quantile used for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Streaming accumulator of `sum exp(x_i)` kept in log form.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
    count: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
            count: 0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, log_value: f64) {
        self.count += 1;
        if log_value == f64::NEG_INFINITY {
            return;
        }
        if log_value > self.max {
            self.scaled = self.scaled * (self.max - log_value).exp() + 1.0;
            self.max = log_value;
        } else {
            self.scaled += (log_value - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        self.count += other.count;
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled += other.scaled * (other.max - self.max).exp();
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn log_sum(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }

    pub fn log_mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NEG_INFINITY;
        }
        self.log_sum() - (self.count as f64).ln()
    }
}

/// A positive mean with its standard error expressed on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMean {
    pub log_mean: f64,
    /// Relative standard error, i.e. the delta-method standard error of
    /// `log_mean`.
    pub log_se: f64,
}

impl LogMean {
    pub fn mean(&self) -> f64 {
        self.log_mean.exp()
    }

    /// Two-sided 95% interval for the mean.
    pub fn ci95(&self) -> (f64, f64) {
        (
            (self.log_mean - Z95 * self.log_se).exp(),
            (self.log_mean + Z95 * self.log_se).exp(),
        )
    }
}

/// Combines equally sized batches into a mean with a batch-means standard
/// error. Batches holding no positive mass still count towards the mean.
pub fn batch_means(batches: &[LogSumExp]) -> LogMean {
    let logs: Vec<f64> = batches.iter().map(|b| b.log_mean()).collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY || batches.is_empty() {
        return LogMean {
            log_mean: f64::NEG_INFINITY,
            log_se: f64::INFINITY,
        };
    }
    let scaled: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let weights: Vec<f64> = batches.iter().map(|b| b.count() as f64).collect();
    let wsum: f64 = weights.iter().sum();
    let mean = scaled.iter().zip(&weights).map(|(s, w)| s * w).sum::<f64>() / wsum;
    let k = batches.len() as f64;
    let se = if batches.len() > 1 {
        let var = scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        f64::INFINITY
    };
    LogMean {
        log_mean: shift + mean.ln(),
        log_se: se / mean,
    }
}

/// Sample mean and standard error of plain values.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Weighted least squares of `y` on `x` with weights `w` (inverse
/// variances). Needs at least two distinct abscissae.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() != w.len() || x.len() < 2 {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(x, w)| w * x).sum();
    let sy: f64 = y.iter().zip(w).map(|(y, w)| w * y).sum();
    let xm = sx / sw;
    let ym = sy / sw;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * (x - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    Some(LinearFit {
        slope,
        intercept,
        slope_se: (1.0 / sxx).sqrt(),
        intercept_se: (1.0 / sw + xm * xm / sxx).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-3.0, 0.5, -700.0, 2.0];
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.push(x);
        }
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((acc.log_sum() - direct).abs() < 1e-14);
    }

    #[test]
    fn merge_is_order_insensitive_up_to_rounding() {
        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        a.push(-1000.0);
        a.push(-999.0);
        b.push(-998.5);
        let mut ab = a;
        ab.merge(&b);
        let mut ba = b;
        ba.merge(&a);
        assert!((ab.log_sum() - ba.log_sum()).abs() < 1e-12);
        assert_eq!(ab.count(), 3);
    }

    #[test]
    fn fit_recovers_exact_line() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 - 0.3 * x).collect();
        let w = vec![1.0; 6];
        let fit = weighted_linear_fit(&x, &y, &w).unwrap();
        assert!((fit.slope + 0.3).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-13);
    }
}
