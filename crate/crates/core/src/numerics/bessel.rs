//! Exponentially scaled modified Bessel function of order zero.

/// `exp(-x) I_0(x)` for `x >= 0`, accurate to a few ulp.
pub fn i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 20.0 {
        // power series: terms are positive so there is no cancellation
        let y = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= y / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic expansion, truncated at its smallest term
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next.abs() >= term.abs() || next < 1e-17 * sum {
                sum += next;
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}
