use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `P[Σ ≥ (p + η) n]`
    Upper,
    /// `P[Σ ≤ (p - η) n]`
    Lower,
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("p = {p} is not in (0, 1)")))
    }
}

fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Bernoulli rate function
/// `ψ_p(η) = (p+η) log((p+η)/p) + (1-p-η) log((1-p-η)/(1-p))`,
/// `+∞` outside `[-p, 1-p]`.
pub fn psi_p(p: f64, eta: f64) -> Result<f64> {
    check_p(p)?;
    if eta.is_nan() {
        return Err(Error::invalid("eta is NaN"));
    }
    if eta < -p || eta > 1.0 - p {
        return Ok(f64::INFINITY);
    }
    let v = xlogy_ratio(p + eta, p) + xlogy_ratio(1.0 - p - eta, 1.0 - p);
    Ok(v.max(0.0))
}

/// `sup_λ [λ(p+η) - log(1 - p + p e^λ)]` by golden-section search over
/// `λ ∈ [-50, 50]`.
pub fn psi_p_sup(p: f64, eta: f64) -> Result<f64> {
    check_p(p)?;
    let g = |l: f64| l * (p + eta) - (1.0 - p + p * l.exp()).ln();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (-50.0f64, 50.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    Ok(g(-50.0).max(g(50.0)).max(gc).max(gd).max(0.0))
}

/// `exp(-n ψ_p(±η))`, an upper bound for the binomial tail on `side`.
pub fn chernoff_upper(n: u64, p: f64, eta: f64, side: Side) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if eta < 0.0 {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    let psi = match side {
        Side::Upper => psi_p(p, eta)?,
        Side::Lower => psi_p(p, -eta)?,
    };
    Ok((-(n as f64) * psi).exp())
}

/// `[2c' log(1 + c/(2c')) + 2c'] n`, a bound on the log of the number of
/// surgeries with `cn` coarse steps and `c'n` cuts.
pub fn surgery_count_bound(c: f64, c_prime: f64, n: f64) -> Result<f64> {
    if !(c >= 0.0 && c_prime >= 0.0 && n >= 0.0) {
        return Err(Error::invalid("surgery parameters must be nonnegative"));
    }
    if c_prime == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * c_prime * (c / (2.0 * c_prime)).ln_1p() + 2.0 * c_prime) * n)
}

/// `C(K + 2j, 2j)` in floating point.
pub fn surgery_binomial(k: u64, two_j: u64) -> f64 {
    (1..=two_j).fold(1.0, |acc, i| acc * (k + i) as f64 / i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi_p(0.3, 0.0).unwrap(), 0.0);
        assert!((psi_p(0.3, 0.7).unwrap() - (1.0f64 / 0.3).ln()).abs() < 1e-15);
        let v = psi_p(0.5, 0.25).unwrap();
        assert!((v - (0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln())).abs() < 1e-15);
        assert!((v - 0.130_812).abs() < 1e-6);
        assert!((psi_p_sup(0.5, 0.25).unwrap() - v).abs() < 1e-9);
        assert_eq!(psi_p(0.3, 0.8).unwrap(), f64::INFINITY);
        assert_eq!(psi_p(0.3, -0.31).unwrap(), f64::INFINITY);
    }

    #[test]
    fn chernoff_trivial_and_surgery_zero() {
        assert_eq!(chernoff_upper(10, 0.4, 0.0, Side::Upper).unwrap(), 1.0);
        assert_eq!(surgery_count_bound(3.0, 0.0, 5.0).unwrap(), 0.0);
        assert_eq!(surgery_binomial(2, 2), 6.0);
        assert_eq!(surgery_binomial(12, 8), 125_970.0);
    }

    proptest! {
        #[test]
        fn quadratic_lower_bound(p in 0.01f64..0.99, t in 0.0f64..1.0) {
            let eta = t * p;
            prop_assert!(psi_p(p, -eta).unwrap() >= eta * eta / (2.0 * p) - 1e-15);
        }

        #[test]
        fn closed_form_matches_supremum(p in 0.02f64..0.98, t in 0.0f64..1.0) {
            let eta = -p + t * 0.999;
            prop_assume!(eta <= 1.0 - p);
            let a = psi_p(p, eta).unwrap();
            let b = psi_p_sup(p, eta).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{} {}", a, b);
        }
    }
}
