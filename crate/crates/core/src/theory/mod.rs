//! Closed-form and numerically integrated quantities: the function `f`, the
//! rate integral `𝔉_β = ∫ f(βz) dμ(z)`, the mobility-edge integral, and the
//! splitting, large-deviation and scale constructions built on them.

mod bernoulli;
mod speed;
mod split;

pub use bernoulli::{chernoff_upper, psi_p, psi_p_sup, surgery_binomial, surgery_count_bound, Side};
pub use speed::{optimal_speed, CostProfile};
pub use split::{
    classify_case, default_cutoff, delta_admissible, m_beta, rho_grid_split, riemann_split, scales, z0_root, CaseLabel,
    Classification, MBeta, RhoCell, RhoSplit, RiemannSplit, ScaleSet, SplitResult, MAX_GRID_CELLS,
};

use crate::environment::PotentialSpec;
use crate::error::{Error, Result};
use crate::numerics::quadrature::Quadrature;

/// Escape probability of the three-dimensional walk, `1 / 1.516386059151978`.
pub const Q3: f64 = 0.659_462_670_449_000_9;

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("q_d = {q} is not in (0, 1)")))
    }
}

/// `f(z) = q (1 - e^{-z}) / (1 - (1 - q) e^{-z})`.
pub fn f_eval(z: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(z >= 0.0) {
        return Err(Error::invalid(format!("f needs z >= 0, got {z}")));
    }
    Ok(f_unchecked(z, q))
}

/// `f` without argument checks, written as `q / (1 + q e^{-z} / (1 - e^{-z}))`
/// with `expm1`: small `z` keeps full relative precision and every step is
/// monotone under rounding, so the computed `f` is nondecreasing.
pub(crate) fn f_unchecked(z: f64, q: f64) -> f64 {
    if z == f64::INFINITY {
        return q;
    }
    let u = -(-z).exp_m1();
    q / (1.0 + q * ((-z).exp() / u))
}

/// The equivalent form `(q/(1-q)) (1 - q / (1 - (1-q) e^{-z}))`.
pub fn f_alt(z: f64, q: f64) -> f64 {
    q / (1.0 - q) * (1.0 - q / (1.0 - (1.0 - q) * (-z).exp()))
}

/// Inverse of `f` on `[0, q)`; returns `∞` for `y ≥ q`.
pub fn f_inverse(y: f64, q: f64) -> f64 {
    if y >= q {
        return f64::INFINITY;
    }
    if y <= 0.0 {
        return 0.0;
    }
    (y * q / (q - y)).ln_1p()
}

fn default_quad() -> Quadrature {
    Quadrature::new(1e-13, 1e-10)
}

/// `𝔉_β = ∫ f(βz) dμ(z)`.
pub fn frak_i(beta: f64, mu: &PotentialSpec, q: f64) -> Result<f64> {
    frak_i_between(beta, mu, q, 0.0, f64::INFINITY)
}

/// `∫_{[lo, hi)} f(βz) dμ(z)`.
pub fn frak_i_between(beta: f64, mu: &PotentialSpec, q: f64, lo: f64, hi: f64) -> Result<f64> {
    check_q(q)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta must be positive"));
    }
    mu.integrate(&|z| f_unchecked(beta * z, q), lo, hi, &default_quad())
}

/// `∫ (1/q + 1/(βz))^{-1} dμ(z)`.
pub fn mobility_edge_integral(beta: f64, mu: &PotentialSpec, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta must be positive"));
    }
    let g = |z: f64| {
        let w = beta * z;
        if w == f64::INFINITY {
            q
        } else {
            q * w / (w + q)
        }
    };
    mu.integrate(&g, 0.0, f64::INFINITY, &default_quad())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::transform_log;
    use proptest::prelude::*;

    #[test]
    fn f_limits_and_forms() {
        assert_eq!(f_eval(0.0, Q3).unwrap(), 0.0);
        let v = f_eval(50.0, 0.6594).unwrap();
        assert!((0.6594 - 1e-8..=0.6594).contains(&v));
        let z = 0.1;
        assert!((f_eval(z, 0.659463).unwrap() - f_alt(z, 0.659463)).abs() < 1e-12);
        assert!(f_eval(-1.0, Q3).is_err());
        assert!(f_eval(1.0, 1.0).is_err());
    }

    #[test]
    fn inverse_round_trips() {
        for &z in &[1e-8, 1e-3, 0.5, 3.0, 20.0] {
            let y = f_unchecked(z, Q3);
            // near q the inverse amplifies the rounding of y by about e^z
            let tol = 1e-9 * z.max(1.0) + 8.0 * f64::EPSILON * z.exp();
            assert!((f_inverse(y, Q3) - z).abs() <= tol, "{z}");
        }
        assert_eq!(f_inverse(Q3, Q3), f64::INFINITY);
    }

    #[test]
    fn point_mass_rate_integral() {
        let mu = PotentialSpec::PointMass { value: 4.0 };
        let v = frak_i(0.05, &mu, Q3).unwrap();
        assert_eq!(v, f_unchecked(0.2, Q3));
        let m = mobility_edge_integral(0.05, &mu, Q3).unwrap();
        assert!((m - 1.0 / (1.0 / Q3 + 1.0 / 0.2)).abs() < 1e-15);
    }

    #[test]
    fn rate_integral_decreases_to_zero_with_beta() {
        let mu = PotentialSpec::pareto(0.5, 1.0);
        let mut prev = f64::INFINITY;
        for k in 0..24 {
            let beta = 0.5f64.powi(k);
            let v = frak_i(beta, &mu, Q3).unwrap();
            assert!(v < prev && v <= Q3);
            prev = v;
        }
        // α = 1/2 gives 𝔉_β of order β^{1/2}
        assert!(prev < 2e-3);
    }

    #[test]
    fn pareto_rate_integral_matches_density_quadrature() {
        // independent scheme: Simpson in u with z = e^u, density 0.5 e^{-u/2}
        let beta = 0.05;
        let mu = PotentialSpec::pareto(0.5, 1.0);
        let v = frak_i(beta, &mu, Q3).unwrap();
        let n = 400_000;
        let umax = 80.0;
        let h = umax / n as f64;
        let g = |u: f64| f_alt(beta * u.exp(), Q3) * 0.5 * (-0.5 * u).exp();
        let mut s = g(0.0) + g(umax);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        // analytic tail beyond e^{umax}: f ≈ q there
        let simpson = s * h / 3.0 + Q3 * (-0.5 * umax).exp();
        assert!((v - simpson).abs() < 1e-8 * v, "{v} vs {simpson}");
        assert!((v - 0.26266).abs() < 1e-4);
    }

    #[test]
    fn mobility_edge_equals_log_transform_rate() {
        for (mu, tol) in [
            (PotentialSpec::atoms(&[(0.5, 0.3), (4.0, 0.5), (40.0, 0.2)]), 1e-8),
            (PotentialSpec::pareto(0.5, 1.0), 1e-6),
            (PotentialSpec::Exponential { rate: 1.0 }, 1e-6),
        ] {
            let beta = 0.1;
            let lhs = mobility_edge_integral(beta, &mu, Q3).unwrap();
            let rhs = frak_i(beta, &transform_log(&mu, beta).unwrap(), Q3).unwrap();
            assert!((lhs - rhs).abs() <= tol * lhs, "{mu:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn mobility_edge_tends_to_q_for_large_beta() {
        let mu = PotentialSpec::atoms(&[(1.0, 0.5), (2.0, 0.5)]);
        let v = mobility_edge_integral(1e6, &mu, Q3).unwrap();
        assert!((v - Q3).abs() < 1e-6);
    }

    #[test]
    fn finite_mean_small_beta_asymptotics() {
        let mu = PotentialSpec::atoms(&[(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)]);
        let mean = mu.mean().unwrap();
        let beta = 1e-4;
        let ratio = frak_i(beta, &mu, Q3).unwrap() / (beta * mean);
        assert!((ratio - 1.0).abs() < 0.05);
        // and the ratio approaches 1 along a dyadic sequence
        let mut prev = 0.0;
        for k in 4..14 {
            let b = 0.5f64.powi(k);
            let r = frak_i(b, &mu, Q3).unwrap() / (b * mean);
            assert!(r > prev && r <= 1.0);
            prev = r;
        }
    }

    #[test]
    fn f_suite_on_log_grid() {
        let zs: Vec<f64> = (0..1000).map(|i| 10f64.powf(-6.0 + 9.0 * i as f64 / 999.0)).collect();
        let fs: Vec<f64> = zs.iter().map(|&z| f_unchecked(z, Q3)).collect();
        for i in 0..zs.len() {
            assert!(fs[i] <= zs[i].min(Q3));
            if zs[i] <= 1e-3 {
                assert!((fs[i] / zs[i] - 1.0).abs() <= zs[i] / Q3);
            }
        }
        assert!(fs.windows(2).all(|w| w[1] >= w[0]));
    }

    proptest! {
        #[test]
        fn f_is_concave(z in 0.0f64..50.0, h in 1e-3f64..5.0) {
            let l = f_unchecked(z, Q3);
            let m = f_unchecked(z + h, Q3);
            let r = f_unchecked(z + 2.0 * h, Q3);
            prop_assert!(l - 2.0 * m + r <= 1e-15);
        }

        #[test]
        fn rate_integral_bounded(beta in 1e-3f64..10.0, v in 0.0f64..100.0) {
            let mu = PotentialSpec::atoms(&[(0.0, 0.5), (v, 0.5)]);
            let x = frak_i(beta, &mu, Q3).unwrap();
            prop_assert!(x <= (beta * 0.5 * v).min(Q3) + 1e-15);
        }
    }
}
