//! Escape probability `q_d = P[the walk never returns to 0]` for `d ≥ 3`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bessel::i0e;
use crate::numerics::quadrature::Quadrature;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EscapeMethod {
    /// Deterministic quadrature of the lattice Green function at the origin.
    Quadrature,
    /// Walks stopped at their first return or on leaving the ball of
    /// `radius`; escapes are corrected by the asymptotic return chance
    /// from the exit point.
    MonteCarlo { walks: u64, radius: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    pub d: usize,
    pub value: f64,
    /// Quadrature error estimate, or one Monte Carlo standard error.
    pub uncertainty: f64,
    pub method: EscapeMethod,
}

fn gamma_half_integer(twice: u32) -> f64 {
    // Γ(twice / 2) for twice ≥ 1
    let (mut g, mut x) = if twice.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x + 0.5 < twice as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// The constant `c_d` in `G(0, x) ~ c_d |x|^{2-d}` for the walk's Green
/// function: `c_d = (d/2) Γ(d/2 - 1) π^{-d/2}`.
pub fn green_constant(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid("the walk is recurrent for d <= 2"));
    }
    let df = d as f64;
    Ok(0.5 * df * gamma_half_integer(d as u32 - 2) * PI.powf(-0.5 * df))
}

/// `q_d = 1 / G(0, 0)` where `G(0,0) = d ∫_0^∞ (e^{-x} I_0(x))^d dx`,
/// the continuous-time representation of the expected number of visits.
fn escape_quadrature(d: usize) -> Result<(f64, f64)> {
    let quad = Quadrature::new(1e-14, 1e-13);
    let dd = d as i32;
    let split: f64 = 20.0;
    // head: log substitution above 1 keeps the slowly decaying part smooth
    let a = quad.integrate(|x| i0e(x).powi(dd), 0.0, 1.0)?;
    let b = quad.integrate(
        |u| {
            let x = u.exp();
            i0e(x).powi(dd) * x
        },
        0.0,
        split.ln(),
    )?;
    // tail: x = X / s², integrand ~ s^{d-3} near s = 0
    let lead = 2.0 * split * (2.0 * PI * split).powf(-0.5 * d as f64);
    let c = quad.integrate(
        |s| {
            if s < 1e-12 {
                return lead * s.powi(dd - 3);
            }
            let x = split / (s * s);
            2.0 * split / (s * s * s) * i0e(x).powi(dd)
        },
        0.0,
        1.0,
    )?;
    let g0 = d as f64 * (a.value + b.value + c.value);
    let err = d as f64 * (a.abs_err + b.abs_err + c.abs_err);
    Ok((1.0 / g0, err / (g0 * g0)))
}

struct BlockTally {
    escaped: f64,
    correction: f64,
    escaped_sq: f64,
    correction_sq: f64,
    cross: f64,
}

fn escape_block(d: usize, radius: f64, cd: f64, walks: u64, seed: u64, block: u64) -> BlockTally {
    let mut rng = par::stream_rng(seed, 0x00e5_ca9e, block);
    let r2 = radius * radius;
    let mut pos = vec![0i64; d];
    let mut t = BlockTally {
        escaped: 0.0,
        correction: 0.0,
        escaped_sq: 0.0,
        correction_sq: 0.0,
        cross: 0.0,
    };
    for _ in 0..walks {
        pos.iter_mut().for_each(|c| *c = 0);
        let mut norm2 = 0i64;
        loop {
            let k = rng.random_range(0..2 * d);
            let s = if k & 1 == 0 { 1 } else { -1 };
            let c = &mut pos[k >> 1];
            norm2 += 2 * s * *c + 1;
            *c += s;
            if norm2 == 0 {
                break;
            }
            if norm2 as f64 > r2 {
                let b = cd * (norm2 as f64).powf(1.0 - 0.5 * d as f64);
                t.escaped += 1.0;
                t.correction += b;
                t.escaped_sq += 1.0;
                t.correction_sq += b * b;
                t.cross += b;
                break;
            }
        }
    }
    t
}

/// Monte Carlo escape probability. With `A` the fraction of walks leaving
/// the ball before returning and `B` the mean of `G(0, X)` over escaped
/// walks (zero otherwise), `q = A - q B`, hence `q = A / (1 + B)`.
fn escape_monte_carlo(d: usize, walks: u64, radius: f64, seed: u64) -> Result<(f64, f64)> {
    if walks < 2 {
        return Err(Error::invalid("need at least two walks"));
    }
    if !(radius >= 2.0 && radius.is_finite()) {
        return Err(Error::invalid("escape radius must be at least 2"));
    }
    let cd = green_constant(d)?;
    let block = 1u64 << 14;
    let nblocks = walks.div_ceil(block);
    let tallies = par::map_indexed(Execution::Auto, nblocks as usize, |i| {
        let i = i as u64;
        let size = block.min(walks - i * block);
        escape_block(d, radius, cd, size, seed, i)
    });
    let n = walks as f64;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in &tallies {
        sa += t.escaped;
        sb += t.correction;
        saa += t.escaped_sq;
        sbb += t.correction_sq;
        sab += t.cross;
    }
    let (a, b) = (sa / n, sb / n);
    let q = a / (1.0 + b);
    // delta method on the ratio a / (1 + b)
    let var_a = saa / n - a * a;
    let var_b = sbb / n - b * b;
    let cov = sab / n - a * b;
    let var_q = (var_a - 2.0 * q * cov + q * q * var_b) / (n * (1.0 + b).powi(2));
    Ok((q, var_q.max(0.0).sqrt()))
}

/// Escape probability of the simple random walk on `Z^d`.
pub fn escape_prob(d: usize, method: EscapeMethod) -> Result<EscapeEstimate> {
    if d < 3 {
        return Err(Error::invalid("the walk is recurrent for d <= 2"));
    }
    let (value, uncertainty) = match method {
        EscapeMethod::Quadrature => escape_quadrature(d)?,
        EscapeMethod::MonteCarlo { walks, radius, seed } => escape_monte_carlo(d, walks, radius, seed)?,
    };
    Ok(EscapeEstimate {
        d,
        value,
        uncertainty,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_constants() {
        assert!((green_constant(3).unwrap() - 1.5 / PI).abs() < 1e-15);
        // d = 4: 2 Γ(1) / π²
        assert!((green_constant(4).unwrap() - 2.0 / (PI * PI)).abs() < 1e-15);
        assert!(green_constant(2).is_err());
    }

    #[test]
    fn three_dimensional_quadrature_matches_watson_value() {
        // Watson's integral: G(0) = 1.516386059151978...
        let q = escape_prob(3, EscapeMethod::Quadrature).unwrap();
        assert!(
            (1.0 / q.value - 1.516_386_059_151_978).abs() < 1e-10,
            "{}",
            1.0 / q.value
        );
        assert!((q.value - crate::theory::Q3).abs() < 1e-13, "{}", q.value);
    }

    #[test]
    fn four_dimensional_exceeds_three() {
        let q3 = escape_prob(3, EscapeMethod::Quadrature).unwrap().value;
        let q4 = escape_prob(4, EscapeMethod::Quadrature).unwrap().value;
        assert!(q4 > q3);
        // G4(0) = 1.23946712...
        assert!((1.0 / q4 - 1.239_467_121_153_6).abs() < 1e-9, "{}", 1.0 / q4);
    }

    #[test]
    fn recurrent_dimensions_rejected() {
        assert!(escape_prob(2, EscapeMethod::Quadrature).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let q = escape_prob(3, EscapeMethod::Quadrature).unwrap().value;
        let mc = escape_prob(
            3,
            EscapeMethod::MonteCarlo {
                walks: 200_000,
                radius: 12.0,
                seed: 1,
            },
        )
        .unwrap();
        assert!(mc.uncertainty < 2e-3);
        assert!((mc.value - q).abs() < 4.0 * mc.uncertainty + 1e-3, "{mc:?}");
    }
}
