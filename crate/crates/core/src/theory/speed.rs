use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimiser of the cost `v ↦ d v / 2 + I / v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub i: f64,
    pub d: usize,
    pub v_star: f64,
    pub cost_star: f64,
    /// Set when `I = 0`: the minimum is approached as `v → 0`.
    pub degenerate: bool,
}

impl CostProfile {
    pub fn cost(&self, v: f64) -> f64 {
        self.d as f64 * v / 2.0 + self.i / v
    }
}

/// `v* = √(2I/d)` and `cost* = √(2dI)`.
pub fn optimal_speed(i: f64, d: usize) -> Result<CostProfile> {
    if !(i >= 0.0 && i.is_finite()) || d == 0 {
        return Err(Error::invalid("need I >= 0 and d >= 1"));
    }
    let df = d as f64;
    Ok(CostProfile {
        i,
        d,
        v_star: (2.0 * i / df).sqrt(),
        cost_star: (2.0 * df * i).sqrt(),
        degenerate: i == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_speed_case() {
        let c = optimal_speed(1.5, 3).unwrap();
        assert!((c.v_star - 1.0).abs() < 1e-15);
        assert!((c.cost_star - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_is_degenerate() {
        let c = optimal_speed(0.0, 3).unwrap();
        assert!(c.degenerate && c.v_star == 0.0 && c.cost_star == 0.0);
    }

    #[test]
    fn doubling_scales_cost_by_root_two() {
        let a = optimal_speed(0.3, 3).unwrap().cost_star;
        let b = optimal_speed(0.6, 3).unwrap().cost_star;
        assert!((b / a - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grid_search_confirms_minimum() {
        let c = optimal_speed(0.262_66, 3).unwrap();
        let best = (1..=2_000_000)
            .map(|k| c.cost(k as f64 * 1e-6))
            .fold(f64::INFINITY, f64::min);
        assert!((best - c.cost_star).abs() < 1e-9);
        for k in 1..100 {
            assert!(c.cost(k as f64 * 0.02) >= c.cost_star - 1e-15);
        }
    }
}
