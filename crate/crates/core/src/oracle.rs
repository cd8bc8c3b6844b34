//! Brute-force ground truth at tiny scale. These routines share no numeric
//! kernels with the rest of the crate beyond scalar arithmetic.

use serde::{Deserialize, Serialize};

use crate::environment::PotentialSpec;
use crate::error::{Error, Result};
use crate::lattice_walk::Direction;
use crate::theory::Side;

/// Largest number of leaf paths an enumeration may visit.
pub const MAX_PATHS: f64 = 1e9;

/// Caps for the brute-force routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub max_len: usize,
    pub max_states: usize,
}

impl EnumerationBudget {
    pub fn check(&self, d: usize) -> Result<()> {
        let cost = ((2 * d) as f64).powi(self.max_len as i32);
        if cost > MAX_PATHS {
            return Err(Error::BudgetExceeded {
                cost,
                budget: MAX_PATHS,
            });
        }
        Ok(())
    }
}

/// Two-sided bound on `e_{β,n}` from all paths of length at most `max_len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Exact contribution of paths crossing within `max_len` steps.
    pub lower: f64,
    pub upper: f64,
    /// `P[T_n ≤ max_len]`.
    pub finished_mass: f64,
}

impl Bracket {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn new() -> Self {
        Kahan { sum: 0.0, c: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

struct Enumerator<'a> {
    d: usize,
    ell: &'a [f64],
    axis: Option<(usize, i64)>,
    n: i64,
    max_len: usize,
    /// `A(L) = Σ_atoms m e^{-β z L}` for `L = 0..=max_len`.
    site_factor: Vec<f64>,
    step_prob: f64,
    visited: Vec<(Vec<i64>, usize)>,
    lower: Kahan,
    unfinished: Kahan,
    finished_mass: Kahan,
}

impl Enumerator<'_> {
    fn crossed(&self, pos: &[i64]) -> bool {
        match self.axis {
            Some((i, s)) => s * pos[i] >= self.n,
            None => pos.iter().zip(self.ell).map(|(&c, &l)| c as f64 * l).sum::<f64>() >= self.n as f64,
        }
    }

    /// `pos` is the current site, `prob` the path probability and `weight`
    /// the annealed factor of the sites visited before `pos`.
    fn walk(&mut self, pos: &mut Vec<i64>, len: usize, prob: f64, weight: f64) {
        if self.crossed(pos) {
            self.lower.add(prob * weight);
            self.finished_mass.add(prob);
            return;
        }
        // count the current site
        let slot = self.visited.iter().position(|(s, _)| s == pos);
        let (idx, old) = match slot {
            Some(i) => (i, self.visited[i].1),
            None => {
                self.visited.push((pos.clone(), 0));
                (self.visited.len() - 1, 0)
            }
        };
        self.visited[idx].1 = old + 1;
        let w = weight / self.site_factor[old] * self.site_factor[old + 1];
        if len == self.max_len {
            self.unfinished.add(prob * w);
        } else {
            for k in 0..2 * self.d {
                let delta = if k % 2 == 0 { 1 } else { -1 };
                pos[k / 2] += delta;
                self.walk(pos, len + 1, prob * self.step_prob, w);
                pos[k / 2] -= delta;
            }
        }
        self.visited[idx].1 = old;
        if old == 0 {
            self.visited.pop();
        }
    }
}

/// Enumerates every walk path of length at most `max_len` from the origin
/// and sums the exact annealed weights of those that reach `x·ℓ ≥ n`.
/// The upper end adds, for each unfinished path, its probability times the
/// annealed factor accumulated so far (factors are at most one).
pub fn exact_e_small(beta: f64, n: i64, spec: &PotentialSpec, ell: &Direction, max_len: usize) -> Result<Bracket> {
    let atoms = spec
        .atom_list()
        .ok_or_else(|| Error::invalid("exact enumeration needs an atomic law"))?;
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta must be nonnegative"));
    }
    let d = ell.dim();
    EnumerationBudget { max_len, max_states: 0 }.check(d)?;
    let site_factor: Vec<f64> = (0..=max_len + 1)
        .map(|l| {
            let mut s = Kahan::new();
            for &(z, m) in &atoms {
                s.add(m * (-beta * z * l as f64).exp());
            }
            s.sum
        })
        .collect();
    let mut e = Enumerator {
        d,
        ell: ell.vector(),
        axis: ell.as_axis(),
        n,
        max_len,
        site_factor,
        step_prob: 1.0 / (2 * d) as f64,
        visited: Vec::new(),
        lower: Kahan::new(),
        unfinished: Kahan::new(),
        finished_mass: Kahan::new(),
    };
    let mut pos = vec![0i64; d];
    e.walk(&mut pos, 0, 1.0, 1.0);
    Ok(Bracket {
        lower: e.lower.sum,
        upper: e.lower.sum + e.unfinished.sum,
        finished_mass: e.finished_mass.sum,
    })
}

/// `P[T_n(ℓ) ≤ k]` for `k = 0..=max_len`, by enumerating all paths.
pub fn passage_time_cdf(ell: &Direction, n: i64, max_len: usize) -> Result<Vec<f64>> {
    let d = ell.dim();
    EnumerationBudget { max_len, max_states: 0 }.check(d)?;
    let mut at = vec![0.0; max_len + 1];
    fn rec(
        ell: &Direction,
        n: i64,
        d: usize,
        pos: &mut Vec<i64>,
        len: usize,
        max_len: usize,
        prob: f64,
        at: &mut [f64],
    ) {
        let x: f64 = match ell.as_axis() {
            Some((i, s)) => (s * pos[i]) as f64,
            None => pos.iter().zip(ell.vector()).map(|(&c, &l)| c as f64 * l).sum(),
        };
        if x >= n as f64 {
            at[len] += prob;
            return;
        }
        if len == max_len {
            return;
        }
        for k in 0..2 * d {
            let delta = if k % 2 == 0 { 1 } else { -1 };
            pos[k / 2] += delta;
            rec(ell, n, d, pos, len + 1, max_len, prob / (2 * d) as f64, at);
            pos[k / 2] -= delta;
        }
    }
    let mut pos = vec![0i64; d];
    rec(ell, n, d, &mut pos, 0, max_len, 1.0, &mut at);
    let mut acc = 0.0;
    Ok(at
        .into_iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect())
}

/// Exact binomial tail: `P[Σ ≥ k]` (upper) or `P[Σ ≤ k]` (lower) for a sum
/// of `n` Bernoulli(`p`) variables, with compensated summation.
pub fn exact_binomial_tail(n: u64, p: f64, k: u64, side: Side) -> Result<f64> {
    if n > 1000 {
        return Err(Error::invalid("exact tails are limited to n <= 1000"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p must lie in [0, 1]"));
    }
    let range: Vec<u64> = match side {
        Side::Upper => (k.min(n + 1)..=n).collect(),
        Side::Lower => (0..=k.min(n)).collect(),
    };
    if p == 0.0 || p == 1.0 {
        let atom = if p == 0.0 { 0 } else { n };
        return Ok(if range.contains(&atom) { 1.0 } else { 0.0 });
    }
    // log C(n, j) through a running sum of logs
    let mut log_fact = vec![0.0f64; n as usize + 1];
    for j in 1..=n as usize {
        log_fact[j] = log_fact[j - 1] + (j as f64).ln();
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut s = Kahan::new();
    for j in range {
        let j_ = j as usize;
        let lc = log_fact[n as usize] - log_fact[j_] - log_fact[n as usize - j_];
        s.add((lc + j as f64 * lp + (n - j) as f64 * lq).exp());
    }
    Ok(s.sum.min(1.0))
}

/// Largest `K` accepted by [`enumerate_surgeries`].
pub const MAX_SURGERY_K: u64 = 20;
/// Largest `j` accepted by [`enumerate_surgeries`].
pub const MAX_SURGERY_J: u64 = 8;

/// Number of chains `0 = g_0 ≤ h_1 ≤ g_1 ≤ … ≤ g_j ≤ h_{j+1} = K`, counted
/// by recursion over the free entries with memoisation on
/// `(remaining entries, current lower bound)`.
pub fn enumerate_surgeries(k: u64, j: u64) -> Result<u128> {
    if k > MAX_SURGERY_K || j > MAX_SURGERY_J {
        return Err(Error::BudgetExceeded {
            cost: (k.max(j)) as f64,
            budget: MAX_SURGERY_K as f64,
        });
    }
    let slots = (2 * j) as usize;
    let kk = k as usize;
    let mut memo = vec![vec![None::<u128>; kk + 1]; slots + 1];
    fn count(rem: usize, lo: usize, k: usize, memo: &mut Vec<Vec<Option<u128>>>) -> u128 {
        if rem == 0 {
            return 1;
        }
        if let Some(c) = memo[rem][lo] {
            return c;
        }
        let c = (lo..=k).map(|v| count(rem - 1, v, k, memo)).sum();
        memo[rem][lo] = Some(c);
        c
    }
    Ok(count(slots, 0, kk, &mut memo))
}

/// Every chain for small inputs, as the list of free entries
/// `(h_1, g_1, …, h_j, g_j)`.
pub fn list_surgeries(k: u64, j: u64) -> Result<Vec<Vec<u64>>> {
    if k > 6 || j > 3 {
        return Err(Error::BudgetExceeded {
            cost: (k.max(j)) as f64,
            budget: 6.0,
        });
    }
    let mut out = Vec::new();
    fn rec(cur: &mut Vec<u64>, slots: usize, k: u64, out: &mut Vec<Vec<u64>>) {
        if cur.len() == slots {
            out.push(cur.clone());
            return;
        }
        let lo = cur.last().copied().unwrap_or(0);
        for v in lo..=k {
            cur.push(v);
            rec(cur, slots, k, out);
            cur.pop();
        }
    }
    rec(&mut Vec::new(), 2 * j as usize, k, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{chernoff_upper, surgery_binomial};

    #[test]
    fn zero_beta_bracket() {
        let ell = Direction::axis(3, 0);
        let spec = PotentialSpec::atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        let b = exact_e_small(0.0, 2, &spec, &ell, 8).unwrap();
        assert!((b.lower - b.finished_mass).abs() < 1e-15);
        assert!((b.upper - 1.0).abs() < 1e-12);
        let longer = exact_e_small(0.0, 2, &spec, &ell, 10).unwrap();
        assert!(longer.lower > b.lower);
    }

    #[test]
    fn length_one_term_by_hand() {
        // n = 1: crossing at step one has probability 1/6 and weight L(β);
        // the five other one-step paths have already paid for two sites
        let ell = Direction::axis(3, 0);
        let beta = 0.5;
        let spec = PotentialSpec::atoms(&[(0.0, 0.4), (2.0, 0.6)]);
        let lap = 0.4 + 0.6 * (-beta * 2.0f64).exp();
        let b = exact_e_small(beta, 1, &spec, &ell, 1).unwrap();
        assert!((b.lower - lap / 6.0).abs() < 1e-15);
        assert!((b.upper - (lap / 6.0 + 5.0 / 6.0 * lap * lap)).abs() < 1e-15);
    }

    #[test]
    fn brackets_tighten_with_length() {
        let ell = Direction::axis(3, 0);
        let spec = PotentialSpec::atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        let mut prev = (0.0, f64::INFINITY);
        for len in 2..=8 {
            let b = exact_e_small(0.5, 2, &spec, &ell, len).unwrap();
            assert!(b.lower >= prev.0 - 1e-15 && b.upper <= prev.1 + 1e-15);
            prev = (b.lower, b.upper);
        }
    }

    #[test]
    fn budget_guard() {
        let ell = Direction::axis(3, 0);
        let spec = PotentialSpec::PointMass { value: 1.0 };
        assert!(matches!(
            exact_e_small(0.1, 2, &spec, &ell, 12),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(exact_e_small(0.1, 2, &PotentialSpec::pareto(0.5, 1.0), &ell, 4).is_err());
    }

    #[test]
    fn binomial_tails() {
        assert!((exact_binomial_tail(10, 0.3, 10, Side::Lower).unwrap() - 1.0).abs() < 1e-15);
        assert!((exact_binomial_tail(10, 0.3, 0, Side::Upper).unwrap() - 1.0).abs() < 1e-15);
        let up = exact_binomial_tail(20, 0.3, 10, Side::Upper).unwrap();
        assert!((up - 0.047_962_7).abs() < 1e-6);
        assert!(up <= chernoff_upper(20, 0.3, 0.2, Side::Upper).unwrap());
        let lo = exact_binomial_tail(30, 0.5, 6, Side::Lower).unwrap();
        assert!(lo <= chernoff_upper(30, 0.5, 0.3, Side::Lower).unwrap());
        for k in 0..=12 {
            let a = exact_binomial_tail(12, 0.3, k, Side::Upper).unwrap();
            let b = exact_binomial_tail(12, 0.7, 12 - k, Side::Lower).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn surgery_counts() {
        assert_eq!(enumerate_surgeries(5, 0).unwrap(), 1);
        let listed = list_surgeries(2, 1).unwrap();
        assert_eq!(listed.len(), 6);
        assert_eq!(enumerate_surgeries(2, 1).unwrap(), 6);
        for k in 0..=12 {
            for j in 0..=4 {
                let c = enumerate_surgeries(k, j).unwrap();
                assert_eq!(c as f64, surgery_binomial(k, 2 * j));
            }
        }
        assert_eq!(enumerate_surgeries(20, 8).unwrap(), 7_307_872_110);
        assert!(enumerate_surgeries(21, 1).is_err());
    }
}
