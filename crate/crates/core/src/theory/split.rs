//! Riemann splitting of the important range `[β⁻¹a, ∞)`, the geometric
//! `ρ`-grid over the intermediate range `[M_β, β⁻¹a)`, the truncation level
//! `M_β`, the three-case classification and the derived length scales.
//!
//! Interval endpoints are expressed in units of `βz`.

use serde::{Deserialize, Serialize};

use super::{check_q, f_inverse, f_unchecked, frak_i, frak_i_between};
use crate::environment::PotentialSpec;
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::numerics::quadrature::Quadrature;

/// Largest number of cells in either grid.
pub const MAX_GRID_CELLS: usize = 10_000;

fn check_common(beta: f64, epsilon: f64, a: f64, q: f64) -> Result<()> {
    check_q(q)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon must lie in (0, 1)"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("cutoff a must be positive"));
    }
    Ok(())
}

/// The cutoff `a = ε⁸`.
pub fn default_cutoff(epsilon: f64) -> f64 {
    epsilon.powi(8)
}

/// Retained intervals of the important range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannSplit {
    pub beta: f64,
    pub epsilon: f64,
    pub a: f64,
    /// `a = a'_0 < … < a'_{κ'} = ∞`.
    pub grid: Vec<f64>,
    pub kappa_prime: usize,
    /// The grid hit [`MAX_GRID_CELLS`] and was closed early with `∞`.
    pub grid_capped: bool,
    /// `[a_l, b_l)`: retained cells with the lower end raised to the
    /// smallest point of the support inside the cell.
    pub intervals: Vec<(f64, f64)>,
    /// `p_l = μ([β⁻¹a_l, β⁻¹b_l))`.
    pub weights: Vec<f64>,
    /// `I_β = Σ f(a_l) p_l`.
    pub i_beta: f64,
    /// `μ([β⁻¹a, ∞))`.
    pub important_mass: f64,
    /// `𝓘_β = ∫_{βz ≥ a} f(βz) dμ`.
    pub i_important: f64,
    /// No mass in the important range.
    pub degenerate: bool,
}

impl RiemannSplit {
    pub fn kappa(&self) -> usize {
        self.intervals.len()
    }

    /// `L̂⁻² = Σ p_l`.
    pub fn hat_l_inv2(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Splits `[β⁻¹a, ∞)` along a grid with `(1-ε) f(a'_{l+1}) = f(a'_l)` and
/// keeps cells of weight at least `(ε/κ') f(a) μ([β⁻¹a, ∞))`.
pub fn riemann_split(beta: f64, mu: &PotentialSpec, q: f64, epsilon: f64, a: f64) -> Result<RiemannSplit> {
    check_common(beta, epsilon, a, q)?;
    mu.validate()?;
    let mut grid = vec![a];
    let grid_capped;
    loop {
        let last = *grid.last().expect("nonempty");
        let target = f_unchecked(last, q) / (1.0 - epsilon);
        let next = f_inverse(target, q);
        if next.is_infinite() || grid.len() >= MAX_GRID_CELLS {
            grid_capped = next.is_finite();
            grid.push(f64::INFINITY);
            break;
        }
        grid.push(next);
    }
    let kappa_prime = grid.len() - 1;
    let important_mass = mu.tail_ge(a / beta);
    let i_important = frak_i_between(beta, mu, q, a / beta, f64::INFINITY)?;
    let mut out = RiemannSplit {
        beta,
        epsilon,
        a,
        grid,
        kappa_prime,
        grid_capped,
        intervals: Vec::new(),
        weights: Vec::new(),
        i_beta: 0.0,
        important_mass,
        i_important,
        degenerate: important_mass == 0.0,
    };
    if out.degenerate {
        return Ok(out);
    }
    let threshold = epsilon / kappa_prime as f64 * f_unchecked(a, q) * important_mass;
    for w in out.grid.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let p = mu.mass(lo / beta, hi / beta);
        if p > 0.0 && p >= threshold {
            let inf = mu
                .support_inf_in(lo / beta, hi / beta)
                .map_or(lo, |z| (beta * z).max(lo));
            out.intervals.push((inf, hi));
            out.weights.push(p);
            out.i_beta += f_unchecked(inf, q) * p;
        }
    }
    Ok(out)
}

/// One cell `[ρ^l, ρ^{l-1})` of the intermediate grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoCell {
    pub l: i64,
    pub lo: f64,
    pub hi: f64,
    /// `p̃_l = μ([β⁻¹ρ^l, β⁻¹ρ^{l-1}))`.
    pub p_tilde: f64,
}

/// Geometric grid over the intermediate range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoSplit {
    pub rho: f64,
    pub l0: i64,
    pub l_beta: i64,
    pub cells: Vec<RhoCell>,
    /// `𝓛̃_β = {l : p̃_l ≥ ρ^{-l/2} 𝔉_β}`.
    pub retained: Vec<i64>,
    /// `I'_β = Σ_{l ∈ 𝓛̃_β} ρ^l p̃_l`.
    pub i_prime: f64,
    /// `𝓘'_β = ∫_{M_β ≤ z < β⁻¹a} f(βz) dμ`.
    pub i_intermediate: f64,
    pub frak_i: f64,
    /// `βM_β ≥ a`: the intermediate range is empty.
    pub empty: bool,
    /// More than [`MAX_GRID_CELLS`] cells would be needed; the smallest
    /// values were dropped.
    pub truncated: bool,
}

/// Splits `[βM_β, a)` along powers of `ρ = 1 - ε`.
pub fn rho_grid_split(beta: f64, mu: &PotentialSpec, q: f64, epsilon: f64, a: f64, m_beta: f64) -> Result<RhoSplit> {
    check_common(beta, epsilon, a, q)?;
    if !(m_beta >= 0.0) {
        return Err(Error::invalid("M_beta must be nonnegative"));
    }
    let rho = 1.0 - epsilon;
    let lr = rho.ln();
    let pow = |l: i64| (l as f64 * lr).exp();
    let frak = frak_i(beta, mu, q)?;
    let bm = beta * m_beta;
    let i_intermediate = if bm < a {
        frak_i_between(beta, mu, q, m_beta, a / beta)?
    } else {
        0.0
    };
    // largest l with ρ^l ≥ a
    let mut l0 = (a.ln() / lr).floor() as i64;
    while pow(l0 + 1) >= a {
        l0 += 1;
    }
    while pow(l0) < a {
        l0 -= 1;
    }
    let mut out = RhoSplit {
        rho,
        l0,
        l_beta: l0,
        cells: Vec::new(),
        retained: Vec::new(),
        i_prime: 0.0,
        i_intermediate,
        frak_i: frak,
        empty: bm >= a,
        truncated: false,
    };
    if out.empty {
        return Ok(out);
    }
    // smallest l with ρ^{l-1} < βM_β
    let mut lb = if bm > 0.0 {
        (bm.ln() / lr).floor() as i64 + 2
    } else {
        i64::MAX
    };
    if lb != i64::MAX {
        while pow(lb - 2) < bm {
            lb -= 1;
        }
        while pow(lb - 1) >= bm {
            lb += 1;
        }
    }
    if lb.saturating_sub(l0) >= MAX_GRID_CELLS as i64 {
        lb = l0 + MAX_GRID_CELLS as i64 - 1;
        out.truncated = true;
    }
    out.l_beta = lb;
    for l in l0..=lb {
        let (lo, hi) = (pow(l), pow(l - 1));
        let p_tilde = mu.mass(lo / beta, hi / beta);
        out.cells.push(RhoCell { l, lo, hi, p_tilde });
        if p_tilde > 0.0 && p_tilde >= (-0.5 * l as f64 * lr).exp() * frak {
            out.retained.push(l);
            out.i_prime += lo * p_tilde;
        }
    }
    Ok(out)
}

/// Both splittings and `Ĩ_β = I_β + I'_β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub important: RiemannSplit,
    pub intermediate: RhoSplit,
    pub m_beta: MBeta,
    pub i_tilde: f64,
}

impl SplitResult {
    pub fn compute(beta: f64, mu: &PotentialSpec, q: f64, epsilon: f64, a: f64) -> Result<Self> {
        let important = riemann_split(beta, mu, q, epsilon, a)?;
        let m = m_beta(beta, mu, q, epsilon)?;
        let intermediate = rho_grid_split(beta, mu, q, epsilon, a, m.m_beta)?;
        let i_tilde = important.i_beta + intermediate.i_prime;
        Ok(SplitResult {
            important,
            intermediate,
            m_beta: m,
            i_tilde,
        })
    }
}

/// The truncation level below which potentials are negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MBeta {
    /// Root of `f(z) = z/2`; `f(z) > z/2` on `(0, z_0)`.
    pub z0: f64,
    /// `M_β = ε E[V 1{βV ≤ z_0}]`.
    pub m_beta: f64,
    /// `∫_{z ≤ M_β} f(βz) dμ`.
    pub low_part: f64,
    /// `2ε 𝔉_β`.
    pub bound: f64,
    pub infinite_mean: bool,
}

impl MBeta {
    pub fn bound_holds(&self) -> bool {
        self.low_part <= self.bound * (1.0 + 1e-9) + 1e-300
    }
}

/// Root of `f(z) = z/2`.
pub fn z0_root(q: f64) -> Result<f64> {
    check_q(q)?;
    // f(z) - z/2 > 0 near 0 and < 0 at z = 2 because f < q < 1
    Ok(bisect(|z| f_unchecked(z, q) - 0.5 * z, 1e-9, 2.0, 1e-15))
}

/// `z_0` and `M_β`. For finite-mean laws `M_β` stays bounded as `β → 0`
/// and the `infinite_mean` flag is cleared.
pub fn m_beta(beta: f64, mu: &PotentialSpec, q: f64, epsilon: f64) -> Result<MBeta> {
    check_common(beta, epsilon, 1.0, q)?;
    let z0 = z0_root(q)?;
    let quad = Quadrature::new(1e-13, 1e-11);
    let m = epsilon * mu.truncated_mean(z0 / beta, &quad)?;
    let low_part = frak_i_between(beta, mu, q, 0.0, m.next_up())?;
    let bound = 2.0 * epsilon * frak_i(beta, mu, q)?;
    Ok(MBeta {
        z0,
        m_beta: m,
        low_part,
        bound,
        infinite_mean: mu.mean().is_none(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    /// `𝓘'_β < ε 𝓘_β`
    OnlyImportant,
    /// `ε 𝓘_β ≤ 𝓘'_β < ε⁻¹ 𝓘_β`
    Both,
    /// `𝓘_β ≤ ε 𝓘'_β`
    OnlyIntermediate,
    /// Both integrals vanish.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: CaseLabel,
    pub a: f64,
    /// `𝓘_β`
    pub i_important: f64,
    /// `𝓘'_β`
    pub i_intermediate: f64,
    pub m_beta: MBeta,
}

/// Classifies `μ` at `β` into the three regimes; `a` defaults to `ε⁸`.
pub fn classify_case(beta: f64, mu: &PotentialSpec, q: f64, epsilon: f64, a: Option<f64>) -> Result<Classification> {
    let a = a.unwrap_or_else(|| default_cutoff(epsilon));
    check_common(beta, epsilon, a, q)?;
    let m = m_beta(beta, mu, q, epsilon)?;
    let imp = frak_i_between(beta, mu, q, a / beta, f64::INFINITY)?;
    let inter = if m.m_beta < a / beta {
        frak_i_between(beta, mu, q, m.m_beta, a / beta)?
    } else {
        0.0
    };
    let label = if imp == 0.0 && inter == 0.0 {
        CaseLabel::Degenerate
    } else if inter < epsilon * imp {
        CaseLabel::OnlyImportant
    } else if imp <= epsilon * inter {
        CaseLabel::OnlyIntermediate
    } else {
        CaseLabel::Both
    };
    Ok(Classification {
        label,
        a,
        i_important: imp,
        i_intermediate: inter,
        m_beta: m,
    })
}

/// Length scales of the coarse-grained picture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSet {
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub d: usize,
    pub a: f64,
    pub l_hat: f64,
    pub l: f64,
    pub r_prime: f64,
    pub r: f64,
    pub big_r: f64,
    pub eta: f64,
    pub m_beta: Option<f64>,
    pub case: Option<CaseLabel>,
    /// `1 < r' < L^{2/d} < r < R < L`.
    pub ordered: bool,
}

/// Whether `d(2/d + δ) - (d-2)(2/d - δ) < 2(1 - δ)`.
pub fn delta_admissible(d: usize, delta: f64) -> bool {
    let df = d as f64;
    df * (2.0 / df + delta) - (df - 2.0) * (2.0 / df - delta) < 2.0 * (1.0 - delta)
}

/// `L̂⁻² = Σ p_l`, `L⁻² = f(a) L̂⁻²`, `r' = L^{2/d-δ}`, `r = L^{2/d+δ}`,
/// `R = L^{1-δ}`, `η = L^{-5δ/2}`.
pub fn scales(split: &RiemannSplit, q: f64, delta: f64, d: usize) -> Result<ScaleSet> {
    check_q(q)?;
    if d < 3 {
        return Err(Error::invalid("scales need d >= 3"));
    }
    if !(delta > 0.0 && delta < 1.0) || !delta_admissible(d, delta) {
        return Err(Error::invalid(format!(
            "delta = {delta} violates the admissibility condition"
        )));
    }
    let mass = split.hat_l_inv2();
    if mass <= 0.0 {
        return Err(Error::invalid("scales need a nonempty split"));
    }
    let df = d as f64;
    let l_hat = mass.powf(-0.5);
    let l = (f_unchecked(split.a, q) * mass).powf(-0.5);
    let r_prime = l.powf(2.0 / df - delta);
    let r = l.powf(2.0 / df + delta);
    let big_r = l.powf(1.0 - delta);
    let l2d = l.powf(2.0 / df);
    Ok(ScaleSet {
        beta: split.beta,
        epsilon: split.epsilon,
        delta,
        d,
        a: split.a,
        l_hat,
        l,
        r_prime,
        r,
        big_r,
        eta: l.powf(-2.5 * delta),
        m_beta: None,
        case: None,
        ordered: 1.0 < r_prime && r_prime < l2d && l2d < r && r < big_r && big_r < l,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Q3;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_satisfies_ratio_condition() {
        let s = riemann_split(0.05, &PotentialSpec::pareto(0.5, 1.0), Q3, 0.1, 1e-4).unwrap();
        for w in s.grid.windows(2) {
            let (l, r) = (f_unchecked(w[0], Q3), f_unchecked(w[1], Q3));
            assert!((1.0 - 0.1) * r <= l * (1.0 + 1e-12));
        }
        assert!(!s.grid_capped);
        assert_eq!(*s.grid.last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn point_mass_split() {
        let (beta, a) = (0.05, 1e-3);
        let mu = PotentialSpec::PointMass { value: 2.0 * a / beta };
        let s = riemann_split(beta, &mu, Q3, 0.1, a).unwrap();
        assert_eq!(s.kappa(), 1);
        assert!((s.i_beta - f_unchecked(2.0 * a, Q3)).abs() < 1e-15);
    }

    #[test]
    fn two_atom_split_hand_value() {
        let (beta, a) = (0.05, 1e-3);
        let mass = 1e-4;
        let mu = PotentialSpec::atoms(&[
            (0.0, 1.0 - mass),
            (1.5 * a / beta, 0.6 * mass),
            (3.0 * a / beta, 0.4 * mass),
        ]);
        let s = riemann_split(beta, &mu, Q3, 0.1, a).unwrap();
        assert_eq!(s.kappa(), 2);
        assert!((s.hat_l_inv2() - mass).abs() < 1e-18);
        let hand = 0.6 * mass * f_unchecked(1.5 * a, Q3) + 0.4 * mass * f_unchecked(3.0 * a, Q3);
        assert!((s.i_beta - hand).abs() < 1e-15 * hand.max(1e-300) + 1e-20);
    }

    #[test]
    fn degenerate_when_no_important_mass() {
        let mu = PotentialSpec::PointMass { value: 0.0 };
        let s = riemann_split(0.1, &mu, Q3, 0.1, 1e-3).unwrap();
        assert!(s.degenerate && s.i_beta == 0.0 && s.intervals.is_empty());
    }

    #[test]
    fn z0_matches_grid_scan() {
        let z0 = z0_root(0.659).unwrap();
        // independent bracket: sign change on a fine grid
        let h = 1e-6;
        let k = (1..2_000_000)
            .find(|&i| f_unchecked(i as f64 * h, 0.659) <= 0.5 * i as f64 * h)
            .unwrap();
        assert!(z0 > (k - 1) as f64 * h && z0 <= k as f64 * h + 1e-10);
        let fine = bisect(|z| f_alt_local(z) - 0.5 * z, (k - 1) as f64 * h, k as f64 * h, 1e-16);
        assert!((z0 - fine).abs() < 1e-10);
    }

    fn f_alt_local(z: f64) -> f64 {
        super::super::f_alt(z, 0.659)
    }

    #[test]
    fn pareto_m_beta_closed_form_and_growth() {
        let (beta, eps) = (0.05, 0.1);
        let mu = PotentialSpec::pareto(0.5, 1.0);
        let m = m_beta(beta, &mu, Q3, eps).unwrap();
        // E[V 1{V ≤ M}] = √M - 1 for α = 1/2, z_min = 1
        let closed = eps * ((m.z0 / beta).sqrt() - 1.0);
        assert!((m.m_beta - closed).abs() < 1e-12);
        let quad = mu
            .integrate(&|z| z, 0.0, (m.z0 / beta).next_up(), &Quadrature::new(1e-13, 1e-11))
            .unwrap();
        assert!((eps * quad - closed).abs() < 1e-8);
        assert!(m.bound_holds() && m.infinite_mean);
        let half = m_beta(beta / 2.0, &mu, Q3, eps).unwrap();
        assert!(half.m_beta > m.m_beta);
    }

    #[test]
    fn case_labels() {
        let eps = 0.1;
        let a = default_cutoff(eps);
        let beta = 0.01;
        let important = PotentialSpec::atoms(&[(0.0, 0.9), (50.0 / beta, 0.1)]);
        assert_eq!(
            classify_case(beta, &important, Q3, eps, None).unwrap().label,
            CaseLabel::OnlyImportant
        );

        let inter = PotentialSpec::atoms(&[(0.0, 0.5), (0.5 * a / beta, 0.5)]);
        assert_eq!(
            classify_case(beta, &inter, Q3, eps, None).unwrap().label,
            CaseLabel::OnlyIntermediate
        );

        // equal integrals: m_B f(10) = m_A f(a/2)
        let m_a = 0.5;
        let m_b = m_a * f_unchecked(0.5 * a, Q3) / f_unchecked(10.0, Q3);
        let both = PotentialSpec::atoms(&[(0.0, 1.0 - m_a - m_b), (0.5 * a / beta, m_a), (10.0 / beta, m_b)]);
        let c = classify_case(beta, &both, Q3, eps, None).unwrap();
        assert!((c.i_intermediate / c.i_important - 1.0).abs() < 1e-12);
        assert_eq!(c.label, CaseLabel::Both);

        let zero = PotentialSpec::PointMass { value: 0.0 };
        assert_eq!(
            classify_case(beta, &zero, Q3, eps, None).unwrap().label,
            CaseLabel::Degenerate
        );
    }

    #[test]
    fn rho_grid_examples() {
        let eps = 0.1;
        let a = default_cutoff(eps);
        let beta = 0.01;
        // no mass in the intermediate range
        let mu = PotentialSpec::atoms(&[(0.0, 0.9), (50.0 / beta, 0.1)]);
        let m = m_beta(beta, &mu, Q3, eps).unwrap();
        let r = rho_grid_split(beta, &mu, Q3, eps, a, m.m_beta).unwrap();
        assert_eq!(r.i_prime, 0.0);

        // a single intermediate atom at the geometric mean of the range
        let lo = 1e-3 * a;
        let z = (lo * a).sqrt() / beta;
        let mu = PotentialSpec::atoms(&[(0.0, 0.5), (z, 0.5)]);
        let m = m_beta(beta, &mu, Q3, eps).unwrap();
        assert!(beta * m.m_beta < beta * z);
        let r = rho_grid_split(beta, &mu, Q3, eps, a, m.m_beta).unwrap();
        let cell = r
            .cells
            .iter()
            .find(|c| c.lo <= beta * z && beta * z < c.hi)
            .expect("atom lies on the grid");
        assert_eq!(cell.p_tilde, 0.5);
        assert_eq!(r.retained, vec![cell.l]);
        assert!((r.i_prime - cell.lo * 0.5).abs() < 1e-18);
        assert!(r.i_prime >= (1.0 - eps) * r.i_intermediate - eps * r.frak_i);
    }

    #[test]
    fn scale_examples() {
        let split = RiemannSplit {
            beta: 0.01,
            epsilon: 0.1,
            a: f_inverse(0.5, Q3),
            grid: vec![],
            kappa_prime: 1,
            grid_capped: false,
            intervals: vec![(1.0, 2.0)],
            weights: vec![1e-4],
            i_beta: 0.0,
            important_mass: 1e-4,
            i_important: 0.0,
            degenerate: false,
        };
        let s = scales(&split, Q3, 0.05, 3).unwrap();
        assert!((s.l_hat - 100.0).abs() < 1e-9);
        assert!((s.l - 100.0 / 0.5f64.sqrt()).abs() < 1e-9);
        assert!(delta_admissible(3, 0.05));
        assert!(!delta_admissible(3, 0.4));
        assert!(scales(&split, Q3, 0.4, 3).is_err());
    }

    #[test]
    fn scales_order_for_small_beta() {
        let mu = PotentialSpec::pareto(0.5, 1.0);
        let split = riemann_split(1e-8, &mu, Q3, 0.1, 1e-2).unwrap();
        let s = scales(&split, Q3, 0.05, 3).unwrap();
        assert!(s.ordered, "{s:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn riemann_lower_bound_atoms(
            locs in proptest::collection::vec(-3.0f64..3.0, 1..6),
            masses in proptest::collection::vec(0.01f64..1.0, 6),
            eps in prop_oneof![Just(0.05), Just(0.1), Just(0.2)],
        ) {
            let beta = 0.1;
            let a = 1e-2;
            let total: f64 = masses[..locs.len()].iter().sum();
            let atoms: Vec<(f64, f64)> = locs
                .iter()
                .zip(&masses)
                .map(|(l, m)| (10f64.powf(*l) * a / beta, m / total))
                .collect();
            let mut mu = PotentialSpec::atoms(&atoms);
            if let PotentialSpec::Atoms { atoms } = &mut mu {
                let s: f64 = atoms.iter().map(|x| x.1).sum();
                atoms[0].1 += 1.0 - s;
            }
            let s = riemann_split(beta, &mu, Q3, eps, a).unwrap();
            prop_assert!(s.i_beta >= (1.0 - eps).powi(2) * s.i_important * (1.0 - 1e-12));
            for &p in &s.weights {
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!(p >= eps * f_unchecked(a, Q3) / s.kappa_prime as f64 * s.hat_l_inv2());
            }
        }

        #[test]
        fn riemann_lower_bound_pareto(alpha in 0.2f64..1.5, beta in 1e-3f64..0.5, eps in prop_oneof![Just(0.05), Just(0.1), Just(0.2)]) {
            let mu = PotentialSpec::pareto(alpha, 1.0);
            let s = riemann_split(beta, &mu, Q3, eps, default_cutoff(eps)).unwrap();
            prop_assert!(s.i_beta >= (1.0 - eps).powi(2) * s.i_important * (1.0 - 1e-9));
        }
    }
}
