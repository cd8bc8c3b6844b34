//! Potential distributions on `[0, ∞)`, i.i.d. fields over finite boxes and
//! the logarithmic potential transform `V ↦ β⁻¹ log(1 + βV)`.
//!
//! Every site value is a deterministic function of `(seed, site)`, so a
//! field sampled densely over a box agrees with lazily generated values at
//! the same sites, and overlapping boxes share their values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_walk::Site;
use crate::numerics::quadrature::Quadrature;
use crate::par::{self, Execution};

/// Largest field we are willing to allocate.
pub const MAX_FIELD_SITES: u128 = 1 << 27;

/// A probability distribution μ on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    PointMass {
        value: f64,
    },
    /// `(location, mass)` pairs; masses sum to one.
    Atoms {
        atoms: Vec<(f64, f64)>,
    },
    /// Density `α z_min^α z^{-α-1}` on `[z_min, ∞)`. Infinite mean for `α ≤ 1`.
    Pareto {
        alpha: f64,
        z_min: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Law of `β⁻¹ log(1 + βV)` for `V ~ base`.
    TransformedLog {
        base: Box<PotentialSpec>,
        beta: f64,
    },
    /// `(weight, component)` pairs; weights sum to one.
    Mixture {
        components: Vec<(f64, PotentialSpec)>,
    },
}

fn log_transform(beta: f64, z: f64) -> f64 {
    (beta * z).ln_1p() / beta
}

fn log_transform_inv(beta: f64, w: f64) -> f64 {
    if w.is_infinite() {
        return f64::INFINITY;
    }
    (beta * w).exp_m1() / beta
}

impl PotentialSpec {
    pub fn pareto(alpha: f64, z_min: f64) -> Self {
        PotentialSpec::Pareto { alpha, z_min }
    }

    pub fn atoms(atoms: &[(f64, f64)]) -> Self {
        PotentialSpec::Atoms { atoms: atoms.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::PointMass { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::invalid(format!("point mass at {value} is not in [0, ∞)")));
                }
            }
            PotentialSpec::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::invalid("atomic law needs at least one atom"));
                }
                let mut total = 0.0;
                for &(z, m) in atoms {
                    if !(z.is_finite() && z >= 0.0) || !(0.0..=1.0).contains(&m) {
                        return Err(Error::invalid(format!("bad atom ({z}, {m})")));
                    }
                    total += m;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("atom masses sum to {total}, not 1")));
                }
            }
            PotentialSpec::Pareto { alpha, z_min } => {
                if !(*alpha > 0.0 && *z_min > 0.0 && alpha.is_finite() && z_min.is_finite()) {
                    return Err(Error::invalid("Pareto needs alpha > 0 and z_min > 0"));
                }
            }
            PotentialSpec::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid("exponential rate must be positive"));
                }
            }
            PotentialSpec::TransformedLog { base, beta } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid("transform needs beta > 0"));
                }
                base.validate()?;
            }
            PotentialSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::invalid("mixture needs at least one component"));
                }
                let mut total = 0.0;
                for (w, c) in components {
                    if !(0.0..=1.0).contains(w) {
                        return Err(Error::invalid(format!("bad mixture weight {w}")));
                    }
                    total += w;
                    c.validate()?;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Whether μ has atoms only (integrals against μ are finite sums).
    pub fn is_atomic(&self) -> bool {
        match self {
            PotentialSpec::PointMass { .. } | PotentialSpec::Atoms { .. } => true,
            PotentialSpec::TransformedLog { base, .. } => base.is_atomic(),
            PotentialSpec::Mixture { components } => components.iter().all(|(_, c)| c.is_atomic()),
            _ => false,
        }
    }

    /// The atoms of an atomic law, merged into a list of `(z, mass)`.
    pub fn atom_list(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            PotentialSpec::PointMass { value } => Some(vec![(*value, 1.0)]),
            PotentialSpec::Atoms { atoms } => Some(atoms.clone()),
            PotentialSpec::TransformedLog { base, beta } => Some(
                base.atom_list()?
                    .into_iter()
                    .map(|(z, m)| (log_transform(*beta, z), m))
                    .collect(),
            ),
            PotentialSpec::Mixture { components } => {
                let mut out = Vec::new();
                for (w, c) in components {
                    out.extend(c.atom_list()?.into_iter().map(|(z, m)| (z, w * m)));
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Inverse tail function: the value `z` with `μ([z, ∞)) ≈ s`, for
    /// `s ∈ (0, 1]`. Drives inverse-CDF sampling.
    pub fn sample_from_tail(&self, s: f64) -> f64 {
        let s = s.clamp(f64::MIN_POSITIVE, 1.0);
        match self {
            PotentialSpec::PointMass { value } => *value,
            PotentialSpec::Atoms { atoms } => {
                // atoms are visited from the largest location down
                let mut order: Vec<&(f64, f64)> = atoms.iter().collect();
                order.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut acc = 0.0;
                for &&(z, m) in &order {
                    acc += m;
                    if s <= acc {
                        return z;
                    }
                }
                order.last().map(|a| a.0).unwrap_or(0.0)
            }
            PotentialSpec::Pareto { alpha, z_min } => z_min * s.powf(-1.0 / alpha),
            PotentialSpec::Exponential { rate } => -s.ln() / rate,
            PotentialSpec::TransformedLog { base, beta } => log_transform(*beta, base.sample_from_tail(s)),
            PotentialSpec::Mixture { components } => {
                let mut acc = 0.0;
                for (w, c) in components {
                    if *w > 0.0 && s <= acc + w {
                        return c.sample_from_tail(((s - acc) / w).clamp(f64::MIN_POSITIVE, 1.0));
                    }
                    acc += w;
                }
                let (_, c) = components.last().expect("validated mixture");
                c.sample_from_tail(1.0)
            }
        }
    }

    /// Draws one value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - U lies in (0, 1]
        self.sample_from_tail(1.0 - rng.random::<f64>())
    }

    /// `μ([z, ∞))`.
    pub fn tail_ge(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            return 0.0;
        }
        match self {
            PotentialSpec::PointMass { value } => {
                if *value >= z {
                    1.0
                } else {
                    0.0
                }
            }
            PotentialSpec::Atoms { atoms } => atoms.iter().filter(|a| a.0 >= z).map(|a| a.1).sum(),
            PotentialSpec::Pareto { alpha, z_min } => {
                if z <= *z_min {
                    1.0
                } else {
                    (z / z_min).powf(-alpha)
                }
            }
            PotentialSpec::Exponential { rate } => {
                if z <= 0.0 {
                    1.0
                } else {
                    (-rate * z).exp()
                }
            }
            PotentialSpec::TransformedLog { base, beta } => {
                if z <= 0.0 {
                    1.0
                } else {
                    base.tail_ge(log_transform_inv(*beta, z))
                }
            }
            PotentialSpec::Mixture { components } => components.iter().map(|(w, c)| w * c.tail_ge(z)).sum(),
        }
    }

    /// `μ([lo, hi))`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            PotentialSpec::Atoms { atoms } => atoms.iter().filter(|a| a.0 >= lo && a.0 < hi).map(|a| a.1).sum(),
            PotentialSpec::Mixture { components } => components.iter().map(|(w, c)| w * c.mass(lo, hi)).sum(),
            _ => (self.tail_ge(lo) - self.tail_ge(hi)).max(0.0),
        }
    }

    /// Smallest point of the support inside `[lo, hi)`, if μ charges it.
    pub fn support_inf_in(&self, lo: f64, hi: f64) -> Option<f64> {
        if hi <= lo {
            return None;
        }
        match self {
            PotentialSpec::PointMass { value } => (*value >= lo && *value < hi).then_some(*value),
            PotentialSpec::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.1 > 0.0 && a.0 >= lo && a.0 < hi)
                .map(|a| a.0)
                .min_by(f64::total_cmp),
            PotentialSpec::Pareto { z_min, .. } => {
                let x = lo.max(*z_min);
                (x < hi).then_some(x)
            }
            PotentialSpec::Exponential { .. } => {
                let x = lo.max(0.0);
                (x < hi).then_some(x)
            }
            PotentialSpec::TransformedLog { base, beta } => base
                .support_inf_in(log_transform_inv(*beta, lo.max(0.0)), log_transform_inv(*beta, hi))
                .map(|z| log_transform(*beta, z)),
            PotentialSpec::Mixture { components } => components
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .filter_map(|(_, c)| c.support_inf_in(lo, hi))
                .min_by(f64::total_cmp),
        }
    }

    /// `∫_{[lo, hi)} g dμ`. Atoms are summed exactly; continuous parts are
    /// integrated in the tail-probability variable `s = μ([z, ∞))`, which
    /// maps heavy tails onto a bounded interval.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: &G, lo: f64, hi: f64, quad: &Quadrature) -> Result<f64> {
        self.integrate_dyn(g, lo, hi, quad)
    }

    fn integrate_dyn(&self, g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, quad: &Quadrature) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        match self {
            PotentialSpec::PointMass { value } => Ok(if *value >= lo && *value < hi { g(*value) } else { 0.0 }),
            PotentialSpec::Atoms { atoms } => Ok(atoms
                .iter()
                .filter(|a| a.0 >= lo && a.0 < hi)
                .map(|a| a.1 * g(a.0))
                .sum()),
            PotentialSpec::Pareto { .. } | PotentialSpec::Exponential { .. } => {
                let s_hi = self.tail_ge(lo);
                let s_lo = self.tail_ge(hi);
                if s_hi <= s_lo {
                    return Ok(0.0);
                }
                let r = quad.integrate(|s| g(self.sample_from_tail(s)), s_lo, s_hi)?;
                Ok(r.value)
            }
            PotentialSpec::TransformedLog { base, beta } => {
                let b = *beta;
                let h = |z: f64| g(log_transform(b, z));
                base.integrate_dyn(&h, log_transform_inv(b, lo.max(0.0)), log_transform_inv(b, hi), quad)
            }
            PotentialSpec::Mixture { components } => {
                let mut total = 0.0;
                for (w, c) in components {
                    if *w > 0.0 {
                        total += w * c.integrate_dyn(g, lo, hi, quad)?;
                    }
                }
                Ok(total)
            }
        }
    }

    /// `E[V]`, or `None` when it is infinite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            PotentialSpec::PointMass { value } => Some(*value),
            PotentialSpec::Atoms { atoms } => Some(atoms.iter().map(|a| a.0 * a.1).sum()),
            PotentialSpec::Pareto { alpha, z_min } => (*alpha > 1.0).then(|| alpha * z_min / (alpha - 1.0)),
            PotentialSpec::Exponential { rate } => Some(1.0 / rate),
            PotentialSpec::TransformedLog { .. } => self.truncated_mean(f64::INFINITY, &Quadrature::default()).ok(),
            PotentialSpec::Mixture { components } => {
                let mut total = 0.0;
                for (w, c) in components {
                    if *w > 0.0 {
                        total += w * c.mean()?;
                    }
                }
                Some(total)
            }
        }
    }

    /// `E[V 1{V ≤ m}]`.
    pub fn truncated_mean(&self, m: f64, quad: &Quadrature) -> Result<f64> {
        match self {
            PotentialSpec::PointMass { value } => Ok(if *value <= m { *value } else { 0.0 }),
            PotentialSpec::Atoms { atoms } => Ok(atoms.iter().filter(|a| a.0 <= m).map(|a| a.0 * a.1).sum()),
            PotentialSpec::Pareto { alpha, z_min } => {
                if m <= *z_min {
                    return Ok(0.0);
                }
                if m.is_infinite() {
                    return if *alpha > 1.0 {
                        Ok(alpha * z_min / (alpha - 1.0))
                    } else {
                        Ok(f64::INFINITY)
                    };
                }
                let c = alpha * z_min.powf(*alpha);
                if (alpha - 1.0).abs() < 1e-12 {
                    Ok(c * (m / z_min).ln())
                } else {
                    let p = 1.0 - alpha;
                    Ok(c * (m.powf(p) - z_min.powf(p)) / p)
                }
            }
            PotentialSpec::Exponential { rate } => {
                if m.is_infinite() {
                    return Ok(1.0 / rate);
                }
                let x = rate * m;
                Ok((1.0 - (-x).exp() * (1.0 + x)) / rate)
            }
            PotentialSpec::TransformedLog { base, beta } => {
                // the transformed variable is at most log(1 + βV)/β, finite
                // for every finite V, and grows only logarithmically
                let b = *beta;
                let h = |z: f64| log_transform(b, z);
                if m.is_infinite() {
                    // closed under quadrature in the tail variable
                    return base.integrate(&h, 0.0, f64::INFINITY, quad).and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::QuadratureNoConvergence {
                                achieved: f64::INFINITY,
                                requested: quad.abs_tol,
                            })
                        }
                    });
                }
                base.integrate(&h, 0.0, log_transform_inv(b, m).next_up(), quad)
            }
            PotentialSpec::Mixture { components } => {
                let mut total = 0.0;
                for (w, c) in components {
                    if *w > 0.0 {
                        total += w * c.truncated_mean(m, quad)?;
                    }
                }
                Ok(total)
            }
        }
    }

    /// Laplace transform `∫ e^{-tz} dμ(z)`.
    pub fn laplace(&self, t: f64, quad: &Quadrature) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::invalid(format!("Laplace transform needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        match self {
            PotentialSpec::PointMass { value } => Ok((-t * value).exp()),
            PotentialSpec::Atoms { atoms } => Ok(atoms.iter().map(|a| a.1 * (-t * a.0).exp()).sum()),
            PotentialSpec::Exponential { rate } => Ok(rate / (rate + t)),
            PotentialSpec::Pareto { .. } => self.integrate(&|z: f64| (-t * z).exp(), 0.0, f64::INFINITY, quad),
            PotentialSpec::TransformedLog { base, beta } => {
                // e^{-t log(1+βz)/β} = (1 + βz)^{-t/β}
                let p = -t / beta;
                let b = *beta;
                base.integrate(&|z: f64| (p * (b * z).ln_1p()).exp(), 0.0, f64::INFINITY, quad)
            }
            PotentialSpec::Mixture { components } => {
                let mut total = 0.0;
                for (w, c) in components {
                    if *w > 0.0 {
                        total += w * c.laplace(t, quad)?;
                    }
                }
                Ok(total)
            }
        }
    }
}

/// Law of `β⁻¹ log(1 + βV)` for `V ~ spec`.
pub fn transform_log(spec: &PotentialSpec, beta: f64) -> Result<PotentialSpec> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("transform needs beta > 0"));
    }
    Ok(match spec {
        PotentialSpec::PointMass { value } => PotentialSpec::PointMass {
            value: log_transform(beta, *value),
        },
        _ => PotentialSpec::TransformedLog {
            base: Box::new(spec.clone()),
            beta,
        },
    })
}

/// Laplace transform `L_μ(t)`.
pub fn laplace_mu(spec: &PotentialSpec, t: f64) -> Result<f64> {
    spec.laplace(t, &Quadrature::default())
}

/// An axis-aligned box `lo + [0, shape)` in `Z^d`, stored row-major with the
/// last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<i64>,
    pub shape: Vec<usize>,
}

impl Region {
    pub fn new(lo: Vec<i64>, shape: Vec<usize>) -> Result<Self> {
        if lo.len() != shape.len() || lo.is_empty() {
            return Err(Error::invalid(
                "region corner and shape must have the same positive dimension",
            ));
        }
        Ok(Region { lo, shape })
    }

    /// The box `{lo..=hi}` coordinatewise.
    pub fn from_bounds(lo: &[i64], hi: &[i64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| b < a) {
            return Err(Error::invalid("region bounds must satisfy lo <= hi"));
        }
        let shape = lo.iter().zip(hi).map(|(a, b)| (b - a + 1) as usize).collect();
        Region::new(lo.to_vec(), shape)
    }

    /// `center + {-r..=r}^d`.
    pub fn cube(center: &Site, r: i64) -> Self {
        let lo: Vec<i64> = center.coords().iter().map(|c| c - r).collect();
        let hi: Vec<i64> = center.coords().iter().map(|c| c + r).collect();
        Region::from_bounds(&lo, &hi).expect("r >= 0")
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn volume(&self) -> u128 {
        self.shape.iter().map(|&s| s as u128).product()
    }

    pub fn len(&self) -> usize {
        self.volume() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.volume() == 0
    }

    pub fn index(&self, site: &Site) -> Option<usize> {
        if site.dim() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for ((c, lo), s) in site.coords().iter().zip(&self.lo).zip(&self.shape) {
            let off = c - lo;
            if off < 0 || off >= *s as i64 {
                return None;
            }
            idx = idx * s + off as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut index: usize) -> Site {
        let mut coords = vec![0i64; self.dim()];
        for k in (0..self.dim()).rev() {
            coords[k] = self.lo[k] + (index % self.shape[k]) as i64;
            index /= self.shape[k];
        }
        Site::new(&coords)
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.index(site).is_some()
    }

    /// Row-major stride of axis `k`.
    pub fn stride(&self, k: usize) -> usize {
        self.shape[k + 1..].iter().product()
    }
}

/// Deterministic per-site uniform draws keyed by `(seed, site)`.
#[derive(Clone)]
pub struct SiteStreams {
    base: ChaCha8Rng,
}

impl SiteStreams {
    pub fn new(seed: u64) -> Self {
        SiteStreams {
            base: ChaCha8Rng::seed_from_u64(par::mix64(seed ^ 0x5eed_f1e1d)),
        }
    }

    /// A tail probability in `(0, 1]` for `site`.
    pub fn tail_draw(&self, site: &Site) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(site.stream_key());
        1.0 - rng.random::<f64>()
    }

    /// The potential at `site` under `spec`.
    pub fn value(&self, spec: &PotentialSpec, site: &Site) -> f64 {
        spec.sample_from_tail(self.tail_draw(site))
    }
}

/// Potential values on a finite box.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentField {
    pub region: Region,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl EnvironmentField {
    pub fn get(&self, site: &Site) -> Option<f64> {
        self.region.index(site).map(|i| self.values[i])
    }

    /// A field with prescribed values (for deterministic tests).
    pub fn from_values(region: Region, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.len() {
            return Err(Error::invalid("value count does not match region volume"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("potential values must be nonnegative"));
        }
        Ok(EnvironmentField {
            region,
            values,
            seed: 0,
        })
    }
}

/// Samples an i.i.d. field over `region`. Values depend only on
/// `(spec, seed, site)`.
pub fn sample_field(spec: &PotentialSpec, region: &Region, seed: u64) -> Result<EnvironmentField> {
    sample_field_with(spec, region, seed, Execution::Auto)
}

pub fn sample_field_with(
    spec: &PotentialSpec,
    region: &Region,
    seed: u64,
    exec: Execution,
) -> Result<EnvironmentField> {
    spec.validate()?;
    let sites = region.volume();
    if sites > MAX_FIELD_SITES {
        return Err(Error::RegionTooLarge {
            sites,
            limit: MAX_FIELD_SITES,
        });
    }
    let streams = SiteStreams::new(seed);
    let slab = region.stride(0);
    let slabs = par::map_indexed(exec, region.shape[0], |i| {
        (0..slab)
            .map(|j| streams.value(spec, &region.site(i * slab + j)))
            .collect::<Vec<f64>>()
    });
    Ok(EnvironmentField {
        region: region.clone(),
        values: slabs.concat(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Quadrature {
        Quadrature::new(1e-13, 1e-11)
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(PotentialSpec::atoms(&[(0.0, 0.5), (1.0, 0.4)]).validate().is_err());
        assert!(PotentialSpec::pareto(0.0, 1.0).validate().is_err());
        assert!(PotentialSpec::PointMass { value: -1.0 }.validate().is_err());
        assert!(PotentialSpec::pareto(0.5, 1.0).validate().is_ok());
    }

    #[test]
    fn pareto_tail_and_mean() {
        let p = PotentialSpec::pareto(0.5, 1.0);
        assert!((p.tail_ge(100.0) - 0.1).abs() < 1e-15);
        assert_eq!(p.mean(), None);
        assert!((PotentialSpec::pareto(2.0, 1.0).mean().unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_at_zero_and_point_mass() {
        let p = PotentialSpec::PointMass { value: 2.0 };
        assert_eq!(laplace_mu(&p, 0.0).unwrap(), 1.0);
        assert!((laplace_mu(&p, 0.3).unwrap() - (-0.6f64).exp()).abs() < 1e-16);
        assert!(laplace_mu(&p, -1.0).is_err());
    }

    #[test]
    fn pareto_laplace_matches_incomplete_gamma_identity() {
        // α = 1/2, z_min = 1: L(t) = e^{-t} - sqrt(π t) erfc(sqrt t), evaluated
        // here through an independent density-based composite Simpson rule.
        let t = 1.0;
        let spec = PotentialSpec::pareto(0.5, 1.0);
        let lap = laplace_mu(&spec, t).unwrap();
        // z = e^u, dμ = 0.5 e^{-u/2} du
        let n = 200_000;
        let umax = 40.0;
        let h = umax / n as f64;
        let g = |u: f64| (-t * u.exp()).exp() * 0.5 * (-0.5 * u).exp();
        let mut s = g(0.0) + g(umax);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = s * h / 3.0;
        assert!((lap - simpson).abs() < 1e-8 * simpson, "{lap} vs {simpson}");
    }

    #[test]
    fn laplace_is_completely_monotone_on_grid() {
        for spec in [
            PotentialSpec::pareto(0.5, 1.0),
            PotentialSpec::Exponential { rate: 1.0 },
            PotentialSpec::atoms(&[(0.0, 0.3), (2.0, 0.7)]),
        ] {
            let ts: Vec<f64> = (0..40).map(|i| 0.05 * i as f64).collect();
            let ls: Vec<f64> = ts.iter().map(|&t| laplace_mu(&spec, t).unwrap()).collect();
            for w in ls.windows(3) {
                assert!(w[0] > 0.0 && w[1] <= w[0] + 1e-14);
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12, "{spec:?}");
            }
        }
    }

    #[test]
    fn truncated_mean_grows_like_power_for_heavy_pareto() {
        let alpha: f64 = 0.5;
        let spec = PotentialSpec::pareto(alpha, 1.0);
        let mut prev = 0.0;
        for m in [1e2, 1e4, 1e6] {
            let tm = spec.truncated_mean(m, &q()).unwrap();
            assert!(tm > prev);
            prev = tm;
            // E[V 1{V<=M}] = α z_min^α (M^{1-α} - z_min^{1-α}) / (1-α)
            let lead = alpha * m.powf(1.0 - alpha) / (1.0 - alpha);
            assert!((tm / lead - 1.0).abs() < 2.0 / m.sqrt() + 1e-12);
        }
        // quadrature route agrees with the closed form
        let quad = spec.integrate(&|z| z, 0.0, 1e4f64.next_up(), &q()).unwrap();
        assert!((quad - spec.truncated_mean(1e4, &q()).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn transform_of_point_mass_and_zero() {
        let t = transform_log(&PotentialSpec::PointMass { value: 3.0 }, 0.5).unwrap();
        assert_eq!(
            t,
            PotentialSpec::PointMass {
                value: (1.5f64).ln_1p() / 0.5
            }
        );
        let z = transform_log(&PotentialSpec::PointMass { value: 0.0 }, 0.5).unwrap();
        assert_eq!(z, PotentialSpec::PointMass { value: 0.0 });
    }

    #[test]
    fn transformed_pareto_truncated_mean_matches_monte_carlo() {
        let beta = 0.1;
        let spec = transform_log(&PotentialSpec::pareto(0.5, 1.0), beta).unwrap();
        let m = 30.0;
        let exact = spec.truncated_mean(m, &q()).unwrap();
        let mut rng = crate::par::stream_rng(11, 0, 0);
        let n = 400_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let v = spec.sample(&mut rng);
                if v <= m {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        let (mean, se) = crate::numerics::stats::mean_se(&vals);
        assert!((mean - exact).abs() < 4.0 * se, "{mean} ± {se} vs {exact}");
    }

    #[test]
    fn region_indexing_roundtrip() {
        let r = Region::from_bounds(&[-1, 0, 2], &[1, 3, 2]).unwrap();
        assert_eq!(r.len(), 12);
        for i in 0..r.len() {
            assert_eq!(r.index(&r.site(i)), Some(i));
        }
        assert!(!r.contains(&Site::new(&[2, 0, 2])));
    }

    #[test]
    fn point_mass_field_is_constant_and_seeded_fields_repeat() {
        let r = Region::cube(&Site::origin(3), 3);
        let f = sample_field(&PotentialSpec::PointMass { value: 0.7 }, &r, 5).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.7));
        let p = PotentialSpec::pareto(0.5, 1.0);
        let a = sample_field(&p, &r, 9).unwrap();
        let b = sample_field_with(&p, &r, 9, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let c = sample_field(&p, &r, 10).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn nested_regions_share_values() {
        let p = PotentialSpec::Exponential { rate: 1.0 };
        let small = Region::cube(&Site::origin(3), 2);
        let big = Region::cube(&Site::origin(3), 4);
        let fs = sample_field(&p, &small, 3).unwrap();
        let fb = sample_field(&p, &big, 3).unwrap();
        for i in 0..small.len() {
            let s = small.site(i);
            assert_eq!(fs.get(&s), fb.get(&s));
        }
        // lazy generation agrees with the dense field
        let streams = SiteStreams::new(3);
        let s = Site::new(&[1, -2, 0]);
        assert_eq!(Some(streams.value(&p, &s)), fb.get(&s));
    }

    #[test]
    fn oversized_region_is_rejected() {
        let r = Region::new(vec![0, 0, 0], vec![1 << 10, 1 << 10, 1 << 10]).unwrap();
        let e = sample_field(&PotentialSpec::PointMass { value: 0.0 }, &r, 0);
        assert!(matches!(e, Err(Error::RegionTooLarge { .. })));
    }

    #[test]
    fn empirical_atom_mean_and_pareto_tail() {
        let r = Region::from_bounds(&[0, 0, 0], &[99, 99, 99]).unwrap();
        let atoms = sample_field(&PotentialSpec::atoms(&[(0.0, 0.5), (1.0, 0.5)]), &r, 1).unwrap();
        let n = atoms.values.len() as f64;
        let mean = atoms.values.iter().sum::<f64>() / n;
        assert!((mean - 0.5).abs() < 3.0 * (0.25 / n).sqrt());

        let par = sample_field(&PotentialSpec::pareto(0.5, 1.0), &r, 2).unwrap();
        let frac = par.values.iter().filter(|&&v| v > 100.0).count() as f64 / n;
        assert!((frac - 0.1).abs() < 3.0 * (0.09 / n).sqrt(), "{frac}");
    }
}
