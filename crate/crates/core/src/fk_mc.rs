//! Monte Carlo for the annealed point-to-hyperplane weight
//! `e_{β,n} = 𝔼 E_0[exp(-β Σ_{k<T_n} V(S_k))]`, exact per-environment slab
//! solves for the quenched weight, and exponential rate fits.
//!
//! Given a path, the environment average factorizes over visited sites, so
//! each sampled path contributes `Π_x 𝓛_μ(β L_x)` exactly, where `L_x` is
//! the local time at `x`. Paths may be drawn from an exponentially tilted
//! step law; the likelihood ratio is then folded into the weight.

use serde::{Deserialize, Serialize};

use crate::environment::{PotentialSpec, SiteStreams};
use crate::error::{Error, Result};
use crate::lattice_walk::{run_passage, Direction, LocalTimeProfile, Site, StepKernel, StopReason};
use crate::numerics::linalg::{pcg, StencilMatrix, NO_NEIGHBOR};
use crate::numerics::quadrature::Quadrature;
use crate::numerics::stats::{batch_means, mean_se, weighted_linear_fit, LogMean, LogSumExp, Z95};
use crate::par::{self, Execution};
use crate::theory::optimal_speed;

/// Number of batches behind every Monte Carlo confidence interval.
pub const BATCHES: usize = 32;

/// Largest potential exponent kept in slab solves; `e^{-60}` is below any
/// weight that can influence a double-precision result at desk scale.
pub const MAX_EXPONENT: f64 = 60.0;

const TAG_ANNEALED: u64 = 0xa11e_a1ed;
const TAG_QUENCHED: u64 = 0x09e1_1ced;

fn log_laplace(spec: &PotentialSpec, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    // relative accuracy matters here: the factors multiply along the path
    let quad = Quadrature {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    Ok(spec.laplace(t, &quad)?.ln())
}

/// `log 𝓛_μ(βk)` for local times `k = 0..=k_max`, with direct evaluation
/// beyond the table.
#[derive(Debug, Clone)]
pub struct LaplaceTable {
    pub beta: f64,
    spec: PotentialSpec,
    log_values: Vec<f64>,
}

impl LaplaceTable {
    pub fn new(spec: &PotentialSpec, beta: f64, k_max: u32) -> Result<Self> {
        spec.validate()?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta must be finite and nonnegative"));
        }
        let log_values = (0..=k_max)
            .map(|k| log_laplace(spec, beta * k as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(LaplaceTable {
            beta,
            spec: spec.clone(),
            log_values,
        })
    }

    pub fn log_factor(&self, k: u32) -> Result<f64> {
        match self.log_values.get(k as usize) {
            Some(v) => Ok(*v),
            None => log_laplace(&self.spec, self.beta * k as f64),
        }
    }
}

/// Environment average of `exp(-β Σ_x L_x V(x))` for a fixed path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealedWeight {
    pub log_value: f64,
}

impl AnnealedWeight {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// `Π_x 𝓛_μ(β L_x)` over the sites of `profile`.
pub fn annealed_weight(profile: &LocalTimeProfile, beta: f64, spec: &PotentialSpec) -> Result<AnnealedWeight> {
    let k_max = profile.counts.values().copied().max().unwrap_or(0);
    annealed_weight_with(profile, &LaplaceTable::new(spec, beta, k_max)?)
}

pub fn annealed_weight_with(profile: &LocalTimeProfile, table: &LaplaceTable) -> Result<AnnealedWeight> {
    let mut log_value = 0.0;
    for &c in profile.counts.values() {
        log_value += table.log_factor(c)?;
    }
    Ok(AnnealedWeight { log_value })
}

/// Step law with `P(e) ∝ exp(λ e·ℓ)`. Relative to the simple walk, a path
/// of `T` steps and displacement `Δ` has likelihood ratio
/// `φ^T exp(-λ Δ·ℓ)` with `φ = (2d)⁻¹ Σ_e exp(λ e·ℓ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltPolicy {
    pub lambda: f64,
    /// `log φ`.
    pub log_normalization: f64,
    pub ell: Vec<f64>,
}

impl TiltPolicy {
    pub fn identity(ell: &Direction) -> Self {
        TiltPolicy {
            lambda: 0.0,
            log_normalization: 0.0,
            ell: ell.vector().to_vec(),
        }
    }

    pub fn with_lambda(lambda: f64, ell: &Direction) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::DegenerateTilt(format!("lambda = {lambda}")));
        }
        let d = ell.dim();
        let weights = Self::step_weights(lambda, ell);
        let phi = weights.iter().sum::<f64>() / (2 * d) as f64;
        if !(phi.is_finite() && weights.iter().all(|w| w.is_finite())) {
            return Err(Error::DegenerateTilt(format!(
                "normalization overflows at lambda = {lambda}"
            )));
        }
        Ok(TiltPolicy {
            lambda,
            log_normalization: phi.ln(),
            ell: ell.vector().to_vec(),
        })
    }

    fn step_weights(lambda: f64, ell: &Direction) -> Vec<f64> {
        (0..2 * ell.dim())
            .map(|k| (lambda * ell.step_projection(k)).exp())
            .collect()
    }

    pub fn direction(&self) -> Result<Direction> {
        Direction::new(&self.ell)
    }

    pub fn kernel(&self) -> Result<StepKernel> {
        let ell = self.direction()?;
        if self.lambda == 0.0 {
            return Ok(StepKernel::uniform(ell.dim()));
        }
        StepKernel::from_weights(&Self::step_weights(self.lambda, &ell))
    }

    /// Mean of `e·ℓ` under the tilted step law.
    pub fn drift(&self) -> Result<f64> {
        let ell = self.direction()?;
        let k = self.kernel()?;
        Ok((0..2 * ell.dim())
            .map(|i| k.probability(i) * ell.step_projection(i))
            .sum())
    }

    pub fn log_likelihood_ratio(&self, steps: usize, displacement: f64) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        steps as f64 * self.log_normalization - self.lambda * displacement
    }
}

/// Tilt of strength `λ = √(2dI)`, i.e. `d` times the optimal speed for
/// the rate integral `I`.
pub fn make_tilt(i: f64, ell: &Direction) -> Result<TiltPolicy> {
    if !(i >= 0.0 && i.is_finite()) {
        return Err(Error::invalid("rate integral must be finite and nonnegative"));
    }
    let lambda = optimal_speed(i, ell.dim())?.cost_star;
    TiltPolicy::with_lambda(lambda, ell)
}

/// `200 n² d`.
pub fn default_cap(n: i64, d: usize) -> usize {
    200 * (n.max(1) as usize).pow(2) * d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub n_samples: u64,
    /// Step budget per path; `None` selects [`default_cap`].
    pub cap: Option<usize>,
    pub seed: u64,
    pub exec: Execution,
}

impl McOptions {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McOptions {
            n_samples,
            cap: None,
            seed,
            exec: Execution::Auto,
        }
    }
}

/// One estimate `ê_{β,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: i64,
    pub log_mean: f64,
    /// Batch-means standard error of `log ê`.
    pub log_se: f64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub samples: u64,
    pub censored: u64,
    pub mean_steps: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl DecayPoint {
    pub fn censoring_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.censored as f64 / self.samples as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        self.mean * self.log_se
    }

    fn from_log_mean(
        n: i64,
        lm: LogMean,
        samples: u64,
        censored: u64,
        mean_steps: f64,
        lambda: f64,
        seed: u64,
    ) -> Self {
        let (ci_lo, ci_hi) = lm.ci95();
        DecayPoint {
            n,
            log_mean: lm.log_mean,
            log_se: lm.log_se,
            mean: lm.mean(),
            ci_lo,
            ci_hi,
            samples,
            censored,
            mean_steps,
            lambda,
            seed,
        }
    }
}

struct BatchTally {
    sum: LogSumExp,
    censored: u64,
    steps: u64,
}

/// Path sampler for a fixed `(β, μ, ℓ, tilt)`.
#[derive(Debug, Clone)]
pub struct FkSampler {
    pub beta: f64,
    table: LaplaceTable,
    ell: Direction,
    tilt: TiltPolicy,
    kernel: StepKernel,
}

impl FkSampler {
    pub fn new(beta: f64, spec: &PotentialSpec, ell: &Direction, tilt: Option<&TiltPolicy>) -> Result<Self> {
        let tilt = match tilt {
            Some(t) => {
                if t.direction()?.vector() != ell.vector() {
                    return Err(Error::invalid("tilt direction differs from the passage direction"));
                }
                t.clone()
            }
            None => TiltPolicy::identity(ell),
        };
        Ok(FkSampler {
            beta,
            table: LaplaceTable::new(spec, beta, 256)?,
            ell: ell.clone(),
            kernel: tilt.kernel()?,
            tilt,
        })
    }

    pub fn tilt(&self) -> &TiltPolicy {
        &self.tilt
    }

    fn run_batch(&self, n: i64, cap: usize, samples: u64, seed: u64, batch: u64) -> Result<BatchTally> {
        let mut rng = par::stream_rng(seed, TAG_ANNEALED ^ (n as u64).wrapping_mul(0x100_0001), batch);
        let mut profile = LocalTimeProfile::new();
        let origin = Site::origin(self.ell.dim());
        let mut t = BatchTally {
            sum: LogSumExp::new(),
            censored: 0,
            steps: 0,
        };
        for _ in 0..samples {
            let out = run_passage(&origin, &self.ell, n, cap, &self.kernel, &mut rng, &mut profile, None);
            t.steps += out.steps as u64;
            if out.stop == StopReason::Capped {
                // the unknown remainder of the weight is bounded below by 0
                t.censored += 1;
                t.sum.push(f64::NEG_INFINITY);
                continue;
            }
            let w = annealed_weight_with(&profile, &self.table)?;
            let lr = self.tilt.log_likelihood_ratio(out.steps, self.ell.project(&out.end));
            t.sum.push(w.log_value + lr);
        }
        Ok(t)
    }

    /// Estimates `e_{β,n}` from `opts.n_samples` paths split into
    /// [`BATCHES`] independent streams.
    pub fn estimate(&self, n: i64, opts: &McOptions) -> Result<DecayPoint> {
        if n < 1 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if opts.n_samples < BATCHES as u64 {
            return Err(Error::invalid(format!("need at least {BATCHES} samples")));
        }
        let lambda = self.tilt.lambda;
        if self.beta == 0.0 {
            // T_n is almost surely finite, so every path has weight one
            let lm = LogMean {
                log_mean: 0.0,
                log_se: 0.0,
            };
            return Ok(DecayPoint::from_log_mean(
                n,
                lm,
                opts.n_samples,
                0,
                0.0,
                lambda,
                opts.seed,
            ));
        }
        let cap = opts.cap.unwrap_or_else(|| default_cap(n, self.ell.dim()));
        let per = opts.n_samples / BATCHES as u64;
        let extra = opts.n_samples % BATCHES as u64;
        let tallies = par::map_indexed(opts.exec, BATCHES, |b| {
            let size = per + u64::from((b as u64) < extra);
            self.run_batch(n, cap, size, opts.seed, b as u64)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let sums: Vec<LogSumExp> = tallies.iter().map(|t| t.sum).collect();
        let censored = tallies.iter().map(|t| t.censored).sum();
        let steps: u64 = tallies.iter().map(|t| t.steps).sum();
        let lm = batch_means(&sums);
        Ok(DecayPoint::from_log_mean(
            n,
            lm,
            opts.n_samples,
            censored,
            steps as f64 / opts.n_samples as f64,
            lambda,
            opts.seed,
        ))
    }
}

/// Estimates `e_{β,n}` for one `n`.
pub fn estimate_e(
    beta: f64,
    n: i64,
    spec: &PotentialSpec,
    ell: &Direction,
    tilt: Option<&TiltPolicy>,
    opts: &McOptions,
) -> Result<DecayPoint> {
    FkSampler::new(beta, spec, ell, tilt)?.estimate(n, opts)
}

/// Estimates over a list of distances together with their rate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub points: Vec<DecayPoint>,
    pub fit: Option<RateFit>,
    /// Largest censoring fraction over the points.
    pub censoring: f64,
}

/// Runs [`FkSampler::estimate`] for every `n` (seeds are shared, streams
/// differ by `n`) and fits the rate when at least four points are given.
pub fn estimate_decay(
    beta: f64,
    n_values: &[i64],
    spec: &PotentialSpec,
    ell: &Direction,
    tilt: Option<&TiltPolicy>,
    opts: &McOptions,
) -> Result<DecayEstimate> {
    let sampler = FkSampler::new(beta, spec, ell, tilt)?;
    let points = n_values
        .iter()
        .map(|&n| sampler.estimate(n, opts))
        .collect::<Result<Vec<_>>>()?;
    let censoring = points.iter().map(|p| p.censoring_fraction()).fold(0.0, f64::max);
    let fit = if points.len() >= 4 {
        Some(fit_rate(
            &points
                .iter()
                .map(|p| (p.n as f64, p.log_mean, p.log_se))
                .collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(DecayEstimate { points, fit, censoring })
}

/// Exponential rate of a decay series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `-log ê` on `n` over the upper window.
    pub alpha_hat: f64,
    pub alpha_se: f64,
    pub intercept: f64,
    /// Slope over all points.
    pub alpha_all: f64,
    pub alpha_all_se: f64,
    /// `|alpha_all - alpha_hat| / alpha_hat`.
    pub window_sensitivity: f64,
    pub window_points: usize,
    /// `-log ê` decreases between consecutive `n` by more than the joint
    /// 95% interval.
    pub unstable: bool,
}

impl RateFit {
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.alpha_hat - Z95 * self.alpha_se,
            self.alpha_hat + Z95 * self.alpha_se,
        )
    }
}

/// Weighted least squares of `-log ê` on `n` from triples
/// `(n, log ê, se of log ê)`. The reported rate uses the largest-`n` half
/// of the points (at least three); the all-points slope gives the window
/// sensitivity.
pub fn fit_rate(points: &[(f64, f64, f64)]) -> Result<RateFit> {
    let mut pts: Vec<(f64, f64, f64)> = points.to_vec();
    if pts.iter().any(|p| !p.1.is_finite() || !(p.2 >= 0.0)) {
        return Err(Error::invalid("every estimate must be positive with a finite error"));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let distinct = pts.windows(2).filter(|w| w[1].0 > w[0].0).count() + usize::from(!pts.is_empty());
    if distinct < 4 {
        return Err(Error::invalid("rate fit needs at least four distinct n"));
    }
    let fit = |p: &[(f64, f64, f64)]| {
        let x: Vec<f64> = p.iter().map(|p| p.0).collect();
        let y: Vec<f64> = p.iter().map(|p| -p.1).collect();
        let w: Vec<f64> = p.iter().map(|p| 1.0 / (p.2 * p.2 + 1e-300)).collect();
        weighted_linear_fit(&x, &y, &w).ok_or_else(|| Error::invalid("degenerate abscissae"))
    };
    let k = pts.len().div_ceil(2).max(3);
    let window = &pts[pts.len() - k..];
    let upper = fit(window)?;
    let all = fit(&pts)?;
    let unstable = pts.windows(2).any(|w| {
        let drop = (-w[0].1) - (-w[1].1);
        drop > Z95 * (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt() && w[1].0 > w[0].0
    });
    let window_sensitivity = if upper.slope == 0.0 {
        if all.slope == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((all.slope - upper.slope) / upper.slope).abs()
    };
    Ok(RateFit {
        alpha_hat: upper.slope,
        alpha_se: upper.slope_se,
        intercept: upper.intercept,
        alpha_all: all.slope,
        alpha_all_se: all.slope_se,
        window_sensitivity,
        window_points: k,
        unstable,
    })
}

/// Slab used for quenched solves: `t = ℓ·x ∈ [-back, n-1]`, transverse
/// coordinates periodic with `period`, `u = 1` once `t ≥ n`, absorption
/// below `-back`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub n: i64,
    pub back: i64,
    pub period: i64,
}

impl Slab {
    /// Backward depth and transverse period `factor · n`.
    pub fn scaled(n: i64, factor: i64) -> Result<Self> {
        if n < 1 || factor < 1 {
            return Err(Error::invalid("slab needs n >= 1 and factor >= 1"));
        }
        Ok(Slab {
            n,
            back: factor * n,
            period: (factor * n).max(3),
        })
    }

    fn sites(&self, d: usize) -> u128 {
        (self.n + self.back) as u128 * (self.period as u128).pow(d as u32 - 1)
    }
}

/// Exact `u(0) = E_0[exp(-β Σ_{k<T_n} V(S_k))]` in one environment on a
/// slab, together with the solver report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSolution {
    pub u0: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `e^{βV(x)} u(x) - (2d)⁻¹ Σ_{y ~ x} u(y) = 0` on the slab with
/// `u = 1` beyond the target plane. `potential` maps a lattice site to
/// `V(x)`; `ℓ` must be a signed coordinate axis.
pub fn solve_slab<F: Fn(&Site) -> f64>(
    beta: f64,
    ell: &Direction,
    slab: &Slab,
    potential: F,
    tol: f64,
) -> Result<SlabSolution> {
    let (axis, sign) = ell
        .as_axis()
        .ok_or_else(|| Error::invalid("slab solves need an axis direction"))?;
    let d = ell.dim();
    let sites = slab.sites(d);
    if sites > crate::environment::MAX_FIELD_SITES {
        return Err(Error::RegionTooLarge {
            sites,
            limit: crate::environment::MAX_FIELD_SITES,
        });
    }
    let len = sites as usize;
    let layer = (slab.period as usize).pow(d as u32 - 1);
    let p = slab.period;
    let half = p / 2;
    let trans_axes: Vec<usize> = (0..d).filter(|&k| k != axis).collect();
    let site_of = |idx: usize| -> Site {
        let t = (idx / layer) as i64 - slab.back;
        let mut rem = idx % layer;
        let mut c = vec![0i64; d];
        for &k in trans_axes.iter().rev() {
            c[k] = (rem % p as usize) as i64 - half;
            rem /= p as usize;
        }
        c[axis] = sign * t;
        Site::new(&c)
    };
    let width = 2 * d;
    let coupling = -1.0 / width as f64;
    let mut diag = vec![0.0; len];
    let mut neighbors = vec![NO_NEIGHBOR; len * width];
    let mut b = vec![0.0; len];
    let last_layer = (slab.n + slab.back - 1) as usize;
    for idx in 0..len {
        let x = site_of(idx);
        let v = potential(&x);
        if !(v >= 0.0) {
            return Err(Error::invalid("potential values must be nonnegative"));
        }
        diag[idx] = (beta * v).min(MAX_EXPONENT).exp();
        let tl = idx / layer;
        let slot = &mut neighbors[idx * width..(idx + 1) * width];
        // along ℓ: forward neighbour, backward neighbour
        if tl == last_layer {
            b[idx] += -coupling;
        } else {
            slot[0] = (idx + layer) as u32;
        }
        if tl > 0 {
            slot[1] = (idx - layer) as u32;
        }
        // transverse, periodic
        let mut stride = 1usize;
        for (j, _) in trans_axes.iter().enumerate().rev() {
            let c = (idx / stride) % p as usize;
            let up = if c + 1 == p as usize {
                idx - c * stride
            } else {
                idx + stride
            };
            let down = if c == 0 {
                idx + (p as usize - 1) * stride
            } else {
                idx - stride
            };
            slot[2 + 2 * j] = up as u32;
            slot[3 + 2 * j] = down as u32;
            stride *= p as usize;
        }
    }
    let m = StencilMatrix {
        diag,
        width,
        neighbors,
        coupling,
    };
    let mut x = vec![0.0; len];
    let stats = pcg(&m, &b, &mut x, tol, 20 * len + 1000)?;
    let origin = slab.back as usize * layer + {
        // transverse origin sits at offset `half` on every transverse axis
        let mut off = 0usize;
        let mut stride = 1usize;
        for _ in &trans_axes {
            off += half as usize * stride;
            stride *= p as usize;
        }
        off
    };
    Ok(SlabSolution {
        u0: x[origin],
        iterations: stats.iterations,
        residual: stats.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchedOptions {
    pub n_env: usize,
    pub seed: u64,
    /// Slab depth and period in units of `n`.
    pub slab_factor: i64,
    pub tol: f64,
    pub exec: Execution,
}

impl QuenchedOptions {
    pub fn new(n_env: usize, seed: u64) -> Self {
        QuenchedOptions {
            n_env,
            seed,
            slab_factor: 4,
            tol: 1e-10,
            exec: Execution::Auto,
        }
    }
}

/// Per-environment slab solves summarized two ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchedEstimate {
    pub n: i64,
    pub slab: Slab,
    pub solved: usize,
    /// Environments whose solve did not converge; excluded from the means.
    pub failed: usize,
    /// Mean of `u(0)` over environments, an estimator of `e_{β,n}`.
    pub annealed_mean: f64,
    pub annealed_se: f64,
    /// Mean and standard error of `log u(0)`.
    pub mean_log_u: f64,
    pub se_log_u: f64,
    /// `-(1/n) mean log u(0)`.
    pub rate_proxy: f64,
    pub u_values: Vec<f64>,
}

impl QuenchedEstimate {
    /// `exp(mean log u)`.
    pub fn geometric_mean(&self) -> f64 {
        self.mean_log_u.exp()
    }
}

/// Independent environments `seed_k = derive(seed, k)`; each is solved
/// exactly on the slab of [`QuenchedOptions::slab_factor`].
pub fn estimate_quenched(
    beta: f64,
    n: i64,
    spec: &PotentialSpec,
    ell: &Direction,
    opts: &QuenchedOptions,
) -> Result<QuenchedEstimate> {
    spec.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta must be finite and nonnegative"));
    }
    if opts.n_env < 2 {
        return Err(Error::invalid("need at least two environments"));
    }
    let slab = Slab::scaled(n, opts.slab_factor)?;
    let results = par::map_indexed(opts.exec, opts.n_env, |k| {
        let streams = SiteStreams::new(par::derive_seed(opts.seed, TAG_QUENCHED, k as u64));
        solve_slab(beta, ell, &slab, |x| streams.value(spec, x), opts.tol)
    });
    let mut u_values = Vec::with_capacity(opts.n_env);
    let mut failed = 0;
    for r in results {
        match r {
            Ok(s) => u_values.push(s.u0),
            Err(e) if e.is_numerical() => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if u_values.len() < 2 {
        return Err(Error::SolverNoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let (annealed_mean, annealed_se) = mean_se(&u_values);
    let logs: Vec<f64> = u_values.iter().map(|u| u.max(f64::MIN_POSITIVE).ln()).collect();
    let (mean_log_u, se_log_u) = mean_se(&logs);
    Ok(QuenchedEstimate {
        n,
        slab,
        solved: u_values.len(),
        failed,
        annealed_mean,
        annealed_se,
        mean_log_u,
        se_log_u,
        rate_proxy: -mean_log_u / n as f64,
        u_values,
    })
}
