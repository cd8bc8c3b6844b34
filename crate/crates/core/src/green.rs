//! The Anderson operator `H_β = -Δ + βV` on finite boxes with absorbing
//! boundary, its Green function, and the averaged decay of that Green
//! function along a direction.
//!
//! With `Δf(x) = (2d)⁻¹ Σ_{y~x} (f(y) - f(x))` the operator reads
//! `(1 + βV) - P`, where `P` is the simple-walk transfer matrix, so
//! `H_β⁻¹ = Σ_n (DP)^n D` with `D = (1 + βV)⁻¹ = e^{-βV_β}` and
//! `V_β = β⁻¹ log(1 + βV)`.

use serde::{Deserialize, Serialize};

use crate::environment::{EnvironmentField, PotentialSpec, Region, SiteStreams};
use crate::error::{Error, Result};
use crate::fk_mc::{fit_rate, RateFit};
use crate::lattice_walk::{Direction, Site};
use crate::numerics::linalg::{pcg, SolveStats, StencilMatrix, NO_NEIGHBOR};
use crate::numerics::stats::mean_se;
use crate::par::{self, Execution};

/// Largest region accepted by [`fk_equivalence_check`] per dimension:
/// `5^d` sites.
pub const FK_CHECK_SIDE: usize = 5;

const TAG_GREEN: u64 = 0x6_7ee0;

/// `-Δ + βV` restricted to a box, Dirichlet outside.
#[derive(Debug, Clone)]
pub struct LatticeOperator {
    pub region: Region,
    pub beta: f64,
    pub potential: Vec<f64>,
    pub matrix: StencilMatrix,
}

impl LatticeOperator {
    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// Probability of leaving the box in one step from site `i`.
    pub fn leakage(&self, i: usize) -> f64 {
        let w = self.matrix.width;
        (w - self.matrix.row_neighbors(i).count()) as f64 / w as f64
    }
}

/// Builds `H_β` on `env.region`: diagonal `1 + βV(x)`, coupling `-1/(2d)`
/// to neighbours inside the box.
pub fn assemble(env: &EnvironmentField, beta: f64) -> Result<LatticeOperator> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta must be finite and nonnegative"));
    }
    if env.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("potential values must be nonnegative"));
    }
    let region = &env.region;
    let d = region.dim();
    let len = region.len();
    if len >= NO_NEIGHBOR as usize {
        return Err(Error::RegionTooLarge {
            sites: len as u128,
            limit: NO_NEIGHBOR as u128,
        });
    }
    let width = 2 * d;
    let strides: Vec<usize> = (0..d).map(|k| region.stride(k)).collect();
    let mut neighbors = vec![NO_NEIGHBOR; len * width];
    for i in 0..len {
        for k in 0..d {
            let c = (i / strides[k]) % region.shape[k];
            let slot = i * width + 2 * k;
            if c + 1 < region.shape[k] {
                neighbors[slot] = (i + strides[k]) as u32;
            }
            if c > 0 {
                neighbors[slot + 1] = (i - strides[k]) as u32;
            }
        }
    }
    let diag = env.values.iter().map(|v| 1.0 + beta * v).collect();
    Ok(LatticeOperator {
        region: region.clone(),
        beta,
        potential: env.values.clone(),
        matrix: StencilMatrix {
            diag,
            width,
            neighbors,
            coupling: -1.0 / width as f64,
        },
    })
}

/// `g_β(source, ·)` on the box.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenField {
    pub source: Site,
    pub region: Region,
    pub values: Vec<f64>,
    pub stats: SolveStats,
    pub min_value: f64,
    /// Some entry is below `-10·tol` relative to the largest value.
    pub ill_conditioned: bool,
}

impl GreenField {
    pub fn get(&self, site: &Site) -> Option<f64> {
        self.region.index(site).map(|i| self.values[i])
    }
}

/// Solves `H_β u = δ_source` by Jacobi-preconditioned conjugate gradients
/// to relative residual `tol`.
pub fn solve_green(op: &LatticeOperator, source: &Site, tol: f64) -> Result<GreenField> {
    let s = op
        .region
        .index(source)
        .ok_or_else(|| Error::invalid("source lies outside the region"))?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut b = vec![0.0; op.len()];
    b[s] = 1.0;
    let mut x = vec![0.0; op.len()];
    let stats = pcg(&op.matrix, &b, &mut x, tol, 20 * op.len() + 1000)?;
    let min_value = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = x.iter().copied().fold(0.0, f64::max);
    Ok(GreenField {
        source: source.clone(),
        region: op.region.clone(),
        ill_conditioned: min_value < -10.0 * tol * max_value,
        min_value,
        values: x,
        stats,
    })
}

/// Outcome of comparing the solver with the walk series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkCheck {
    pub terms: usize,
    /// `max_y |g_solver(x, y) - Σ_{n<N} ((DP)^n D)(x, y)|`.
    pub max_deviation: f64,
    /// Bound on the omitted terms `Σ_{n≥N}`.
    pub tail_bound: f64,
    /// Power `m` with `‖(DP)^m‖_∞ < 1` used in the bound, and that norm.
    pub contraction_power: usize,
    pub contraction_norm: f64,
    pub solver_residual: f64,
}

impl FkCheck {
    /// Deviation within the tail bound plus a solver allowance.
    pub fn consistent(&self, solver_tol: f64) -> bool {
        self.max_deviation <= self.tail_bound + 10.0 * solver_tol
    }
}

/// Evaluates the series `Σ_{n<N} E_x[Π_{k≤n} e^{-βV_β(S_k)} 1{S_n = y}]`
/// with a dense transfer matrix `T = DP` and compares it to
/// [`solve_green`]. Omitted terms are bounded by
/// `‖T^N‖_∞ · m / (1 - ‖T^m‖_∞)`, valid since `‖T‖_∞ ≤ 1` and `D ≤ 1`.
pub fn fk_equivalence_check(env: &EnvironmentField, beta: f64, source: &Site, n_terms: usize) -> Result<FkCheck> {
    let region = &env.region;
    if region.shape.iter().any(|&s| s > FK_CHECK_SIDE) {
        return Err(Error::RegionTooLarge {
            sites: region.volume(),
            limit: (FK_CHECK_SIDE as u128).pow(region.dim() as u32),
        });
    }
    if n_terms == 0 {
        return Err(Error::invalid("need at least one series term"));
    }
    let tol = 1e-13;
    let op = assemble(env, beta)?;
    let g = solve_green(&op, source, tol)?;
    let x = region.index(source).expect("checked by solve_green");
    let len = region.len();
    let d = region.dim();
    let dvals: Vec<f64> = env.values.iter().map(|v| 1.0 / (1.0 + beta * v)).collect();
    // dense T(i, j) = D(i) / (2d) for j ~ i inside the box
    let mut t = vec![0.0; len * len];
    for i in 0..len {
        let s = region.site(i);
        for k in 0..2 * d {
            if let Some(j) = region.index(&s.stepped(k)) {
                t[i * len + j] = dvals[i] / (2 * d) as f64;
            }
        }
    }
    // row x of Σ_n T^n D
    let mut row = vec![0.0; len];
    row[x] = 1.0;
    let mut series = vec![0.0; len];
    let mut next = vec![0.0; len];
    for _ in 0..n_terms {
        for j in 0..len {
            series[j] += row[j] * dvals[j];
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..len {
            let r = row[i];
            if r != 0.0 {
                for j in 0..len {
                    next[j] += r * t[i * len + j];
                }
            }
        }
        std::mem::swap(&mut row, &mut next);
    }
    // ‖T^k‖_∞ = max_i (T^k 1)(i) for a nonnegative matrix
    let mut ones = vec![1.0; len];
    let mut tmp = vec![0.0; len];
    let mut norms = Vec::with_capacity(n_terms + 1);
    norms.push(1.0);
    for _ in 0..n_terms {
        for i in 0..len {
            tmp[i] = (0..len).map(|j| t[i * len + j] * ones[j]).sum();
        }
        std::mem::swap(&mut ones, &mut tmp);
        norms.push(ones.iter().copied().fold(0.0, f64::max));
    }
    let (m, rho) = norms
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, &v)| v < 1.0)
        .map(|(m, &v)| (m, v))
        .ok_or(Error::NotContracting {
            power: n_terms,
            norm: norms[n_terms],
        })?;
    let tail_bound = norms[n_terms] * m as f64 / (1.0 - rho);
    let max_deviation = series
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(FkCheck {
        terms: n_terms,
        max_deviation,
        tail_bound,
        contraction_power: m,
        contraction_norm: rho,
        solver_residual: g.stats.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenDecayOptions {
    pub n_env: usize,
    /// Box `[-m, n_max + m]` along `ℓ` and `[-m, m]` across.
    pub margin: i64,
    pub seed: u64,
    pub tol: f64,
    pub exec: Execution,
}

impl GreenDecayOptions {
    pub fn new(n_env: usize, margin: i64, seed: u64) -> Self {
        GreenDecayOptions {
            n_env,
            margin,
            seed,
            tol: 1e-10,
            exec: Execution::Auto,
        }
    }
}

/// Mean Green function at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenPoint {
    pub n: i64,
    pub mean: f64,
    pub se: f64,
}

/// Averages of `g_β(0, nℓ)` over environments for one box size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenSeries {
    pub margin: i64,
    pub sites: usize,
    pub points: Vec<GreenPoint>,
    pub fit: Option<RateFit>,
    pub failed: usize,
}

/// [`GreenSeries`] for margins `m` and `2m` on the same environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenDecay {
    pub base: GreenSeries,
    pub doubled: GreenSeries,
    /// `alpha(2m) - alpha(m)`.
    pub margin_shift: f64,
    /// The shift exceeds the 95% interval of the doubled-box fit.
    pub truncation_flag: bool,
}

fn green_box(ell: (usize, i64), d: usize, n_max: i64, margin: i64) -> Result<Region> {
    let (axis, sign) = ell;
    let mut lo = vec![-margin; d];
    let mut hi = vec![margin; d];
    if sign > 0 {
        hi[axis] = n_max + margin;
    } else {
        lo[axis] = -n_max - margin;
    }
    Region::from_bounds(&lo, &hi)
}

/// One box size: every environment `k` uses the site streams of
/// `derive(seed, k)`, so boxes of different sizes see the same potential
/// where they overlap.
pub fn green_series(
    spec: &PotentialSpec,
    beta: f64,
    ell: &Direction,
    n_values: &[i64],
    opts: &GreenDecayOptions,
) -> Result<GreenSeries> {
    spec.validate()?;
    let (axis, sign) = ell
        .as_axis()
        .ok_or_else(|| Error::invalid("Green decay boxes need an axis direction"))?;
    if n_values.is_empty() || n_values.iter().any(|&n| n < 0) {
        return Err(Error::invalid("need nonnegative distances"));
    }
    if opts.n_env < 2 || opts.margin < 1 {
        return Err(Error::invalid("need at least two environments and a positive margin"));
    }
    let d = ell.dim();
    let n_max = *n_values.iter().max().expect("nonempty");
    let region = green_box((axis, sign), d, n_max, opts.margin)?;
    if region.volume() > crate::environment::MAX_FIELD_SITES {
        return Err(Error::RegionTooLarge {
            sites: region.volume(),
            limit: crate::environment::MAX_FIELD_SITES,
        });
    }
    let targets: Vec<usize> = n_values
        .iter()
        .map(|&n| region.index(&Site::on_axis(d, axis, sign * n)).expect("inside the box"))
        .collect();
    let origin = Site::origin(d);
    let solves = par::map_indexed(opts.exec, opts.n_env, |k| -> Result<Vec<f64>> {
        let streams = SiteStreams::new(par::derive_seed(opts.seed, TAG_GREEN, k as u64));
        let values = (0..region.len())
            .map(|i| streams.value(spec, &region.site(i)))
            .collect();
        let env = EnvironmentField::from_values(region.clone(), values)?;
        let op = assemble(&env, beta)?;
        let g = solve_green(&op, &origin, opts.tol)?;
        Ok(targets.iter().map(|&i| g.values[i]).collect())
    });
    let mut rows = Vec::with_capacity(opts.n_env);
    let mut failed = 0;
    for r in solves {
        match r {
            Ok(v) => rows.push(v),
            Err(e) if e.is_numerical() => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if rows.len() < 2 {
        return Err(Error::SolverNoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let points: Vec<GreenPoint> = n_values
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (mean, se) = mean_se(&col);
            GreenPoint { n, mean, se }
        })
        .collect();
    let fit = if points.len() >= 4 && points.iter().all(|p| p.mean > 0.0) {
        Some(fit_rate(
            &points
                .iter()
                .map(|p| (p.n as f64, p.mean.ln(), p.se / p.mean))
                .collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(GreenSeries {
        margin: opts.margin,
        sites: region.len(),
        points,
        fit,
        failed,
    })
}

/// Averaged decay of `g_β(0, nℓ)` with margin doubling as a truncation
/// diagnostic.
pub fn averaged_green_decay(
    spec: &PotentialSpec,
    beta: f64,
    ell: &Direction,
    n_values: &[i64],
    opts: &GreenDecayOptions,
) -> Result<GreenDecay> {
    let base = green_series(spec, beta, ell, n_values, opts)?;
    let doubled = green_series(
        spec,
        beta,
        ell,
        n_values,
        &GreenDecayOptions {
            margin: 2 * opts.margin,
            ..*opts
        },
    )?;
    let (margin_shift, truncation_flag) = match (&base.fit, &doubled.fit) {
        (Some(a), Some(b)) => {
            let shift = b.alpha_hat - a.alpha_hat;
            (shift, shift.abs() > crate::numerics::stats::Z95 * b.alpha_se)
        }
        _ => (f64::NAN, true),
    };
    Ok(GreenDecay {
        base,
        doubled,
        margin_shift,
        truncation_flag,
    })
}
