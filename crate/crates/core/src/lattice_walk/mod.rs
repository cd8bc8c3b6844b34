//! Simple random walk on `Z^d`: sites, directions, step kernels, first
//! passage to hyperplanes, exits from Euclidean balls and coarse-graining.
//!
//! Steps are encoded as indices `k ∈ 0..2d`: axis `k / 2`, positive when `k`
//! is even.

mod escape;
mod hitting;

pub use escape::{escape_prob, green_constant, EscapeEstimate, EscapeMethod};
pub use hitting::{hitting_prob_exact, HittingSolution};

use std::fmt;

use rand::Rng;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::par;

/// A point of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(SmallVec<[i64; 4]>);

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        Site(SmallVec::from_slice(coords))
    }

    pub fn origin(d: usize) -> Self {
        Site(SmallVec::from_elem(0, d))
    }

    /// `k e_axis`.
    pub fn on_axis(d: usize, axis: usize, k: i64) -> Self {
        let mut s = Site::origin(d);
        s.0[axis] = k;
        s
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    pub fn step(&mut self, k: usize) {
        self.0[k >> 1] += if k & 1 == 0 { 1 } else { -1 };
    }

    pub fn stepped(&self, k: usize) -> Site {
        let mut s = self.clone();
        s.step(k);
        s
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn dist2(&self, other: &Site) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// A stream identifier for per-site random draws.
    pub fn stream_key(&self) -> u64 {
        self.0
            .iter()
            .fold(par::mix64(self.0.len() as u64), |h, &c| par::mix64(h ^ c as u64))
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// A unit vector `ℓ ∈ R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    ell: Vec<f64>,
    /// `(axis, sign)` when `ℓ = ±e_axis`; enables exact integer tests.
    axis: Option<(usize, i64)>,
}

impl Direction {
    /// Accepts `ell` only if its Euclidean norm is 1 within `1e-12`.
    pub fn new(ell: &[f64]) -> Result<Self> {
        if ell.is_empty() || ell.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("direction must be a finite nonempty vector"));
        }
        let norm = ell.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("direction has norm {norm}, expected 1")));
        }
        let nonzero: Vec<usize> = (0..ell.len()).filter(|&i| ell[i] != 0.0).collect();
        let axis = match nonzero.as_slice() {
            [i] if ell[*i].abs() == 1.0 => Some((*i, ell[*i].signum() as i64)),
            _ => None,
        };
        Ok(Direction {
            ell: ell.to_vec(),
            axis,
        })
    }

    /// Rescales a nonzero vector to unit length.
    pub fn normalized(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        let mut ell: Vec<f64> = v.iter().map(|x| x / norm).collect();
        if let Some(i) = (0..ell.len()).find(|&i| ell[i].abs() == 1.0) {
            ell.iter_mut().enumerate().for_each(|(j, x)| {
                if j != i {
                    *x = 0.0
                }
            });
        }
        Direction::new(&ell)
    }

    pub fn axis(d: usize, axis: usize) -> Self {
        let mut ell = vec![0.0; d];
        ell[axis] = 1.0;
        Direction {
            ell,
            axis: Some((axis, 1)),
        }
    }

    pub fn dim(&self) -> usize {
        self.ell.len()
    }

    pub fn vector(&self) -> &[f64] {
        &self.ell
    }

    pub fn as_axis(&self) -> Option<(usize, i64)> {
        self.axis
    }

    /// `ℓ · e_k` for step index `k`.
    pub fn step_projection(&self, k: usize) -> f64 {
        let v = self.ell[k >> 1];
        if k & 1 == 0 {
            v
        } else {
            -v
        }
    }

    pub fn project(&self, site: &Site) -> f64 {
        match self.axis {
            Some((i, s)) => (s * site.coords()[i]) as f64,
            None => site
                .coords()
                .iter()
                .zip(&self.ell)
                .map(|(&c, &l)| c as f64 * l)
                .collect::<CompensatedSum>()
                .value(),
        }
    }

    /// Whether `site · ℓ ≥ n`.
    pub fn crossed(&self, site: &Site, n: i64) -> bool {
        match self.axis {
            Some((i, s)) => s * site.coords()[i] >= n,
            None => self.project(site) >= n as f64,
        }
    }

    /// The lattice point nearest to `n ℓ`.
    pub fn lattice_point(&self, n: i64) -> Site {
        Site(self.ell.iter().map(|&l| (l * n as f64).round() as i64).collect())
    }
}

/// Distribution of a single step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    d: usize,
    /// Cumulative probabilities over step indices; `None` for uniform.
    cumulative: Option<Vec<f64>>,
}

impl StepKernel {
    pub fn uniform(d: usize) -> Self {
        StepKernel { d, cumulative: None }
    }

    /// Kernel with probabilities proportional to `weights` (length `2d`).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || !weights.len().is_multiple_of(2) {
            return Err(Error::invalid("step weights need one entry per signed axis"));
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid(
                "step weights must be finite, nonnegative and not all zero",
            ));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        *cumulative.last_mut().expect("nonempty") = 1.0;
        Ok(StepKernel {
            d: weights.len() / 2,
            cumulative: Some(cumulative),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn probability(&self, k: usize) -> f64 {
        match &self.cumulative {
            None => 1.0 / (2 * self.d) as f64,
            Some(c) => c[k] - if k == 0 { 0.0 } else { c[k - 1] },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.cumulative {
            None => rng.random_range(0..2 * self.d),
            Some(c) => {
                let u: f64 = rng.random();
                c.iter().position(|&p| u < p).unwrap_or(c.len() - 1)
            }
        }
    }
}

/// Visit counts of one path over `k < horizon`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalTimeProfile {
    pub counts: FxHashMap<Site, u32>,
    /// Number of time indices covered, i.e. the sum of all counts.
    pub horizon: usize,
}

impl LocalTimeProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.counts.clear();
        self.horizon = 0;
    }

    pub fn visit(&mut self, site: &Site) {
        match self.counts.get_mut(site) {
            Some(c) => *c += 1,
            None => {
                self.counts.insert(site.clone(), 1);
            }
        }
        self.horizon += 1;
    }

    pub fn from_counts(counts: &[(Site, u32)]) -> Self {
        let mut p = LocalTimeProfile::new();
        for (s, c) in counts {
            *p.counts.entry(s.clone()).or_insert(0) += c;
            p.horizon += *c as usize;
        }
        p
    }

    pub fn distinct_sites(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Crossed,
    ExitedBall,
    /// The step budget ran out first; the stopping time is right-censored.
    Capped,
}

/// A finite path of the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub start: Site,
    pub steps: Vec<u8>,
    pub local_times: LocalTimeProfile,
    pub stop: StopReason,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn censored(&self) -> bool {
        self.stop == StopReason::Capped
    }

    pub fn end(&self) -> Site {
        let mut s = self.start.clone();
        self.steps.iter().for_each(|&k| s.step(k as usize));
        s
    }

    /// `S_0, …, S_N`.
    pub fn positions(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut s = self.start.clone();
        out.push(s.clone());
        for &k in &self.steps {
            s.step(k as usize);
            out.push(s.clone());
        }
        out
    }
}

/// Outcome of a passage run without the step record.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageOutcome {
    pub steps: usize,
    pub end: Site,
    pub stop: StopReason,
}

/// Runs the walk from `start` under `kernel` until `S_k · ℓ ≥ n` or `cap`
/// steps, writing local times of `S_0..S_{T-1}` into `profile` and each
/// step into `record` when given.
#[allow(clippy::too_many_arguments)]
pub fn run_passage<R: Rng + ?Sized>(
    start: &Site,
    ell: &Direction,
    n: i64,
    cap: usize,
    kernel: &StepKernel,
    rng: &mut R,
    profile: &mut LocalTimeProfile,
    mut record: Option<&mut Vec<u8>>,
) -> PassageOutcome {
    profile.clear();
    let mut pos = start.clone();
    let mut steps = 0usize;
    loop {
        if ell.crossed(&pos, n) {
            return PassageOutcome {
                steps,
                end: pos,
                stop: StopReason::Crossed,
            };
        }
        if steps >= cap {
            return PassageOutcome {
                steps,
                end: pos,
                stop: StopReason::Capped,
            };
        }
        profile.visit(&pos);
        let k = kernel.sample(rng);
        if let Some(r) = record.as_deref_mut() {
            r.push(k as u8);
        }
        pos.step(k);
        steps += 1;
    }
}

/// Simple random walk from `start` stopped at `T_n(ℓ) = inf{k : S_k·ℓ ≥ n}`
/// or after `cap` steps. Local times exclude the final site.
pub fn first_passage<R: Rng + ?Sized>(
    start: &Site,
    ell: &Direction,
    n: i64,
    rng: &mut R,
    cap: usize,
) -> Result<WalkPath> {
    if start.dim() != ell.dim() {
        return Err(Error::invalid("start and direction dimensions differ"));
    }
    let mut profile = LocalTimeProfile::new();
    let mut steps = Vec::new();
    let kernel = StepKernel::uniform(start.dim());
    let out = run_passage(start, ell, n, cap, &kernel, rng, &mut profile, Some(&mut steps));
    Ok(WalkPath {
        start: start.clone(),
        steps,
        local_times: profile,
        stop: out.stop,
    })
}

/// First exit of the walk from the closed ball `{x : |x - start| ≤ radius}`:
/// returns `(S_τ, τ)`.
pub fn exit_ball<R: Rng + ?Sized>(start: &Site, radius: f64, rng: &mut R) -> Result<(Site, usize)> {
    if !(radius >= 1.0 && radius.is_finite()) {
        return Err(Error::invalid("exit radius must be at least 1"));
    }
    let r2 = radius * radius;
    let d = start.dim();
    let mut disp = vec![0i64; d];
    let mut norm2 = 0i64;
    let mut t = 0usize;
    loop {
        let k = rng.random_range(0..2 * d);
        let s = if k & 1 == 0 { 1 } else { -1 };
        let c = &mut disp[k >> 1];
        norm2 += 2 * s * *c + 1;
        *c += s;
        t += 1;
        if norm2 as f64 > r2 {
            let exit: SmallVec<[i64; 4]> = start.coords().iter().zip(&disp).map(|(a, b)| a + b).collect();
            return Ok((Site(exit), t));
        }
    }
}

/// Exit times from successive balls: `j_0 = 0` and `j_{m+1}` is the first
/// `k > j_m` with `S_k ∉ D(S_{j_m}, radius)`.
pub fn coarse_grain(path: &[Site], radius: f64) -> Vec<usize> {
    let mut out = vec![0];
    let Some(first) = path.first() else {
        return out;
    };
    let r2 = radius * radius;
    let mut center = first;
    for (k, s) in path.iter().enumerate().skip(1) {
        if s.dist2(center) as f64 > r2 {
            out.push(k);
            center = s;
        }
    }
    out
}

/// Number of completed coarse-graining steps at scale `small` before the
/// walk leaves `D(0, big)`: the largest `m` with `j_m < τ`.
pub fn coarse_steps_before_exit<R: Rng + ?Sized>(d: usize, big: f64, small: f64, rng: &mut R) -> Result<usize> {
    if !(big >= small && small >= 1.0) {
        return Err(Error::invalid("need 1 <= small radius <= big radius"));
    }
    let (b2, s2) = (big * big, small * small);
    let mut pos = vec![0i64; d];
    let mut center = vec![0i64; d];
    let mut norm2 = 0i64;
    let mut m = 0usize;
    loop {
        let k = rng.random_range(0..2 * d);
        let s = if k & 1 == 0 { 1 } else { -1 };
        let c = &mut pos[k >> 1];
        norm2 += 2 * s * *c + 1;
        *c += s;
        if norm2 as f64 > b2 {
            return Ok(m);
        }
        let dc: i64 = pos.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        if dc as f64 > s2 {
            m += 1;
            center.copy_from_slice(&pos);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn direction_validation() {
        assert!(Direction::new(&[1.0, 0.0, 0.0]).unwrap().as_axis() == Some((0, 1)));
        assert!(Direction::new(&[0.0, -1.0, 0.0]).unwrap().as_axis() == Some((1, -1)));
        assert!(Direction::new(&[1.0, 1.0, 0.0]).is_err());
        let diag = Direction::normalized(&[1.0, 1.0, 1.0]).unwrap();
        assert!(diag.as_axis().is_none());
        assert!((diag.project(&Site::new(&[1, 1, 1])) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn forced_first_step_crosses_at_one() {
        // a kernel that always steps +e_1 plays the role of a forced rng
        let kernel = StepKernel::from_weights(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = stream_rng(1, 0, 0);
        let mut prof = LocalTimeProfile::new();
        let ell = Direction::axis(3, 0);
        let out = run_passage(&Site::origin(3), &ell, 1, 100, &kernel, &mut rng, &mut prof, None);
        assert_eq!(out.steps, 1);
        assert_eq!(out.stop, StopReason::Crossed);
        assert_eq!(prof.counts.get(&Site::origin(3)), Some(&1));
        assert_eq!(prof.horizon, 1);
    }

    #[test]
    fn zero_distance_is_already_crossed() {
        let mut rng = stream_rng(2, 0, 0);
        let p = first_passage(&Site::origin(3), &Direction::axis(3, 0), 0, &mut rng, 10).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.local_times.horizon, 0);
        assert_eq!(p.stop, StopReason::Crossed);
    }

    #[test]
    fn cap_censors() {
        let mut rng = stream_rng(3, 0, 0);
        let p = first_passage(&Site::origin(3), &Direction::axis(3, 0), 1000, &mut rng, 50).unwrap();
        assert!(p.censored());
        assert_eq!(p.len(), 50);
        assert_eq!(p.local_times.horizon, 50);
    }

    #[test]
    fn passage_cdf_matches_enumeration() {
        // exhaustive P[T_2 <= k] for k <= 8 versus sampled frequencies
        let ell = Direction::axis(3, 0);
        let exact = crate::oracle::passage_time_cdf(&ell, 2, 8).unwrap();
        let mut rng = stream_rng(4, 0, 0);
        let n = 100_000;
        let mut hits = [0usize; 9];
        for _ in 0..n {
            let p = first_passage(&Site::origin(3), &ell, 2, &mut rng, 8).unwrap();
            if !p.censored() {
                for h in hits.iter_mut().skip(p.len()) {
                    *h += 1;
                }
            }
        }
        for k in 0..=8 {
            let freq = hits[k] as f64 / n as f64;
            let sd = (exact[k] * (1.0 - exact[k]) / n as f64).sqrt().max(1e-9);
            assert!((freq - exact[k]).abs() <= 4.0 * sd, "k={k}: {freq} vs {}", exact[k]);
        }
    }

    #[test]
    fn unit_radius_exit_is_strict() {
        // |x| = 1 is still inside; the exit lands at norm² 2 or 4 after an
        // even number of steps
        let mut rng = stream_rng(5, 0, 0);
        for _ in 0..100 {
            let (x, t) = exit_ball(&Site::origin(3), 1.0, &mut rng).unwrap();
            assert!(t >= 2 && t % 2 == 0);
            assert!(x.norm2() == 2 || x.norm2() == 4);
        }
    }

    #[test]
    fn coarse_grain_examples() {
        let straight: Vec<Site> = (0..=30).map(|k| Site::new(&[k, 0, 0])).collect();
        // independent scan: exits happen every floor(R)+1 steps
        let r = 4.5;
        let idx = coarse_grain(&straight, r);
        let step = r.floor() as usize + 1;
        let expected: Vec<usize> = (0..=30).step_by(step).collect();
        assert_eq!(idx, expected);
        assert_eq!(coarse_grain(&straight[..4], 10.0), vec![0]);
        assert_eq!(coarse_grain(&straight, 100.0), vec![0]);
    }

    #[test]
    fn tilted_kernel_probabilities() {
        let k = StepKernel::from_weights(&[3.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((k.probability(0) - 3.0 / 8.0).abs() < 1e-15);
        let total: f64 = (0..6).map(|i| k.probability(i)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn local_times_total_the_stopping_time(seed in 0u64..1000, n in 0i64..6) {
            let mut rng = stream_rng(seed, 9, 0);
            let p = first_passage(&Site::origin(3), &Direction::axis(3, 0), n, &mut rng, 5000).unwrap();
            prop_assert_eq!(p.local_times.horizon, p.len());
            let total: u32 = p.local_times.counts.values().sum();
            prop_assert_eq!(total as usize, p.len());
            let pos = p.positions();
            for w in pos.windows(2) {
                prop_assert_eq!(w[0].dist2(&w[1]), 1);
            }
            if !p.censored() {
                prop_assert!(pos.last().unwrap().coords()[0] >= n);
                prop_assert!(pos[..pos.len() - 1].iter().all(|s| s.coords()[0] < n));
            }
        }

        #[test]
        fn coarse_grain_is_increasing_and_pure(seed in 0u64..500, r in 1.0f64..6.0) {
            let mut rng = stream_rng(seed, 10, 0);
            let p = first_passage(&Site::origin(3), &Direction::axis(3, 0), 8, &mut rng, 2000).unwrap();
            let pos = p.positions();
            let a = coarse_grain(&pos, r);
            prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(a, coarse_grain(&pos, r));
        }
    }
}
