//! The acceptance battery: thirteen pass/fail checks with tolerances,
//! sample sizes and seeds fixed here.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{sample_field, transform_log, PotentialSpec, Region};
use crate::error::Result;
use crate::fk_mc::{estimate_decay, estimate_e, estimate_quenched, make_tilt, McOptions, QuenchedOptions};
use crate::green::{averaged_green_decay, fk_equivalence_check, GreenDecayOptions};
use crate::lattice_walk::{
    coarse_steps_before_exit, escape_prob, exit_ball, green_constant, hitting_prob_exact, Direction, EscapeMethod, Site,
};
use crate::numerics::stats::{mean_se, Z95};
use crate::oracle::{enumerate_surgeries, exact_binomial_tail, exact_e_small};
use crate::par::{self, stream_rng};
use crate::theory::{
    chernoff_upper, classify_case, default_cutoff, f_unchecked, frak_i, mobility_edge_integral, psi_p, psi_p_sup,
    riemann_split, surgery_binomial, surgery_count_bound, CaseLabel, Side, SplitResult, Q3,
};

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Identifiers and short names of the criteria.
pub const CRITERIA: [(u8, &str); 13] = [
    (1, "escape probability q3"),
    (2, "f-function suite"),
    (3, "rate function and Chernoff bounds"),
    (4, "surgery counting"),
    (5, "Riemann and geometric splitting"),
    (6, "hitting probability in a ball"),
    (7, "exit geometry and coarse steps"),
    (8, "mobility edge and Feynman-Kac identity"),
    (9, "estimators inside the enumeration bracket"),
    (10, "annealed rate, heavy tail"),
    (11, "annealed rate, finite mean"),
    (12, "averaged Green decay"),
    (13, "annealed above quenched"),
];

/// Runs criterion `id` with master seed `seed`.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown")
        .to_string();
    let start = Instant::now();
    let s = par::derive_seed(seed, 0x00ac_ce97, id as u64);
    let outcome = match id {
        1 => escape_q3(s),
        2 => f_suite(),
        3 => chernoff_suite(),
        4 => surgery_suite(),
        5 => splitting_suite(s),
        6 => hitting_suite(),
        7 => exit_suite(s),
        8 => identity_suite(s),
        9 => bracket_suite(s),
        10 => heavy_tail_rate(s),
        11 => finite_mean_rate(s),
        12 => green_decay(s),
        13 => jensen_suite(s),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every criterion in order, calling `report` after each one.
pub fn run_all(seed: u64, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, _)| {
            let r = run_criterion(id, seed);
            report(&r);
            r
        })
        .collect()
}

type Outcome = Result<(bool, String)>;

fn escape_q3(seed: u64) -> Outcome {
    let quad = escape_prob(3, EscapeMethod::Quadrature)?;
    let mc = escape_prob(
        3,
        EscapeMethod::MonteCarlo {
            walks: 10_000_000,
            radius: 12.0,
            seed,
        },
    )?;
    let ok = (quad.value - 0.6595).abs() <= 1e-3 && (quad.value - mc.value).abs() <= 3e-3;
    Ok((
        ok,
        format!(
            "quadrature {:.10} (err {:.1e}), Monte Carlo {:.5} ± {:.5}",
            quad.value, quad.uncertainty, mc.value, mc.uncertainty
        ),
    ))
}

fn f_suite() -> Outcome {
    let q = escape_prob(3, EscapeMethod::Quadrature)?.value;
    let zs: Vec<f64> = (0..1000).map(|i| 10f64.powf(-6.0 + 9.0 * i as f64 / 999.0)).collect();
    let fs: Vec<f64> = zs.iter().map(|&z| f_unchecked(z, q)).collect();
    let monotone = fs.windows(2).all(|w| w[1] >= w[0]);
    // concavity on a nonuniform grid: successive slopes do not increase
    let slopes: Vec<f64> = (1..zs.len())
        .map(|i| (fs[i] - fs[i - 1]) / (zs[i] - zs[i - 1]))
        .collect();
    let worst_convexity = slopes.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let concave = slopes.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    let bounded = zs.iter().zip(&fs).all(|(&z, &f)| f <= z.min(q));
    let small = zs
        .iter()
        .zip(&fs)
        .filter(|(&z, _)| z <= 1e-3)
        .all(|(&z, &f)| (f / z - 1.0).abs() <= z / q);
    Ok((
        monotone && concave && bounded && small,
        format!(
            "monotone {monotone}, concave {concave} (largest slope increase {worst_convexity:.2e}), f <= min(z,q) {bounded}, small-z ratio {small}"
        ),
    ))
}

fn chernoff_suite() -> Outcome {
    let mut max_gap: f64 = 0.0;
    let mut quad_ok = true;
    for i in 0..20 {
        let p = 0.025 + 0.95 * i as f64 / 19.0;
        for j in 0..20 {
            let eta = -p + (1.0 - 1e-9) * j as f64 / 19.0;
            let eta = eta.min(1.0 - p);
            let a = psi_p(p, eta)?;
            let b = psi_p_sup(p, eta)?;
            max_gap = max_gap.max((a - b).abs());
            let e = (p * j as f64 / 19.0).min(p);
            quad_ok &= psi_p(p, -e)? >= e * e / (2.0 * p) - 1e-15;
        }
    }
    let mut tail_ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=30u64 {
        for &p in &[0.1, 0.25, 0.5, 0.7, 0.9] {
            for k in 0..=n {
                let frac = k as f64 / n as f64;
                let (side, eta) = if frac >= p {
                    (Side::Upper, frac - p)
                } else {
                    (Side::Lower, p - frac)
                };
                let exact = exact_binomial_tail(n, p, k, side)?;
                let bound = chernoff_upper(n, p, eta, side)?;
                tail_ok &= exact <= bound * (1.0 + 1e-12);
                worst_ratio = worst_ratio.max(exact / bound);
                cases += 1;
            }
        }
    }
    Ok((
        max_gap <= 1e-9 && tail_ok && quad_ok,
        format!(
            "closed vs sup form max gap {max_gap:.2e} on 20x20; {cases} binomial tails, largest exact/bound {worst_ratio:.4}; quadratic lower bound {quad_ok}"
        ),
    ))
}

fn surgery_suite() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for k in 0..=12u64 {
        for j in 0..=4u64 {
            let count = enumerate_surgeries(k, j)?;
            let closed = surgery_binomial(k, 2 * j);
            let log_bound = surgery_count_bound(k as f64, j as f64, 1.0)?;
            ok &= count as f64 == closed && (count as f64).ln() <= log_bound + 1e-12;
            if count > 0 && log_bound > 0.0 {
                worst = worst.max((count as f64).ln() / log_bound);
            }
        }
    }
    Ok((
        ok,
        format!("K <= 12, j <= 4: counts equal C(K+2j, 2j); largest log-count / log-bound {worst:.3}"),
    ))
}

fn splitting_suite(seed: u64) -> Outcome {
    let mut rng = stream_rng(seed, 5, 0);
    let mut riemann_ok = true;
    let mut riemann_cases = 0;
    let mut worst_riemann = f64::INFINITY;
    let mut case2_ok = true;
    let mut case2_cases = 0;
    let mut worst_case2 = f64::INFINITY;
    for &eps in &[0.05, 0.1, 0.2] {
        for _ in 0..8 {
            // heavy and light tails at random scales, plus random atoms
            let beta = 10f64.powf(rng.random_range(-3.0..-0.5));
            let mu = match rng.random_range(0..3) {
                0 => PotentialSpec::pareto(rng.random_range(0.2..1.5), rng.random_range(0.5..5.0)),
                1 => PotentialSpec::Exponential {
                    rate: rng.random_range(0.1..3.0),
                },
                _ => {
                    let k = rng.random_range(2..6);
                    let raw: Vec<(f64, f64)> = (0..k)
                        .map(|_| (10f64.powf(rng.random_range(-1.0..3.0)), rng.random_range(0.05..1.0)))
                        .collect();
                    let total: f64 = raw.iter().map(|a| a.1).sum();
                    normalized_atoms(raw.iter().map(|a| (a.0, a.1 / total)).collect())
                }
            };
            let s = riemann_split(beta, &mu, Q3, eps, default_cutoff(eps))?;
            let ratio = s.i_beta / s.i_important;
            riemann_ok &= s.i_beta >= (1.0 - eps).powi(2) * s.i_important * (1.0 - 1e-9);
            worst_riemann = worst_riemann.min(ratio / (1.0 - eps).powi(2));
            riemann_cases += 1;

            let (mu2, beta2) = case_two_instance(&mut rng, eps);
            let c = classify_case(beta2, &mu2, Q3, eps, None)?;
            let split = SplitResult::compute(beta2, &mu2, Q3, eps, default_cutoff(eps))?;
            let fi = frak_i(beta2, &mu2, Q3)?;
            let r = split.i_tilde / fi;
            case2_ok &= c.label == CaseLabel::Both && split.i_tilde >= (1.0 - 5.0 * eps) * fi;
            worst_case2 = worst_case2.min(r / (1.0 - 5.0 * eps));
            case2_cases += 1;
        }
    }
    Ok((
        riemann_ok && case2_ok,
        format!(
            "{riemann_cases} laws: min I/((1-e)^2 frakI) = {worst_riemann:.4}; {case2_cases} two-range instances: min Itilde/((1-5e) F) = {worst_case2:.4}"
        ),
    ))
}

fn normalized_atoms(mut atoms: Vec<(f64, f64)>) -> PotentialSpec {
    let s: f64 = atoms.iter().map(|a| a.1).sum();
    atoms[0].1 += 1.0 - s;
    PotentialSpec::atoms(&atoms)
}

/// Atoms with `βz` in `[a/6, a/2]` (intermediate) and in `[2, 50]`
/// (important) whose two integrals are within a factor of two.
fn case_two_instance<R: Rng>(rng: &mut R, eps: f64) -> (PotentialSpec, f64) {
    let a = default_cutoff(eps);
    let beta = 10f64.powf(rng.random_range(-3.0..-1.0));
    let mut atoms = vec![(0.0, 0.0)];
    let mut inter = 0.0;
    for _ in 0..rng.random_range(1..4) {
        let x = a * rng.random_range(1.0 / 6.0..0.5);
        let m = rng.random_range(0.02..0.1);
        inter += m * f_unchecked(x, Q3);
        atoms.push((x / beta, m));
    }
    let k = rng.random_range(1..4);
    let ys: Vec<f64> = (0..k).map(|_| rng.random_range(2.0..50.0)).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let target = inter * rng.random_range(0.5..2.0);
    let scale = target / ys.iter().zip(&raw).map(|(y, m)| m * f_unchecked(*y, Q3)).sum::<f64>();
    for (y, m) in ys.iter().zip(&raw) {
        atoms.push((y / beta, m * scale));
    }
    (normalized_atoms(atoms), beta)
}

fn hitting_suite() -> Outcome {
    let radius = 40.0;
    let c3 = green_constant(3)?;
    let q3 = escape_prob(3, EscapeMethod::Quadrature)?.value;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for y in [
        Site::on_axis(3, 0, 8),
        Site::new(&[6, 6, 6]),
        Site::on_axis(3, 1, 12),
        Site::new(&[10, 10, 0]),
        Site::on_axis(3, 2, 16),
        Site::on_axis(3, 0, 20),
    ] {
        let h = hitting_prob_exact(&y, radius)?;
        let r = y.norm();
        let pred = c3 * q3 * (1.0 / r - 1.0 / radius);
        let rel = (h.probability / pred - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("|y|={r:.1}: {rel:.3}"));
    }
    Ok((worst <= 0.15, format!("relative deviations {}", parts.join(", "))))
}

fn exit_suite(seed: u64) -> Outcome {
    let ell = Direction::axis(3, 0);
    let samples = 100_000;
    let radius = 50.0;
    let blocks = 32;
    let per = samples / blocks;
    let vals: Vec<Result<Vec<f64>>> = par::map_indexed(par::Execution::Auto, blocks, |b| {
        let mut rng = stream_rng(seed, 7, b as u64);
        (0..per)
            .map(|_| {
                let (x, _) = exit_ball(&Site::origin(3), radius, &mut rng)?;
                Ok(ell.project(&x).powi(2) / (radius * radius))
            })
            .collect()
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let (m, se) = mean_se(&vals);
    let second_ok = (m * 3.0 - 1.0).abs() <= 0.05;

    let (big, small) = (60.0, 12.0);
    let walks = 4000;
    let counts: Vec<Result<Vec<f64>>> = par::map_indexed(par::Execution::Auto, blocks, |b| {
        let mut rng = stream_rng(seed, 77, b as u64);
        (0..walks / blocks)
            .map(|_| coarse_steps_before_exit(3, big, small, &mut rng).map(|c| c as f64))
            .collect()
    });
    let counts: Vec<f64> = counts.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let (cm, cse) = mean_se(&counts);
    let target = (big / small).powi(2);
    let count_ok = (cm / target - 1.0).abs() <= 0.1;
    Ok((
        second_ok && count_ok,
        format!(
            "E[(X.l)^2]/R^2 = {m:.4} ± {se:.4} (1/3 within 5%: {second_ok}); coarse steps {cm:.2} ± {cse:.2} vs (R/r)^2 = {target} ({count_ok})"
        ),
    ))
}

fn identity_suite(seed: u64) -> Outcome {
    let beta = 0.1;
    let atoms = PotentialSpec::atoms(&[(0.0, 0.2), (0.7, 0.3), (5.0, 0.3), (80.0, 0.2)]);
    let pareto = PotentialSpec::pareto(0.5, 1.0);
    let dev_atoms = {
        let l = mobility_edge_integral(beta, &atoms, Q3)?;
        let r = frak_i(beta, &transform_log(&atoms, beta)?, Q3)?;
        (l - r).abs()
    };
    let dev_pareto = {
        let l = mobility_edge_integral(beta, &pareto, Q3)?;
        let r = frak_i(beta, &transform_log(&pareto, beta)?, Q3)?;
        (l - r).abs()
    };
    let mu = PotentialSpec::atoms(&[(0.0, 0.3), (1.0, 0.4), (5.0, 0.3)]);
    let mut worst_fk: f64 = 0.0;
    let mut consistent = true;
    for k in 0..5 {
        let env = sample_field(&mu, &Region::cube(&Site::origin(3), 1), par::derive_seed(seed, 8, k))?;
        let c = fk_equivalence_check(&env, 0.5, &Site::origin(3), 400)?;
        worst_fk = worst_fk.max(c.max_deviation);
        consistent &= c.consistent(1e-13);
    }
    Ok((
        dev_atoms <= 1e-8 && dev_pareto <= 1e-6 && worst_fk <= 1e-6 && consistent,
        format!(
            "mobility identity deviation {dev_atoms:.1e} (atoms), {dev_pareto:.1e} (Pareto); solver vs series {worst_fk:.1e} on 3x3x3 boxes"
        ),
    ))
}

fn bracket_suite(seed: u64) -> Outcome {
    let mu = PotentialSpec::atoms(&[(0.0, 0.5), (3.0, 0.5)]);
    let beta = 0.5;
    let ell = Direction::axis(3, 0);
    let max_len = 11;
    let b = exact_e_small(beta, 2, &mu, &ell, max_len)?;
    let tilt = make_tilt(frak_i(beta, &mu, Q3)?, &ell)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, t) in [("untilted", None), ("tilted", Some(&tilt))] {
        // capped at the enumeration length the estimator targets the lower
        // end exactly; uncapped it targets e itself
        let capped = estimate_e(
            beta,
            2,
            &mu,
            &ell,
            t,
            &McOptions {
                cap: Some(max_len),
                ..McOptions::new(400_000, seed)
            },
        )?;
        let full = estimate_e(beta, 2, &mu, &ell, t, &McOptions::new(400_000, seed ^ 1))?;
        let (sc, sf) = (capped.standard_error(), full.standard_error());
        let c_ok = (capped.mean - b.lower).abs() <= 3.0 * sc;
        let f_ok = full.mean >= b.lower - 3.0 * sf && full.mean <= b.upper + 3.0 * sf;
        ok &= c_ok && f_ok;
        parts.push(format!(
            "{label}: capped {:.5} ± {sc:.5} vs lower {:.5}, full {:.5} ± {sf:.5} in [{:.5}, {:.5}]",
            capped.mean, b.lower, full.mean, b.lower, b.upper
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn heavy_tail_rate(seed: u64) -> Outcome {
    let beta = 0.05;
    let mu = PotentialSpec::pareto(0.5, 1.0);
    let ell = Direction::axis(3, 0);
    let fi = frak_i(beta, &mu, Q3)?;
    let tilt = make_tilt(fi, &ell)?;
    let ns: Vec<i64> = (8..=40).step_by(2).collect();
    let est = estimate_decay(beta, &ns, &mu, &ell, Some(&tilt), &McOptions::new(100_000, seed))?;
    let fit = est.fit.expect("seventeen points");
    let threshold = 0.75 * (6.0 * fi).sqrt();
    let ok = fit.alpha_hat >= threshold && est.censoring < 0.01 && fit.window_sensitivity < 0.1;
    Ok((
        ok,
        format!(
            "alpha_hat {:.4} ± {:.4} vs 0.75 sqrt(6F) = {threshold:.4}; censoring {:.2e}; window sensitivity {:.3}",
            fit.alpha_hat, fit.alpha_se, est.censoring, fit.window_sensitivity
        ),
    ))
}

fn finite_mean_rate(seed: u64) -> Outcome {
    let mu = PotentialSpec::Exponential { rate: 1.0 };
    let ell = Direction::axis(3, 0);
    let ns: Vec<i64> = (8..=40).step_by(2).collect();
    let mut ratios = Vec::new();
    let mut ok = true;
    for &beta in &[0.05, 0.02] {
        let tilt = make_tilt(frak_i(beta, &mu, Q3)?, &ell)?;
        let est = estimate_decay(beta, &ns, &mu, &ell, Some(&tilt), &McOptions::new(100_000, seed))?;
        let fit = est.fit.expect("seventeen points");
        let r = fit.alpha_hat / (6.0 * beta).sqrt();
        ok &= (0.7..=1.3).contains(&r) && est.censoring < 0.01;
        ratios.push((beta, r, fit.alpha_hat, fit.alpha_se));
    }
    ok &= (ratios[1].1 - 1.0).abs() < (ratios[0].1 - 1.0).abs();
    Ok((
        ok,
        ratios
            .iter()
            .map(|(b, r, a, se)| format!("beta {b}: alpha_hat {a:.4} ± {se:.4}, ratio {r:.4}"))
            .collect::<Vec<_>>()
            .join("; "),
    ))
}

fn green_decay(seed: u64) -> Outcome {
    let beta = 0.05;
    let mu = PotentialSpec::pareto(0.5, 1.0);
    let ell = Direction::axis(3, 0);
    let fbar = mobility_edge_integral(beta, &mu, Q3)?;
    let ns: Vec<i64> = (4..=24).collect();
    let dec = averaged_green_decay(&mu, beta, &ell, &ns, &GreenDecayOptions::new(400, 12, seed))?;
    let fit = dec.doubled.fit.expect("twenty-one points");
    let threshold = 0.75 * (6.0 * fbar).sqrt();
    let ok = fit.alpha_hat >= threshold && !dec.truncation_flag;
    Ok((
        ok,
        format!(
            "alpha_hat {:.4} ± {:.4} vs 0.75 sqrt(6 Fbar) = {threshold:.4}; margin-doubling shift {:.4} (95% CI half-width {:.4})",
            fit.alpha_hat,
            fit.alpha_se,
            dec.margin_shift,
            Z95 * fit.alpha_se
        ),
    ))
}

fn jensen_suite(seed: u64) -> Outcome {
    let mu = PotentialSpec::pareto(0.5, 1.0);
    let ell = Direction::axis(3, 0);
    let mut ok = true;
    let mut parts = Vec::new();
    for &beta in &[0.05, 0.2] {
        let tilt = make_tilt(frak_i(beta, &mu, Q3)?, &ell)?;
        for &n in &[4i64, 8] {
            let ann = estimate_e(
                beta,
                n,
                &mu,
                &ell,
                Some(&tilt),
                &McOptions::new(100_000, seed ^ n as u64),
            )?;
            let q = estimate_quenched(beta, n, &mu, &ell, &QuenchedOptions::new(24, seed))?;
            let geo = q.geometric_mean();
            let sigma = (ann.standard_error().powi(2) + (geo * q.se_log_u).powi(2)).sqrt();
            ok &= ann.mean - geo >= -3.0 * sigma && q.failed == 0;
            parts.push(format!("beta {beta} n {n}: {:.3e} vs {geo:.3e}", ann.mean));
        }
    }
    Ok((ok, parts.join("; ")))
}

/// Asymptotic return correction used by criterion 6, exposed for reports.
pub fn hitting_prediction(y: &Site, radius: f64, q: f64) -> Result<f64> {
    let c = green_constant(y.dim())?;
    let r = y.norm();
    let d = y.dim() as f64;
    Ok(c * q * (r.powf(2.0 - d) - radius.powf(2.0 - d)))
}
