//! One function per subcommand. Each validates its section, runs the
//! library, writes its tables through a [`Sink`] and prints a summary.

use std::fmt;

use serde::Serialize;

use rwrp_core::acceptance::{run_criterion, CriterionResult, CRITERIA};
use rwrp_core::environment::{sample_field, Region};
use rwrp_core::fk_mc::{estimate_decay, make_tilt, McOptions};
use rwrp_core::green::{averaged_green_decay, fk_equivalence_check, GreenDecayOptions, GreenSeries};
use rwrp_core::lattice_walk::{escape_prob, Direction, EscapeMethod, Site};
use rwrp_core::oracle::exact_e_small;
use rwrp_core::par::derive_seed;
use rwrp_core::theory::{
    classify_case, default_cutoff, f_eval, frak_i, mobility_edge_integral, optimal_speed, scales, CaseLabel,
    SplitResult,
};

use crate::config::{require_betas, require_ns, ExperimentConfig};
use crate::output::Sink;

const TAG_MC: u64 = 0x6d63;
const TAG_GREEN: u64 = 0x6772;
const TAG_FK: u64 = 0x666b;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    TestFailure(String),
    Numerical(String),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::TestFailure(_) => 2,
            CmdError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(m) => write!(f, "usage error: {m}"),
            CmdError::TestFailure(m) => write!(f, "test failure: {m}"),
            CmdError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<rwrp_core::Error> for CmdError {
    fn from(e: rwrp_core::Error) -> Self {
        if e.is_numerical() {
            CmdError::Numerical(e.to_string())
        } else {
            CmdError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Usage(format!("output: {e}"))
    }
}

type CmdResult = Result<(), CmdError>;

fn usage(msg: String) -> CmdError {
    CmdError::Usage(msg)
}

fn escape_q(d: usize) -> Result<f64, CmdError> {
    Ok(escape_prob(d, EscapeMethod::Quadrature)?.value)
}

#[derive(Serialize)]
struct FRow {
    z: f64,
    f: f64,
}

#[derive(Serialize)]
struct TheoryRow {
    beta: f64,
    d: usize,
    q: f64,
    frak_i: f64,
    mobility_edge: f64,
    epsilon: f64,
    a: f64,
    i_beta: f64,
    i_important: f64,
    i_prime: f64,
    i_intermediate: f64,
    i_tilde: f64,
    case: CaseLabel,
    m_beta: f64,
    kappa: usize,
    grid_capped: bool,
    l_hat: Option<f64>,
    l: Option<f64>,
    r_prime: Option<f64>,
    r: Option<f64>,
    big_r: Option<f64>,
    scales_ordered: Option<bool>,
    v_star: f64,
    cost_star: f64,
}

pub fn theory(cfg: &ExperimentConfig, sink: &Sink) -> CmdResult {
    let t = &cfg.theory;
    require_betas("theory", &t.betas)?;
    if t.f_points < 2 || !(t.f_z_min > 0.0 && t.f_z_max > t.f_z_min) {
        return Err(usage(
            "theory f table needs f_points >= 2 and 0 < f_z_min < f_z_max".into(),
        ));
    }
    let d = cfg.run.d;
    let q = escape_q(d)?;
    let ratio = (t.f_z_max / t.f_z_min).ln();
    let f_rows = (0..t.f_points)
        .map(|i| {
            let z = t.f_z_min * (ratio * i as f64 / (t.f_points - 1) as f64).exp();
            Ok(FRow { z, f: f_eval(z, q)? })
        })
        .collect::<Result<Vec<_>, CmdError>>()?;
    sink.write("theory_f", &f_rows)?;

    let a = default_cutoff(t.epsilon);
    let mut rows = Vec::new();
    for &beta in &t.betas {
        let fi = frak_i(beta, &cfg.potential, q)?;
        let split = SplitResult::compute(beta, &cfg.potential, q, t.epsilon, a)?;
        let class = classify_case(beta, &cfg.potential, q, t.epsilon, Some(a))?;
        let sc = if split.important.degenerate {
            None
        } else {
            scales(&split.important, q, t.delta, d).ok()
        };
        let speed = optimal_speed(fi, d)?;
        rows.push(TheoryRow {
            beta,
            d,
            q,
            frak_i: fi,
            mobility_edge: mobility_edge_integral(beta, &cfg.potential, q)?,
            epsilon: t.epsilon,
            a,
            i_beta: split.important.i_beta,
            i_important: split.important.i_important,
            i_prime: split.intermediate.i_prime,
            i_intermediate: split.intermediate.i_intermediate,
            i_tilde: split.i_tilde,
            case: class.label,
            m_beta: split.m_beta.m_beta,
            kappa: split.important.kappa(),
            grid_capped: split.important.grid_capped,
            l_hat: sc.map(|s| s.l_hat),
            l: sc.map(|s| s.l),
            r_prime: sc.map(|s| s.r_prime),
            r: sc.map(|s| s.r),
            big_r: sc.map(|s| s.big_r),
            scales_ordered: sc.map(|s| s.ordered),
            v_star: speed.v_star,
            cost_star: speed.cost_star,
        });
    }
    sink.write("theory", &rows)?;
    println!("q_{d} = {q:.12}");
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>18} {:>10}",
        "beta", "F", "I_beta", "I_tilde", "case", "cost*"
    );
    for r in &rows {
        println!(
            "{:>8} {:>12.5e} {:>12.5e} {:>12.5e} {:>18} {:>10.5}",
            r.beta,
            r.frak_i,
            r.i_beta,
            r.i_tilde,
            format!("{:?}", r.case),
            r.cost_star
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct QdRow {
    d: usize,
    method: &'static str,
    value: f64,
    uncertainty: f64,
    walks: Option<u64>,
    radius: Option<f64>,
}

pub fn qd(cfg: &ExperimentConfig, sink: &Sink) -> CmdResult {
    let s = &cfg.qd;
    if s.dims.is_empty() || s.dims.iter().any(|&d| d < 3) {
        return Err(usage("qd.dims must be a nonempty list of dimensions >= 3".into()));
    }
    let mut rows = Vec::new();
    for &d in &s.dims {
        let quad = escape_prob(d, EscapeMethod::Quadrature)?;
        rows.push(QdRow {
            d,
            method: "quadrature",
            value: quad.value,
            uncertainty: quad.uncertainty,
            walks: None,
            radius: None,
        });
        if s.walks > 0 {
            let mc = escape_prob(
                d,
                EscapeMethod::MonteCarlo {
                    walks: s.walks,
                    radius: s.radius,
                    seed: derive_seed(cfg.run.seed, d as u64, 0),
                },
            )?;
            rows.push(QdRow {
                d,
                method: "monte_carlo",
                value: mc.value,
                uncertainty: mc.uncertainty,
                walks: Some(s.walks),
                radius: Some(s.radius),
            });
        }
    }
    sink.write("qd", &rows)?;
    for r in &rows {
        println!("q_{} {:<12} {:.10} ± {:.2e}", r.d, r.method, r.value, r.uncertainty);
    }
    Ok(())
}

#[derive(Serialize)]
struct McRow {
    beta: f64,
    n: i64,
    mean: f64,
    ci_lo: f64,
    ci_hi: f64,
    log_mean: f64,
    log_se: f64,
    samples: u64,
    censored: u64,
    mean_steps: f64,
    lambda: f64,
    stream_seed: u64,
}

#[derive(Serialize)]
struct McFitRow {
    beta: f64,
    frak_i: f64,
    alpha_hat: Option<f64>,
    alpha_se: Option<f64>,
    alpha_all: Option<f64>,
    window_sensitivity: Option<f64>,
    unstable: Option<bool>,
    censoring: f64,
    /// `(1 - ε) √(2dF)`.
    lower_reference: f64,
    /// `√(2dβE[V])`, when the mean is finite.
    mean_reference: Option<f64>,
}

pub fn mc(cfg: &ExperimentConfig, sink: &Sink) -> CmdResult {
    let s = &cfg.mc;
    require_betas("mc", &s.betas)?;
    require_ns("mc", &s.ns)?;
    if s.samples == 0 {
        return Err(usage("mc.samples must be positive".into()));
    }
    let d = cfg.run.d;
    let q = escape_q(d)?;
    let ell = Direction::axis(d, 0);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (k, &beta) in s.betas.iter().enumerate() {
        let fi = frak_i(beta, &cfg.potential, q)?;
        let tilt = if s.tilt { Some(make_tilt(fi, &ell)?) } else { None };
        let opts = McOptions {
            cap: s.cap,
            ..McOptions::new(s.samples, derive_seed(cfg.run.seed, TAG_MC, k as u64))
        };
        let est = estimate_decay(beta, &s.ns, &cfg.potential, &ell, tilt.as_ref(), &opts)?;
        for p in &est.points {
            rows.push(McRow {
                beta,
                n: p.n,
                mean: p.mean,
                ci_lo: p.ci_lo,
                ci_hi: p.ci_hi,
                log_mean: p.log_mean,
                log_se: p.log_se,
                samples: p.samples,
                censored: p.censored,
                mean_steps: p.mean_steps,
                lambda: p.lambda,
                stream_seed: p.seed,
            });
        }
        let df = d as f64;
        fits.push(McFitRow {
            beta,
            frak_i: fi,
            alpha_hat: est.fit.map(|f| f.alpha_hat),
            alpha_se: est.fit.map(|f| f.alpha_se),
            alpha_all: est.fit.map(|f| f.alpha_all),
            window_sensitivity: est.fit.map(|f| f.window_sensitivity),
            unstable: est.fit.map(|f| f.unstable),
            censoring: est.censoring,
            lower_reference: (1.0 - s.epsilon) * (2.0 * df * fi).sqrt(),
            mean_reference: cfg.potential.mean().map(|m| (2.0 * df * beta * m).sqrt()),
        });
    }
    sink.write("mc", &rows)?;
    sink.write("mc_fit", &fits)?;
    for f in &fits {
        match f.alpha_hat {
            Some(a) => println!(
                "beta {}: alpha_hat {:.5} ± {:.5} vs (1-eps) sqrt(2dF) = {:.5}{}; censoring {:.2e}",
                f.beta,
                a,
                f.alpha_se.unwrap_or(f64::NAN),
                f.lower_reference,
                f.mean_reference
                    .map(|m| format!(", sqrt(2d beta E[V]) = {m:.5}"))
                    .unwrap_or_default(),
                f.censoring
            ),
            None => println!("beta {}: fewer than four distances, no rate fit", f.beta),
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GreenRow {
    beta: f64,
    margin: i64,
    n: i64,
    mean: f64,
    se: f64,
}

#[derive(Serialize)]
struct GreenFitRow {
    beta: f64,
    margin: i64,
    sites: usize,
    failed: usize,
    alpha_hat: Option<f64>,
    alpha_se: Option<f64>,
    margin_shift: f64,
    truncation_flag: bool,
    mobility_edge: f64,
    /// `√(2d F̄)` with `F̄` the mobility-edge integral.
    reference: f64,
}

#[derive(Serialize)]
struct FkRow {
    beta: f64,
    box_index: usize,
    terms: usize,
    max_deviation: f64,
    tail_bound: f64,
    solver_residual: f64,
    consistent: bool,
}

pub fn green(cfg: &ExperimentConfig, sink: &Sink) -> CmdResult {
    let s = &cfg.green;
    require_betas("green", &s.betas)?;
    require_ns("green", &s.ns)?;
    if s.environments == 0 || s.margin < 1 {
        return Err(usage("green needs environments >= 1 and margin >= 1".into()));
    }
    let d = cfg.run.d;
    let q = escape_q(d)?;
    let ell = Direction::axis(d, 0);
    let origin = Site::origin(d);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut fk_rows = Vec::new();
    for (k, &beta) in s.betas.iter().enumerate() {
        let opts = GreenDecayOptions {
            tol: s.tol,
            ..GreenDecayOptions::new(s.environments, s.margin, derive_seed(cfg.run.seed, TAG_GREEN, k as u64))
        };
        let dec = averaged_green_decay(&cfg.potential, beta, &ell, &s.ns, &opts)?;
        let fbar = mobility_edge_integral(beta, &cfg.potential, q)?;
        let push = |series: &GreenSeries, rows: &mut Vec<GreenRow>, fits: &mut Vec<GreenFitRow>| {
            rows.extend(series.points.iter().map(|p| GreenRow {
                beta,
                margin: series.margin,
                n: p.n,
                mean: p.mean,
                se: p.se,
            }));
            fits.push(GreenFitRow {
                beta,
                margin: series.margin,
                sites: series.sites,
                failed: series.failed,
                alpha_hat: series.fit.map(|f| f.alpha_hat),
                alpha_se: series.fit.map(|f| f.alpha_se),
                margin_shift: dec.margin_shift,
                truncation_flag: dec.truncation_flag,
                mobility_edge: fbar,
                reference: (2.0 * d as f64 * fbar).sqrt(),
            });
        };
        push(&dec.base, &mut rows, &mut fits);
        push(&dec.doubled, &mut rows, &mut fits);

        for b in 0..s.fk_boxes {
            let env = sample_field(
                &cfg.potential,
                &Region::cube(&origin, 1),
                derive_seed(cfg.run.seed, TAG_FK, (k * s.fk_boxes + b) as u64),
            )?;
            let c = fk_equivalence_check(&env, beta, &origin, s.fk_terms)?;
            fk_rows.push(FkRow {
                beta,
                box_index: b,
                terms: c.terms,
                max_deviation: c.max_deviation,
                tail_bound: c.tail_bound,
                solver_residual: c.solver_residual,
                consistent: c.consistent(1e-13),
            });
        }
    }
    sink.write("green", &rows)?;
    sink.write("green_fit", &fits)?;
    sink.write("green_fk", &fk_rows)?;
    for f in &fits {
        println!(
            "beta {} margin {}: alpha_hat {} vs sqrt(2d Fbar) = {:.5}; truncation flag {}",
            f.beta,
            f.margin,
            f.alpha_hat.map(|a| format!("{a:.5}")).unwrap_or_else(|| "n/a".into()),
            f.reference,
            f.truncation_flag
        );
    }
    let worst = fk_rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    println!(
        "solver vs series: max deviation {worst:.2e} over {} boxes",
        fk_rows.len()
    );
    let failed: usize = fits.iter().map(|f| f.failed).sum();
    if failed > 0 {
        return Err(CmdError::Numerical(format!(
            "{failed} environment solves did not converge; their rows are excluded"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleRow {
    beta: f64,
    n: i64,
    max_len: usize,
    lower: f64,
    upper: f64,
    finished_mass: f64,
}

pub fn oracle(cfg: &ExperimentConfig, sink: &Sink) -> CmdResult {
    let s = &cfg.oracle;
    require_betas("oracle", &s.betas)?;
    require_ns("oracle", &s.ns)?;
    let ell = Direction::axis(cfg.run.d, 0);
    let mut rows = Vec::new();
    for &beta in &s.betas {
        for &n in &s.ns {
            let b = exact_e_small(beta, n, &s.potential, &ell, s.max_len)?;
            rows.push(OracleRow {
                beta,
                n,
                max_len: s.max_len,
                lower: b.lower,
                upper: b.upper,
                finished_mass: b.finished_mass,
            });
        }
    }
    sink.write("oracle", &rows)?;
    for r in &rows {
        println!("beta {} n {}: e in [{:.6e}, {:.6e}]", r.beta, r.n, r.lower, r.upper);
    }
    Ok(())
}

pub fn selftest(cfg: &ExperimentConfig, sink: &Sink) -> CmdResult {
    let ids: Vec<u8> = if cfg.selftest.criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        cfg.selftest.criteria.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(usage(format!("selftest.criteria contains unknown criterion {bad}")));
    }
    let results: Vec<CriterionResult> = ids
        .iter()
        .map(|&id| {
            let r = run_criterion(id, cfg.run.seed);
            println!(
                "[{}] {:>2} {} ({:.1}s): {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.id,
                r.name,
                r.seconds,
                r.detail
            );
            r
        })
        .collect();
    sink.write("selftest", &results)?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        println!("{} of {} criteria passed", results.len(), results.len());
        Ok(())
    } else {
        Err(CmdError::TestFailure(format!("criteria {} failed", failed.join(", "))))
    }
}

impl From<String> for CmdError {
    fn from(m: String) -> Self {
        CmdError::Usage(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let numerical = rwrp_core::Error::SolverNoConvergence {
            iterations: 10,
            residual: 1.0,
        };
        assert_eq!(CmdError::from(numerical).exit_code(), 3);
        let bad = rwrp_core::Error::DegenerateTilt("negative".into());
        assert_eq!(CmdError::from(bad).exit_code(), 1);
        assert_eq!(CmdError::TestFailure(String::new()).exit_code(), 2);
    }
}
