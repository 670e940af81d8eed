//! Scenario execution.

use std::path::Path;
use std::time::Instant;

use curvdecay::comparison::{
    check_growth_exponent, random_lemma_batch, run_lemma_suite, LemmaCheckResult, LemmaSuiteParams, LEMMA_ODE_TOL,
};
use curvdecay::inequality::{
    isoperimetric_check, sobolev_check_domain, sobolev_constant_submanifold, submanifold_check_flat, InequalityParams,
    SubmanifoldKind, SubmanifoldSpec, DEFAULT_AVR_HORIZON,
};
use curvdecay::model::{avr_radii, bishop_gromov_ratio, ricci_decay_check, ModelManifold};
use curvdecay::ode::fundamental_pair;
use curvdecay::profiles::{profile_invariants, CurvatureProfile, TailModel};
use curvdecay::report::{Status, VerificationReport};
use curvdecay::{abp, Error};
use rayon::prelude::*;

use crate::config::{CommandSpec, ConfigFile, ResolvedScenario, ToleranceOverrides};
use crate::CliError;

/// Seed used by randomized commands when neither the scenario, the file nor
/// the command line sets one.
pub const DEFAULT_SEED: u64 = 0;

/// Submanifold constant evaluated at this `b₁` shows continuity at `b₁ = 0`.
const SMALL_B1: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    /// Record wall times; off by default so reports are reproducible.
    pub timings: bool,
}

/// Parse, validate and run every scenario of a config file.
pub fn run_scenarios(path: &Path, opts: &RunOptions) -> Result<Vec<VerificationReport>, CliError> {
    let cfg = ConfigFile::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let scenarios = cfg.resolve(base)?;
    let seed = opts.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let workers = opts.workers.or(cfg.workers);
    run_resolved(&scenarios, seed, workers, opts.timings)
}

/// Run resolved scenarios concurrently; reports come back in input order.
pub fn run_resolved(
    scenarios: &[ResolvedScenario],
    seed: u64,
    workers: Option<usize>,
    timings: bool,
) -> Result<Vec<VerificationReport>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Usage("worker count must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| scenarios.par_iter().map(|s| run_one(s, seed, timings)).collect()))
}

fn run_one(sc: &ResolvedScenario, seed: u64, timings: bool) -> VerificationReport {
    let start = Instant::now();
    let cfg = &sc.config;
    let mut rep = VerificationReport::new(cfg.command.name());
    let mut inputs = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    if let serde_json::Value::Object(map) = &mut inputs {
        map.remove("id");
        if let CommandSpec::Lemmas { random: Some(_), seed: s } = &cfg.command {
            map.insert("seed".into(), s.unwrap_or(seed).into());
        }
    }

    let tol = &cfg.tolerances;
    let outcome = match &cfg.command {
        CommandSpec::Constants { horizon, h1_at, volume_horizon } => {
            constants(&mut rep, profile(sc), sc.manifold.as_ref(), *horizon, h1_at, *volume_horizon, tol)
        }
        CommandSpec::Lemmas { random: Some(count), seed: s } => {
            lemma_batch(&mut rep, s.unwrap_or(seed), *count, tol);
            Ok(())
        }
        CommandSpec::Lemmas { random: None, .. } => run_lemma_suite(profile(sc), &LemmaSuiteParams::default())
            .map(|results| record_lemmas(&mut rep, "", &results, tol)),
        CommandSpec::Isoperimetric { radii, equality } => {
            for &r in radii {
                let prefix = format!("r={r}");
                let res = isoperimetric_check(manifold(sc), profile(sc), r);
                absorb(&mut rep, &prefix, res, *equality, tol);
            }
            Ok(())
        }
        CommandSpec::Sobolev { radii, functions, equality } => {
            for &r in radii {
                for (j, f) in functions.iter().enumerate() {
                    let prefix = format!("r={r}/f{j}");
                    let res = sobolev_check_domain(manifold(sc), profile(sc), r, f);
                    absorb(&mut rep, &prefix, res, *equality, tol);
                }
            }
            Ok(())
        }
        CommandSpec::Submanifold { cases, value } => {
            for case in cases {
                let spec = SubmanifoldSpec { kind: case.kind, n: case.n, p: case.p };
                let prefix = format!("{}_n{}_p{}", kind_name(case.kind), case.n, case.p);
                let res = submanifold_check_flat(&spec, *value).and_then(|mut r| {
                    let q = InequalityParams { n: case.n, p: case.p, theta: 1.0, b: 0.0, b1: SMALL_B1, r0: 1.0 };
                    r.record("C_small_b1", sobolev_constant_submanifold(&q)?);
                    Ok(r)
                });
                absorb(&mut rep, &prefix, res, false, tol);
            }
            Ok(())
        }
        CommandSpec::Abp { ball_radius, transport_time, function } => {
            abp::abp_report(manifold(sc), profile(sc), *ball_radius, function, *transport_time).map(|r| {
                let VerificationReport { computed, tolerances, messages, status, .. } = r;
                rep.computed = computed;
                rep.tolerances = tolerances;
                rep.messages = messages;
                rep.status = status;
            })
        }
    };
    if let Err(e) = outcome {
        record_error(&mut rep, e);
    }

    let eq = tol.equality();
    for (key, exp) in &cfg.expect {
        let t = exp.tolerance(eq);
        match rep.get(key) {
            Some(v) => {
                rep.require_close(key.clone(), v, exp.value(), t);
            }
            None => {
                rep.fail(format!("expected quantity {key} was not computed"));
            }
        }
        rep.tolerance(format!("expect/{key}"), t);
    }
    if !cfg.expect.is_empty() || tol.equality.is_some() {
        rep.tolerance("equality", eq);
    }

    rep.scenario_id = cfg.id.clone();
    rep.inputs = inputs;
    if timings {
        rep.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    rep
}

// `resolve` guarantees these are present for the commands that use them.
fn profile(sc: &ResolvedScenario) -> &CurvatureProfile {
    sc.profile.as_ref().expect("validated scenario has a profile")
}

fn manifold(sc: &ResolvedScenario) -> &ModelManifold {
    sc.manifold.as_ref().expect("validated scenario has a manifold")
}

fn kind_name(k: SubmanifoldKind) -> &'static str {
    match k {
        SubmanifoldKind::FlatDisk => "flat_disk",
        SubmanifoldKind::RoundSphere => "round_sphere",
    }
}

/// Precondition and input errors fail the scenario; solver breakdowns are
/// numerical failures.
fn record_error(rep: &mut VerificationReport, e: Error) {
    if e.is_numerical() {
        rep.numerical_failure(e.to_string());
    } else {
        rep.fail(e.to_string());
    }
}

fn absorb(
    rep: &mut VerificationReport,
    prefix: &str,
    res: curvdecay::Result<VerificationReport>,
    equality: bool,
    tol: &ToleranceOverrides,
) {
    match res {
        Ok(inner) => {
            let margin = inner.get("margin");
            rep.absorb(prefix, inner);
            if let (true, Some(m)) = (equality, margin) {
                rep.require_close(format!("{prefix}/margin"), m, 0.0, tol.equality());
            }
        }
        Err(e) => {
            let mut inner = VerificationReport::new("");
            record_error(&mut inner, e);
            rep.absorb(prefix, inner);
        }
    }
}

fn constants(
    rep: &mut VerificationReport,
    p: &CurvatureProfile,
    m: Option<&ModelManifold>,
    horizon: f64,
    h1_at: &[f64],
    volume_horizon: Option<f64>,
    tol: &ToleranceOverrides,
) -> curvdecay::Result<()> {
    let inv = profile_invariants(p, horizon, TailModel::Exact)?;
    rep.record("B", inv.b).record("b1", inv.b1).record("horizon", horizon);
    if !h1_at.is_empty() {
        let (h1, _) = fundamental_pair(p, h1_at.iter().copied().fold(0.0, f64::max), LEMMA_ODE_TOL)?;
        for &t in h1_at {
            rep.record(format!("h1({t})"), h1.value(t));
        }
    }
    let growth = check_growth_exponent(p, horizon)?;
    rep.record("growth_exponent_target", growth.bound)
        .record("growth_exponent", growth.observed)
        .require_nonnegative("growth_slack", growth.worst_slack, growth.tolerance)
        .tolerance("growth_slack", growth.tolerance);
    if let Some(w) = growth.warning {
        rep.messages.push(w);
    }

    let Some(m) = m else { return Ok(()) };
    let vh = volume_horizon.unwrap_or(if m.r_max().is_finite() { m.r_max() } else { DEFAULT_AVR_HORIZON });
    let decay = ricci_decay_check(m, p, vh)?;
    rep.record("volume_horizon", vh).record("ricci_worst_margin", decay.worst_margin);
    if !decay.pass {
        return Err(Error::Precondition(format!(
            "Ricci decay fails: margin {:.3e} at r = {:.6}",
            decay.worst_margin, decay.worst_radius
        )));
    }
    let bg = bishop_gromov_ratio(m, p, &avr_radii(vh))?;
    rep.record("theta", bg.avr.theta)
        .record("avr_drift", bg.avr.drift)
        .record("bg_monotone_violation", bg.avr.monotone_violation)
        .require_nonnegative("bg_monotone_slack", -bg.avr.monotone_violation, tol.monotone())
        .require_nonnegative("theta_slack", 1.0 - bg.avr.theta, tol.theta())
        .tolerance("bg_monotone_slack", tol.monotone())
        .tolerance("theta_slack", tol.theta());
    Ok(())
}

fn record_lemmas(rep: &mut VerificationReport, prefix: &str, results: &[LemmaCheckResult], tol: &ToleranceOverrides) {
    for res in results {
        let key = format!("{prefix}{}", res.lemma_id.as_str());
        let t = tol.slack.unwrap_or(res.tolerance);
        rep.require_nonnegative(format!("{key}/worst_slack"), res.worst_slack, t)
            .record(format!("{key}/location"), res.location)
            .tolerance(format!("{key}/worst_slack"), t);
        if let Some(w) = &res.warning {
            rep.messages.push(format!("{key}: {w}"));
        }
    }
}

fn lemma_batch(rep: &mut VerificationReport, seed: u64, count: usize, tol: &ToleranceOverrides) {
    let width = count.saturating_sub(1).to_string().len();
    let mut checks = 0usize;
    for (i, entry) in random_lemma_batch(seed, count).into_iter().enumerate() {
        let prefix = format!("profile{i:0width$}/");
        match entry.results {
            Ok(results) => {
                checks += results.len();
                record_lemmas(rep, &prefix, &results, tol);
            }
            Err(e) => {
                let msg = format!("{prefix} {} {:?}: {e}", entry.profile.kind(), entry.profile.params());
                if e.is_numerical() {
                    rep.numerical_failure(msg);
                } else {
                    rep.fail(msg);
                }
            }
        }
    }
    rep.record("profiles", count as f64).record("lemma_results", checks as f64);
}

/// Process exit code for a batch: 0 all pass, 2 any failure, 3 numerical
/// failures only.
pub fn exit_code(reports: &[VerificationReport]) -> u8 {
    match reports.iter().fold(Status::Pass, |acc, r| acc.worst(r.status)) {
        Status::Pass => 0,
        Status::Fail => 2,
        Status::NumericalFailure => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Vec<VerificationReport> {
        let cfg = ConfigFile::parse(text).unwrap();
        run_resolved(&cfg.resolve(Path::new(".")).unwrap(), 1, Some(2), false).unwrap()
    }

    #[test]
    fn flat_isoperimetric_margin_vanishes() {
        let reps = run(r#"
            [[scenario]]
            id = "flat"
            profile = { kind = "zero" }
            manifold = { warp = "euclidean", dimension = 3 }
            command = { kind = "isoperimetric", radii = [1.0, 2.0], equality = true }
        "#);
        assert_eq!(reps[0].status, Status::Pass, "{:?}", reps[0].messages);
        assert!(reps[0].get("r=2/margin").unwrap().abs() < 1e-9);
        assert_eq!(exit_code(&reps), 0);
    }

    #[test]
    fn errors_become_statuses() {
        // The euler model does not satisfy the decay bound of a smaller profile.
        let reps = run(r#"
            [[scenario]]
            id = "pre"
            profile = { kind = "euler", params = [0.5] }
            manifold = { warp = "comparison", dimension = 2, profile = { kind = "euler", params = [2.0] }, r_max = 50.0 }
            command = { kind = "isoperimetric", radii = [1.0] }

            [[scenario]]
            id = "ok"
            profile = { kind = "zero" }
            manifold = { warp = "euclidean", dimension = 2 }
            command = { kind = "isoperimetric", radii = [1.0] }
        "#);
        assert_eq!(reps[0].status, Status::Fail);
        assert!(reps[0].messages[0].contains("precondition"), "{:?}", reps[0].messages);
        assert_eq!(reps[1].status, Status::Pass);
        assert_eq!(exit_code(&reps), 2);
    }

    #[test]
    fn expectations_are_checked() {
        let reps = run(r#"
            [[scenario]]
            id = "euler"
            profile = { kind = "euler", params = [2.0] }
            command = { kind = "constants", h1_at = [1.0] }
            expect = { "h1(1)" = 1.1666666666666667, growth_exponent = { value = 2.0, tol = 1e-3 }, missing = 0.0 }
        "#);
        let r = &reps[0];
        assert!((r.get("h1(1)").unwrap() - 7.0 / 6.0).abs() < 1e-8);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.messages.len(), 1, "{:?}", r.messages);
    }

    #[test]
    fn exit_codes() {
        let mut a = VerificationReport::new("x");
        let b = a.clone();
        a.numerical_failure("boom");
        assert_eq!(exit_code(std::slice::from_ref(&b)), 0);
        assert_eq!(exit_code(&[b.clone(), a.clone()]), 3);
        let mut c = b.clone();
        c.fail("no");
        assert_eq!(exit_code(&[a, c, b]), 2);
        assert_eq!(exit_code(&[]), 0);
    }
}
