//! Config-driven verification runs.

mod checks;
mod config;
mod report;
mod sampling;

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub use checks::{applicable, CheckReport, PointRecord, Stats, Verdict};
pub use config::{
    default_tolerance, BuiltinSource, CheckTag, Example1Source, Overrides, RunConfig, SampleConfig, ScenarioSource,
    Tolerances,
};
pub use report::{Environment, VerificationReport, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, EXIT_WARN};
pub use sampling::{draw, Samples, MAX_REDRAWS, POSITIVITY_MARGIN, SINGULAR_MARGIN};

use crate::diffgeo::DiffConfig;
use crate::metrics::AlphaBetaMetric;
use crate::Result;

pub const CONVENTION: &str = "V^c(F) = 2cF; for the example1 family the reported factor is -c(x)";

/// Runs every selected check. Configuration problems are errors; check
/// failures are recorded in the report.
pub fn run(config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let scenario = config.scenario.build()?;
    let example1 = match &config.scenario {
        ScenarioSource::Example1(e) => Some(e.resolve()?),
        _ => None,
    };
    let tags = config.sorted_checks();
    for &tag in &tags {
        applicable(tag, &scenario, example1.is_some())?;
    }
    let cfg = DiffConfig::with_scheme(config.scheme);
    let samples = draw(&scenario, config.samples.count, config.samples.rays.max(1), config.samples.seed, &cfg)?;
    let metric = AlphaBetaMetric::new(scenario.a.clone(), scenario.b.clone(), scenario.phi.clone())?;
    let ctx = checks::Context { scenario: &scenario, metric, cfg, samples: &samples, config, example1 };
    let reports: Vec<CheckReport> = tags.iter().map(|&t| checks::run_check(t, &ctx)).collect();

    let mut warnings = Vec::new();
    if config.samples.rays < scenario.dim() + 1
        && tags.iter().any(|t| matches!(t, CheckTag::DirectDefect | CheckTag::Example1Full))
    {
        warnings.push(format!("{} rays per point; direct defect needs at least n + 1", config.samples.rays));
    }
    let report = VerificationReport {
        scenario: scenario.name.clone(),
        phi: scenario.phi.tag(),
        n: scenario.dim(),
        convention: CONVENTION.into(),
        notes: scenario.expected.notes.clone(),
        environment: Environment {
            seed: config.samples.seed,
            samples: config.samples.count,
            rays: config.samples.rays,
            scheme: config.scheme,
            tolerances: tags.iter().map(|&t| (t.name(), config.tolerance(t))).collect(),
        },
        overall_pass: !reports.iter().any(|c| c.verdict == Verdict::Fail),
        checks: reports,
        warnings,
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    Ok(report)
}

/// Loads, overrides, runs and writes the report if a path is set.
pub fn run_path(path: &Path, overrides: &Overrides) -> Result<VerificationReport> {
    let mut config = RunConfig::from_path(path)?;
    config.apply(overrides)?;
    let report = run(&config)?;
    if let Some(out) = &config.report {
        report.write(out)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn config(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    #[test]
    fn dilation_run_passes_and_is_ordered() {
        let cfg = config(
            r#"{"scenario": {"builtin": {"name": "flat+const-b+dilation", "params": {"lambda": 0.6}}},
                "checks": ["theorem1", "closed", "direct-defect"], "samples": {"count": 8, "seed": 1}}"#,
        );
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.exit_code(), EXIT_PASS);
        let tags: Vec<_> = rep.checks.iter().map(|c| c.tag.as_str()).collect();
        assert_eq!(tags, ["closed", "direct-defect", "theorem1"]);
        let fit = &rep.checks[2];
        assert!(fit.points.iter().all(|p| (p.scalars["c_hat"] - 0.3).abs() < 1e-12));
        assert!(fit.details["expected_factor_max_rel_error"].as_f64().unwrap() < 1e-12);
        assert!(rep.summary().contains("[PASS] theorem1"));
    }

    #[test]
    fn family_mismatch_is_a_config_error() {
        let cfg = config(r#"{"scenario": {"builtin": {"name": "flat-euclidean"}}, "checks": ["mkropina-bd"]}"#);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let cfg = config(r#"{"scenario": {"builtin": {"name": "flat-euclidean"}}, "checks": ["example1-full"]}"#);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn reduced_rank_fits_warn() {
        let cfg = config(
            r#"{"scenario": {"builtin": {"name": "flat-euclidean"}}, "checks": ["theorem1"], "samples": {"count": 4}}"#,
        );
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.checks[0].verdict, Verdict::Warn);
        assert_eq!(rep.exit_code(), EXIT_WARN);
    }

    #[test]
    fn ode_check_runs_anywhere() {
        let cfg = config(r#"{"scenario": {"builtin": {"name": "flat-euclidean"}}, "checks": ["ode-y42"]}"#);
        let rep = run(&cfg).unwrap();
        let c = &rep.checks[0];
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.residual.count, 100);
        assert_eq!(c.details["identity_rejected"], true);
    }
}
