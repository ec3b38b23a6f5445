use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{CheckTag, RunConfig};
use super::sampling::Samples;
use crate::catalog::{Example1Params, Scenario};
use crate::classification::{
    closedness_residual, douglas_kropina_residual, einstein_residual, exp_bd_residual, killing_residual,
    mkropina_bd_residual,
};
use crate::conformal::{
    direct_defect, fit_lie, homothety_test, lemma51_test, lie_data, lift_identity, vc_b2_check,
    deformed_lift_check, ConformalFit, FactorField, FitFamily, HomothetyVerdict, UNIT_NORM_TOL,
};
use crate::diffgeo::{beta_invariants, DiffConfig, MetricField, OneFormField};
use crate::metrics::{kropina_normalize, AlphaBetaMetric, DeformationTriple, PhiFamily, Sign};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Stats {
    fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { max: 0.0, mean: 0.0, count };
        }
        let max = if values.iter().any(|v| v.is_nan()) {
            f64::NAN
        } else {
            values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        Self { max, mean: values.iter().sum::<f64>() / count as f64, count }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    pub scalars: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub tag: String,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub residual: Stats,
    pub details: Value,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub points: Vec<PointRecord>,
}

/// Everything a check may read.
pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub metric: AlphaBetaMetric,
    pub cfg: DiffConfig,
    pub samples: &'a Samples,
    pub config: &'a RunConfig,
    pub example1: Option<Example1Params>,
}

#[derive(Default)]
struct Outcome {
    points: Vec<PointRecord>,
    details: BTreeMap<String, Value>,
    warnings: Vec<String>,
    failed: bool,
    /// Residual statistics over something other than the point records.
    stats: Option<Stats>,
}

impl Outcome {
    fn threshold(points: Vec<PointRecord>, tol: f64) -> Self {
        let failed = points.iter().any(|p| !(p.residual <= tol));
        Self { points, failed, ..Default::default() }
    }

    fn detail(mut self, key: &str, v: Value) -> Self {
        self.details.insert(key.into(), v);
        self
    }
}

fn record(index: usize, x: &[f64], residual: f64, scalars: &[(&str, f64)]) -> PointRecord {
    PointRecord {
        index,
        x: x.to_vec(),
        residual,
        scalars: scalars.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn over_points<T, F>(ctx: &Context, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &[f64]) -> Result<T> + Sync,
{
    ctx.samples
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x)| f(i, x))
        .collect()
}

/// `m` of an m-Kropina `φ`.
fn kropina_m(phi: &PhiFamily) -> Option<f64> {
    match phi.canonical() {
        PhiFamily::MKropina { m } => Some(m),
        _ => None,
    }
}

fn exp_eps(phi: &PhiFamily) -> Option<Sign> {
    match phi {
        PhiFamily::ExpType { eps } => Some(*eps),
        _ => None,
    }
}

/// Rejects checks whose hypotheses do not match the scenario.
pub fn applicable(tag: CheckTag, scenario: &Scenario, example1: bool) -> Result<()> {
    let phi = &scenario.phi;
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("check {tag} needs {what}, scenario has {}", phi.tag())))
        }
    };
    match tag {
        CheckTag::Theorem2Kropina => need(kropina_m(phi).is_some(), "an m-Kropina φ"),
        CheckTag::MkropinaBd => {
            need(kropina_m(phi).is_some(), "an m-Kropina φ")?;
            need(kropina_m(phi) != Some(-1.0) || scenario.dim() >= 3, "n ≥ 3 when m = -1")
        }
        CheckTag::Prop41 => need(
            matches!(phi.canonical(), PhiFamily::MKropina { .. } | PhiFamily::MKropinaType { .. }),
            "an m-Kropina or m-Kropina-type φ",
        ),
        CheckTag::Theorem2Exp | CheckTag::ExpBd | CheckTag::Vcb2 | CheckTag::Deform => {
            need(exp_eps(phi).is_some(), "an exp-type φ")
        }
        CheckTag::Example1Full => {
            if example1 {
                Ok(())
            } else {
                Err(Error::Config("check example1-full needs an example1 scenario".into()))
            }
        }
        _ => Ok(()),
    }
}

pub fn run_check(tag: CheckTag, ctx: &Context) -> CheckReport {
    let tol = ctx.config.tolerance(tag);
    let result = match tag {
        CheckTag::LiftIdentity => lift_identity_check(ctx, tol),
        CheckTag::Theorem1 => fit_check(ctx, tol, None, |_, _| FitFamily::Theorem1),
        CheckTag::Theorem2Kropina => kropina_fit(ctx, tol),
        CheckTag::Theorem2Exp => {
            let eps = exp_eps(&ctx.scenario.phi).unwrap_or(Sign::Plus);
            fit_check(ctx, tol, None, move |_, _| FitFamily::ExpType { eps })
        }
        CheckTag::Prop41 => {
            let fam = match ctx.scenario.phi.canonical() {
                PhiFamily::MKropinaType { m, k } => FitFamily::MKropinaType { k, m },
                PhiFamily::MKropina { m } => FitFamily::MKropinaType { k: 0.0, m },
                _ => FitFamily::Theorem1,
            };
            fit_check(ctx, tol, None, move |_, _| fam)
        }
        CheckTag::DirectDefect => direct_defect_check(ctx, tol),
        CheckTag::Homothety => homothety_check(ctx, tol),
        CheckTag::DouglasKropina => scalar_check(ctx, tol, |x| {
            douglas_kropina_residual(&ctx.scenario.a, &ctx.scenario.b, x, &ctx.cfg)
        }),
        CheckTag::Closed => scalar_check(ctx, tol, |x| closedness_residual(&ctx.scenario.b, x, &ctx.cfg)),
        CheckTag::Killing => {
            scalar_check(ctx, tol, |x| killing_residual(&ctx.scenario.a, &ctx.scenario.b, x, &ctx.cfg))
        }
        CheckTag::MkropinaBd => bd_check(ctx, tol, true),
        CheckTag::ExpBd => bd_check(ctx, tol, false),
        CheckTag::Einstein => einstein_check(ctx, tol),
        CheckTag::Lemma51 => tau_sigma_check(ctx, tol),
        CheckTag::Vcb2 => vcb2_check(ctx, tol),
        CheckTag::Deform => deform_check(ctx, tol),
        CheckTag::OdeY42 => ode_check(ctx, tol),
        CheckTag::Example1Full => example1_full(ctx),
    };
    finish(tag, tol, result)
}

fn finish(tag: CheckTag, tolerance: f64, result: Result<Outcome>) -> CheckReport {
    match result {
        Ok(o) => {
            let residuals: Vec<f64> = o.points.iter().map(|p| p.residual).collect();
            let residual = o.stats.unwrap_or_else(|| Stats::of(&residuals));
            let verdict = if o.failed || residual.max.is_nan() {
                Verdict::Fail
            } else if o.warnings.is_empty() {
                Verdict::Pass
            } else {
                Verdict::Warn
            };
            CheckReport {
                tag: tag.name(),
                verdict,
                tolerance,
                residual,
                details: Value::Object(o.details.into_iter().collect()),
                warnings: o.warnings,
                error: None,
                points: o.points,
            }
        }
        Err(e) => CheckReport {
            tag: tag.name(),
            verdict: Verdict::Fail,
            tolerance,
            residual: Stats::of(&[]),
            details: json!({}),
            warnings: vec![],
            error: Some(e.to_string()),
            points: vec![],
        },
    }
}

fn lift_identity_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let s = ctx.scenario;
    let points = over_points(ctx, |i, x| {
        let mut da = 0.0_f64;
        let mut db = 0.0_f64;
        for sample in ctx.samples.tangent(i) {
            let id = lift_identity(&s.a, &s.b, &s.v, &sample, &ctx.cfg)?;
            da = da.max(id.alpha_defect);
            db = db.max(id.beta_defect);
        }
        Ok(record(i, x, da.max(db), &[("alpha_defect", da), ("beta_defect", db)]))
    })?;
    Ok(Outcome::threshold(points, tol).detail("rays_per_point", json!(ctx.config.samples.rays)))
}

/// Relative error with an absolute floor for factors near zero.
fn factor_error(c_hat: f64, c: f64) -> f64 {
    (c_hat - c).abs() / c.abs().max(1e-8)
}

fn fit_points(
    ctx: &Context,
    tol: f64,
    fields: Option<&(MetricField, OneFormField)>,
    family: impl Fn(usize, f64) -> FitFamily + Sync,
) -> Result<Vec<ConformalFit>> {
    let s = ctx.scenario;
    let (a, b) = fields.map(|(a, b)| (a, b)).unwrap_or((&s.a, &s.b));
    over_points(ctx, |i, x| {
        let lie = lie_data(a, b, &s.v, x, &ctx.cfg)?;
        let fam = family(i, lie.beta.b2);
        fit_lie(fam, &lie, tol)
    })
}

fn fit_outcome(ctx: &Context, fits: &[ConformalFit]) -> Outcome {
    let mut o = Outcome::default();
    let expected = ctx.scenario.expected.factor.clone();
    let mut worst_factor = 0.0_f64;
    for (i, (x, f)) in ctx.samples.points.iter().zip(fits).enumerate() {
        let mut sc = vec![("c_hat", f.c_hat), ("residual_s", f.residual_s), ("residual_m", f.residual_m)];
        if let Some(t) = f.tau_hat {
            sc.push(("tau_hat", t));
        }
        if let Some(e) = &expected {
            let c = e(x);
            worst_factor = worst_factor.max(factor_error(f.c_hat, c));
            sc.push(("c_expected", c));
        }
        o.points.push(record(i, x, f.max_residual(), &sc));
    }
    o.failed = fits.iter().any(|f| !f.conformal);
    let reduced = fits.iter().filter(|f| f.reduced_rank).count();
    if reduced > 0 {
        o.warnings.push(format!("{reduced} of {} fits have reduced rank", fits.len()));
    }
    if let Some(f) = fits.first() {
        o.details.insert("family".into(), json!(f.family.tag()));
    }
    o.details.insert("conformal_points".into(), json!(fits.iter().filter(|f| f.conformal).count()));
    if expected.is_some() {
        o.details.insert("expected_factor_max_rel_error".into(), json!(worst_factor));
    }
    o
}

fn fit_check(
    ctx: &Context,
    tol: f64,
    fields: Option<&(MetricField, OneFormField)>,
    family: impl Fn(usize, f64) -> FitFamily + Sync,
) -> Result<Outcome> {
    let fits = fit_points(ctx, tol, fields, family)?;
    Ok(fit_outcome(ctx, &fits))
}

fn kropina_fit(ctx: &Context, tol: f64) -> Result<Outcome> {
    let s = ctx.scenario;
    let m = kropina_m(&s.phi).ok_or_else(|| Error::Precondition("needs an m-Kropina φ".into()))?;
    let unit = ctx
        .samples
        .points
        .iter()
        .map(|x| beta_invariants(&s.a, &s.b, x, &ctx.cfg).map(|i| (i.b2 - 1.0).abs() <= UNIT_NORM_TOL))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|u| u);
    if unit {
        return fit_check(ctx, tol, None, |_, _| FitFamily::MKropinaUnitB);
    }
    let normalized = kropina_normalize(&s.a, &s.b, m)?;
    let o = fit_check(ctx, tol, Some(&normalized), |_, _| FitFamily::MKropinaUnitB)?;
    Ok(o.detail("normalized", json!(true)))
}

fn direct_defect_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let expected = ctx.scenario.expected.factor.clone();
    let defects = over_points(ctx, |i, _| {
        let d = direct_defect(&ctx.metric, &ctx.scenario.v, &ctx.samples.tangent(i), &ctx.cfg)?;
        Ok(d.into_iter().next().expect("one group per base point"))
    })?;
    let points = defects
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut sc = vec![("c_hat", d.c_hat)];
            if let Some(e) = &expected {
                sc.push(("c_expected", e(&d.x)));
            }
            record(i, &d.x, d.defect, &sc)
        })
        .collect();
    Ok(Outcome::threshold(points, tol).detail("family", json!("general-defect")))
}

fn homothety_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let phi = ctx.scenario.phi.clone();
    let fits = fit_points(ctx, tol, None, |_, b2| FitFamily::for_phi(&phi, b2))?;
    let field = FactorField::from_fits(&ctx.samples.points, &fits);
    let rep = homothety_test(&field, tol);
    let mut o = fit_outcome(ctx, &fits);
    o.failed = false;
    match (rep.verdict, ctx.scenario.expected.homothetic) {
        (HomothetyVerdict::Inconclusive, _) => o.warnings.push(format!(
            "only {} positive fits; at least {} needed",
            rep.samples,
            crate::conformal::MIN_HOMOTHETY_SAMPLES
        )),
        (v, Some(expected)) if v.is_homothetic() != expected => {
            o.failed = true;
            o.warnings.push(format!("expected homothetic = {expected}, found {v:?}"));
        }
        _ => {}
    }
    Ok(o.detail("homothety", serde_json::to_value(&rep)?))
}

fn scalar_check<F>(ctx: &Context, tol: f64, f: F) -> Result<Outcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let points = over_points(ctx, |i, x| Ok(record(i, x, f(x)?, &[])))?;
    Ok(Outcome::threshold(points, tol))
}

fn bd_check(ctx: &Context, tol: f64, kropina: bool) -> Result<Outcome> {
    let s = ctx.scenario;
    let reports = over_points(ctx, |_, x| {
        if kropina {
            let m = kropina_m(&s.phi).ok_or_else(|| Error::Precondition("needs an m-Kropina φ".into()))?;
            mkropina_bd_residual(&s.a, &s.b, m, x, &ctx.cfg, tol)
        } else {
            let eps = exp_eps(&s.phi).ok_or_else(|| Error::Precondition("needs an exp-type φ".into()))?;
            exp_bd_residual(&s.a, &s.b, eps, x, &ctx.cfg, tol)
        }
    })?;
    let key = if kropina { "tau" } else { "sigma" };
    let points = reports
        .iter()
        .zip(&ctx.samples.points)
        .enumerate()
        .map(|(i, (r, x))| {
            record(
                i,
                x,
                r.residual,
                &[(key, r.scalar.unwrap_or(f64::NAN)), ("residual_s", r.residual_s), ("residual_r", r.residual_r)],
            )
        })
        .collect();
    let mut o = Outcome::threshold(points, tol);
    if let Some(r) = reports.first() {
        o.details.insert("condition".into(), json!(r.condition));
        o.details.insert("readings".into(), json!(r.readings));
    }
    Ok(o)
}

fn einstein_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let n = ctx.scenario.dim();
    let reps = over_points(ctx, |_, x| einstein_residual(&ctx.scenario.a, x, &ctx.cfg, n))?;
    let points = reps
        .iter()
        .zip(&ctx.samples.points)
        .enumerate()
        .map(|(i, (r, x))| record(i, x, r.residual, &[("scalar_curvature", r.scalar_curvature)]))
        .collect();
    let mut o = Outcome::threshold(points, tol);
    if n < 3 {
        o.warnings.push("n = 2: the trace condition holds for every metric; scalar curvature reported".into());
    }
    let low = reps.iter().filter(|r| r.low_confidence).count();
    if low > 0 {
        o.warnings.push(format!("{low} Ricci evaluations are low-confidence"));
    }
    Ok(o.detail("strict", json!(n >= 3)))
}

fn tau_sigma_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let s = ctx.scenario;
    let rep = lemma51_test(&s.a, &s.b, &s.v, &ctx.samples.points, &ctx.cfg, tol)?;
    let points = rep
        .points
        .iter()
        .zip(&ctx.samples.points)
        .enumerate()
        .map(|(i, (p, x))| {
            record(
                i,
                x,
                p.residual_s.max(p.residual_m).max(p.residual_conformal_beta),
                &[
                    ("sigma", p.sigma),
                    ("tau", p.tau),
                    ("rho", p.rho),
                    ("tau_minus_sigma", p.tau - p.sigma),
                    ("residual_conformal_beta", p.residual_conformal_beta),
                ],
            )
        })
        .collect();
    let status = match rep.conclusion_holds {
        Some(true) => "verified",
        Some(false) => "violated",
        None => "not-applicable",
    };
    let mut o = Outcome { points, failed: rep.conclusion_holds == Some(false), ..Default::default() };
    o.details.insert("status".into(), json!(status));
    o.details.insert("hypothesis_s".into(), json!(rep.hypothesis_s));
    o.details.insert("hypothesis_m".into(), json!(rep.hypothesis_m));
    o.details.insert("beta_conformal".into(), json!(rep.beta_conformal));
    o.details.insert("spread".into(), json!(rep.spread));
    o.stats = Some(Stats { max: rep.spread, mean: rep.spread, count: 1 });
    Ok(o)
}

fn vcb2_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let s = ctx.scenario;
    let eps = exp_eps(&s.phi).ok_or_else(|| Error::Precondition("needs an exp-type φ".into()))?;
    let points = over_points(ctx, |i, x| {
        let r = vc_b2_check(&s.a, &s.b, &s.v, x, eps, &ctx.cfg, tol)?;
        Ok(record(i, x, r.residual, &[("tau", r.tau), ("c", r.c), ("lift", r.lift), ("predicted", r.predicted)]))
    })?;
    Ok(Outcome::threshold(points, tol))
}

fn deform_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let s = ctx.scenario;
    let eps = exp_eps(&s.phi).ok_or_else(|| Error::Precondition("needs an exp-type φ".into()))?;
    let triple = DeformationTriple::special(eps);
    let points = over_points(ctx, |i, x| {
        let r = deformed_lift_check(&s.a, &s.b, &s.v, &triple, x, &ctx.cfg, tol)?;
        let (sa, sb) = r.special.unwrap_or((0.0, 0.0));
        Ok(record(
            i,
            x,
            r.max_residual(),
            &[
                ("tau", r.tau),
                ("c", r.c),
                ("t", r.t),
                ("residual_alpha", r.residual_alpha),
                ("residual_beta", r.residual_beta),
                ("special_alpha", sa),
                ("special_beta", sb),
            ],
        ))
    })?;
    Ok(Outcome::threshold(points, tol).detail("triple", json!("special")))
}

fn ode_check(ctx: &Context, tol: f64) -> Result<Outcome> {
    let eps = exp_eps(&ctx.scenario.phi).unwrap_or(Sign::Plus);
    let special = DeformationTriple::special(eps);
    let identity = DeformationTriple::identity(eps);
    let grid: Vec<f64> = (0..100).map(|k| 0.5 + 2.5 * k as f64 / 99.0).collect();
    let mut special_res = Vec::with_capacity(grid.len());
    let mut identity_gap = 0.0_f64;
    let mut identity_min = f64::INFINITY;
    for &t in &grid {
        let (ru, rv) = special.ode_residual(t);
        special_res.push(ru.abs().max(rv.abs()));
        let (iu, iv) = identity.ode_residual(t);
        identity_gap = identity_gap.max((iu - eps.value() / (t * t)).abs()).max((iv + 1.0 / (t * t)).abs());
        identity_min = identity_min.min(iu.abs().max(iv.abs()));
    }
    let stats = Stats::of(&special_res);
    let rejected = identity_min > tol;
    let mut o = Outcome {
        failed: !(stats.max <= tol) || !rejected || identity_gap > 1e-12,
        stats: Some(stats),
        ..Default::default()
    };
    o.details.insert("t_range".into(), json!([0.5, 3.0]));
    o.details.insert("identity_rejected".into(), json!(rejected));
    o.details.insert("identity_residual_gap".into(), json!(identity_gap));
    Ok(o)
}

fn example1_full(ctx: &Context) -> Result<Outcome> {
    let s = ctx.scenario;
    let p = ctx
        .example1
        .as_ref()
        .ok_or_else(|| Error::Precondition("example1-full needs an example1 scenario".into()))?;
    let explicit = ctx.config.explicit_tolerance(CheckTag::Example1Full);
    let tol_b2 = explicit.unwrap_or(1e-9);
    let tol_tensor = explicit.unwrap_or(1e-7);
    let tol_fit = explicit.unwrap_or(1e-5);
    let expected = s.expected.factor.clone().expect("example1 scenarios carry a factor");

    struct Row {
        b2: f64,
        closed: f64,
        douglas: f64,
        fit: ConformalFit,
        factor: f64,
        direct: f64,
        c_expected: f64,
    }
    let rows = over_points(ctx, |i, x| {
        let inv = beta_invariants(&s.a, &s.b, x, &ctx.cfg)?;
        let lie = lie_data(&s.a, &s.b, &s.v, x, &ctx.cfg)?;
        let fit = fit_lie(FitFamily::MKropinaUnitB, &lie, tol_fit)?;
        let c = expected(x);
        let direct = direct_defect(&ctx.metric, &s.v, &ctx.samples.tangent(i), &ctx.cfg)?;
        Ok(Row {
            b2: (inv.b2 - 1.0).abs(),
            closed: closedness_residual(&s.b, x, &ctx.cfg)?,
            douglas: douglas_kropina_residual(&s.a, &s.b, x, &ctx.cfg)?,
            factor: factor_error(fit.c_hat, c),
            fit,
            direct: direct[0].defect,
            c_expected: c,
        })
    })?;

    let max = |f: &dyn Fn(&Row) -> f64| rows.iter().map(f).fold(0.0_f64, f64::max);
    let part = |value: f64, tol: f64| json!({"max": value, "tolerance": tol, "pass": value <= tol});
    let b2 = max(&|r| r.b2);
    let closed = max(&|r| r.closed);
    let douglas = max(&|r| r.douglas);
    let fit = max(&|r| r.fit.max_residual());
    let factor = max(&|r| r.factor);
    let direct = max(&|r| r.direct);

    let fits: Vec<ConformalFit> = rows.iter().map(|r| r.fit.clone()).collect();
    let rep = homothety_test(&FactorField::from_fits(&ctx.samples.points, &fits), tol_fit);
    let expected_h = !p.is_complement();
    let homothety_ok = rep.verdict != HomothetyVerdict::Inconclusive && rep.verdict.is_homothetic() != expected_h;

    let points = rows
        .iter()
        .zip(&ctx.samples.points)
        .enumerate()
        .map(|(i, (r, x))| {
            record(
                i,
                x,
                r.fit.max_residual(),
                &[
                    ("c_hat", r.fit.c_hat),
                    ("c_expected", r.c_expected),
                    ("b2_defect", r.b2),
                    ("closed", r.closed),
                    ("douglas", r.douglas),
                    ("direct_defect", r.direct),
                ],
            )
        })
        .collect();
    let failed = !(b2 <= tol_b2
        && closed <= tol_tensor
        && douglas <= tol_tensor
        && fit <= tol_fit
        && factor <= tol_fit
        && direct <= tol_fit
        && homothety_ok);
    let mut o = Outcome { points, failed, ..Default::default() };
    o.details.insert("unit_norm".into(), part(b2, tol_b2));
    o.details.insert("closed".into(), part(closed, tol_tensor));
    o.details.insert("douglas".into(), part(douglas, tol_tensor));
    o.details.insert("kropina_fit".into(), part(fit, tol_fit));
    o.details.insert("factor_rel_error".into(), part(factor, tol_fit));
    o.details.insert("direct_defect".into(), part(direct, tol_fit));
    o.details.insert(
        "homothety".into(),
        json!({"verdict": rep.verdict, "expected_non_homothetic": expected_h, "pass": homothety_ok}),
    );
    o.details.insert("convention".into(), json!("c_hat = -c(x) under V^c(F) = 2cF"));
    Ok(o)
}
