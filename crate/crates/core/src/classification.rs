//! Pointwise residuals of the Douglas, Landsberg, Killing and Einstein
//! conditions on `(α, β)`.
//!
//! Tensor conditions are written in terms of `r_ij`, `s_ij` and `s_j` from
//! [`BetaInvariants`]. Residuals are Frobenius norms of the defect divided by
//! `‖∇β‖_F`, so they do not change under `β → κβ`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::diffgeo::{
    beta_invariants, frobenius, ricci, BetaInvariants, DiffConfig, MetricField, OneFormField, Order,
};
use crate::metrics::Sign;
use crate::{Error, Result};

const B2_FLOOR: f64 = 1e-12;
const SCALE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub condition: String,
    /// Readings of the condition that apply (`douglas`, `landsberg`).
    pub readings: Vec<String>,
    /// Fitted `τ` or `σ`.
    pub scalar: Option<f64>,
    /// Defect of the `s_ij` equation.
    pub residual_s: f64,
    /// Defect of the `r_ij` equation after the scalar fit.
    pub residual_r: f64,
    /// `max(residual_s, residual_r)`.
    pub residual: f64,
    pub holds: bool,
}

/// `max |∂_i b_j − ∂_j b_i|`.
pub fn closedness_residual(b: &OneFormField, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let j = crate::diffgeo::jet(b.map(), x, Order::First, cfg)?;
    let d = &j.first - j.first.transpose();
    Ok(d.amax())
}

fn scale(inv: &BetaInvariants) -> f64 {
    frobenius(&inv.cov).max(SCALE_FLOOR)
}

fn douglas_defect(inv: &BetaInvariants) -> Result<f64> {
    if inv.b2 <= B2_FLOOR {
        return Err(Error::Precondition("the Douglas condition needs b² > 0".into()));
    }
    let rhs = (&inv.b_low * inv.s_low.transpose() - &inv.s_low * inv.b_low.transpose()) / inv.b2;
    Ok(frobenius(&(&inv.s - rhs)) / scale(inv))
}

/// Defect of `s_ij = (b_i s_j − b_j s_i)/b²`.
pub fn douglas_kropina_residual(a: &MetricField, b: &OneFormField, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    douglas_defect(&beta_invariants(a, b, x, cfg)?)
}

/// Fits `λ` in `r = λ·T + R` and returns `(λ, ‖r − λT − R‖_F)`.
fn fit_scalar(r: &DMatrix<f64>, t: &DMatrix<f64>, rest: &DMatrix<f64>) -> (f64, f64) {
    let target = r - rest;
    let tt = t.dot(t);
    let lambda = if tt > 0.0 { target.dot(t) / tt } else { 0.0 };
    (lambda, frobenius(&(target - t * lambda)))
}

fn sym_bs(inv: &BetaInvariants) -> DMatrix<f64> {
    let bs = &inv.b_low * inv.s_low.transpose();
    &bs + bs.transpose()
}

/// Kropina-type conditions on `F = β^m α^{1−m}` with a fitted `τ`:
/// the Douglas `s`-equation and
/// `r_ij = 2τ{m b² a_ij − (m+1) b_i b_j} − (m+1)/((m−1)b²)(b_i s_j + b_j s_i)`.
///
/// The Douglas reading needs `m ≠ −1`, the Landsberg reading `n ≥ 3`.
pub fn mkropina_bd_residual(
    a: &MetricField,
    b: &OneFormField,
    m: f64,
    x: &[f64],
    cfg: &DiffConfig,
    tol: f64,
) -> Result<ClassReport> {
    if !m.is_finite() || m == 0.0 || m == 1.0 {
        return Err(Error::Precondition(format!("m must avoid 0 and 1, got {m}")));
    }
    let mut readings = Vec::new();
    if m != -1.0 {
        readings.push("douglas".to_string());
    }
    if a.dim() >= 3 {
        readings.push("landsberg".to_string());
    }
    if readings.is_empty() {
        return Err(Error::Precondition("m = −1 in dimension 2 has no applicable reading".into()));
    }
    let inv = beta_invariants(a, b, x, cfg)?;
    let residual_s = douglas_defect(&inv)?;
    let bb = &inv.b_low * inv.b_low.transpose();
    let t = (&inv.a * (m * inv.b2) - &bb * (m + 1.0)) * 2.0;
    let rest = sym_bs(&inv) * (-(m + 1.0) / ((m - 1.0) * inv.b2));
    let (tau, def) = fit_scalar(&inv.r, &t, &rest);
    Ok(report(format!("mkropina-bd(m={m})"), readings, tau, residual_s, def / scale(&inv), tol))
}

/// Conditions on `F = β e^{±α²/β²}` with a fitted `σ`:
/// `r_ij = σ[(±b²/2 − 1) b_i b_j + b² a_ij] + (±1 − 1/b²)(b_i s_j + b_j s_i)`
/// together with the Douglas `s`-equation.
pub fn exp_bd_residual(
    a: &MetricField,
    b: &OneFormField,
    eps: Sign,
    x: &[f64],
    cfg: &DiffConfig,
    tol: f64,
) -> Result<ClassReport> {
    let inv = beta_invariants(a, b, x, cfg)?;
    let residual_s = douglas_defect(&inv)?;
    let e = eps.value();
    let bb = &inv.b_low * inv.b_low.transpose();
    let t = &bb * (0.5 * e * inv.b2 - 1.0) + &inv.a * inv.b2;
    let rest = sym_bs(&inv) * (e - 1.0 / inv.b2);
    let (sigma, def) = fit_scalar(&inv.r, &t, &rest);
    let mut readings = vec!["douglas".to_string()];
    if a.dim() >= 3 {
        readings.push("landsberg".to_string());
    }
    Ok(report(format!("exp-bd({eps})"), readings, sigma, residual_s, def / scale(&inv), tol))
}

fn report(condition: String, readings: Vec<String>, scalar: f64, rs: f64, rr: f64, tol: f64) -> ClassReport {
    let residual = rs.max(rr);
    ClassReport {
        condition,
        readings,
        scalar: Some(scalar),
        residual_s: rs,
        residual_r: rr,
        residual,
        holds: residual <= tol,
    }
}

/// `‖r‖_F / ‖a‖_F`; zero when `β` is a Killing form of `α`.
pub fn killing_residual(a: &MetricField, b: &OneFormField, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let inv = beta_invariants(a, b, x, cfg)?;
    Ok(frobenius(&inv.r) / frobenius(&inv.a))
}

#[derive(Clone, Debug, Serialize)]
pub struct EinsteinReport {
    pub n: usize,
    /// `‖Ric − (R/n)a‖_F / max(1, ‖Ric‖_F)`.
    pub residual: f64,
    /// `R = a^{ij} R_ij`.
    pub scalar_curvature: f64,
    /// The residual is a genuine test only for `n ≥ 3`.
    pub strict: bool,
    pub low_confidence: bool,
}

pub fn einstein_residual(a: &MetricField, x: &[f64], cfg: &DiffConfig, n: usize) -> Result<EinsteinReport> {
    if n != a.dim() {
        return Err(Error::Dimension(format!("metric has dimension {}, asked for {n}", a.dim())));
    }
    let ric = ricci(a, x, cfg)?;
    let (am, inv) = a.factor(x)?;
    let scalar = inv.component_mul(&ric.tensor).sum();
    let defect = &ric.tensor - am * (scalar / n as f64);
    Ok(EinsteinReport {
        n,
        residual: frobenius(&defect) / frobenius(&ric.tensor).max(1.0),
        scalar_curvature: scalar,
        strict: n >= 3,
        low_confidence: ric.low_confidence,
    })
}

/// Largest value of a pointwise residual over a sample set.
pub fn max_over<F>(points: &[Vec<f64>], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let vals: Vec<f64> = points.par_iter().map(|p| f(p)).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Brute-force `s_ij − (b_i s_j − b_j s_i)/b²` from an explicit `b_{i|j}`,
/// used to cross-check the tensor path.
pub fn douglas_defect_from(cov: &DMatrix<f64>, b_low: &DVector<f64>, inv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cov.nrows();
    let b_up = inv * b_low;
    let b2: f64 = b_low.dot(&b_up);
    let s = |i: usize, j: usize| 0.5 * (cov[(i, j)] - cov[(j, i)]);
    let sj = |j: usize| (0..n).map(|i| b_up[i] * s(i, j)).sum::<f64>();
    DMatrix::from_fn(n, n, |i, j| s(i, j) - (b_low[i] * sj(j) - b_low[j] * sj(i)) / b2)
}
