//! Conformal-factor estimation for vector fields on (α,β)-spaces.
//!
//! The complete lift `V^c = V^i ∂/∂x^i + y^i (∂V^j/∂x^i) ∂/∂y^j` acts on
//! `α²` and `β` through two tensors:
//!
//! - `S_ij = V_{i|j} + V_{j|i}`, so `V^c(α²) = S_ij y^i y^j = 2 V_{0|0}`;
//! - `M_i = V^j b_{i|j} + b^j V_{j|i}`, so `V^c(β) = M_i y^i`.
//!
//! Each characterization of conformal fields is linear in the unknown
//! scalars `(c, τ)` once `S` and `M` are known, so the fits here are small
//! linear least-squares problems over the stacked tensor entries. The
//! conformal factor follows the convention `V^c(F) = 2cF`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::diffgeo::{
    frobenius, jet, metric_at, BetaInvariants, Christoffel, DiffConfig, FnMap, MetricField,
    OneFormField, Order, Scheme, VectorFieldOnM,
};
use crate::diffgeo::{oneform_cov_with, vector_cov_with};
use crate::metrics::{deformed_fields, AlphaBetaMetric, DeformationTriple, Sign, TangentSample, TripleKind};
use crate::{Error, Result};

/// Tolerance on `b² = 1` for the unit-norm m-Kropina characterization.
pub const UNIT_NORM_TOL: f64 = 1e-6;
/// ODE residual allowed for a deformation triple used in a lift check.
pub const DEFORMATION_ODE_TOL: f64 = 1e-8;
/// Fewest positive fits for a homothety verdict.
pub const MIN_HOMOTHETY_SAMPLES: usize = 10;
const BETA_VANISHING: f64 = 1e-12;

/// Lie-derivative data of `(α, β)` along `V` at one point.
#[derive(Clone, Debug)]
pub struct LieData {
    pub x: Vec<f64>,
    /// `S_ij = V_{i|j} + V_{j|i}`.
    pub s: DMatrix<f64>,
    /// `M_i = V^j b_{i|j} + b^j V_{j|i}`.
    pub m: DVector<f64>,
    /// `V_{i|j}`.
    pub v_cov: DMatrix<f64>,
    pub v: DVector<f64>,
    pub beta: BetaInvariants,
    pub a_inv: DMatrix<f64>,
}

impl LieData {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.beta.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.beta.b_low
    }

    /// `V_{0|0} = V_{i|j} y^i y^j`.
    pub fn v00(&self, y: &[f64]) -> f64 {
        let y = DVector::from_column_slice(y);
        y.dot(&(&self.v_cov * &y))
    }

    /// `V^c(α²)` predicted by the tensor data.
    pub fn lift_alpha2(&self, y: &[f64]) -> f64 {
        let y = DVector::from_column_slice(y);
        y.dot(&(&self.s * &y))
    }

    /// `V^c(β)` predicted by the tensor data.
    pub fn lift_beta(&self, y: &[f64]) -> f64 {
        self.m.dot(&DVector::from_column_slice(y))
    }

    /// `V^c(b²) = 2 V^j b^i b_{i|j}`.
    pub fn lift_b2(&self) -> f64 {
        2.0 * self.beta.b_up.dot(&(&self.beta.cov * &self.v))
    }
}

pub fn lie_data(
    a: &MetricField,
    b: &OneFormField,
    v: &VectorFieldOnM,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<LieData> {
    if a.dim() != b.dim() || a.dim() != v.dim() {
        return Err(Error::Dimension("α, β and V must share a dimension".into()));
    }
    let m = metric_at(a, x, cfg, Order::First)?;
    let gamma = Christoffel::from_metric(&m);
    let b_cov = oneform_cov_with(&gamma, b, x, cfg)?;
    let v_cov = vector_cov_with(&m, &gamma, v, x, cfg)?;
    let v_up = v.at(x)?;
    let b_low = b.at(x)?;
    let beta = BetaInvariants::from_parts(b_cov, b_low, m.a.clone(), &m.inv);

    let s = &v_cov + v_cov.transpose();
    let mvec = &beta.cov * &v_up + v_cov.transpose() * &beta.b_up;
    Ok(LieData { x: x.to_vec(), s, m: mvec, v_cov, v: v_up, beta, a_inv: m.inv })
}

/// `V^c(f)` for a function `f(x, y)` on the tangent bundle.
///
/// Partials of `f` are taken by central differences (`Central4` unless the
/// configuration asks for `Central2`); `∂V` uses the field's jets.
pub fn complete_lift_apply(
    v: &VectorFieldOnM,
    f: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    sample: &TangentSample,
    cfg: &DiffConfig,
) -> Result<f64> {
    let n = v.dim();
    let (x, y) = (&sample.x, &sample.y);
    if x.len() != n || y.len() != n {
        return Err(Error::Dimension("sample does not match the field dimension".into()));
    }
    let vj = jet(v.map(), x, Order::First, cfg)?;
    let fd_cfg = DiffConfig {
        scheme: if cfg.scheme == Scheme::Central2 { Scheme::Central2 } else { Scheme::Central4 },
        ..*cfg
    };
    let in_x = FnMap::new(n, 1, |p: &[f64]| vec![f(p, y)]);
    let in_y = FnMap::new(n, 1, |q: &[f64]| vec![f(x, q)]);
    let dfx = jet(&in_x, x, Order::First, &fd_cfg)?.first;
    let dfy = jet(&in_y, y, Order::First, &fd_cfg)?.first;

    let mut acc = 0.0;
    for i in 0..n {
        acc += vj.value[i] * dfx[(0, i)];
        for j in 0..n {
            acc += y[i] * vj.first[(j, i)] * dfy[(0, j)];
        }
    }
    Ok(acc)
}

/// `V^c` of `α²` and `β`, each compared with the tensor prediction.
#[derive(Clone, Debug, Serialize)]
pub struct LiftIdentity {
    pub lift_alpha2: f64,
    pub twice_v00: f64,
    pub lift_beta: f64,
    pub m_dot_y: f64,
    /// `|V^c(α²) − 2V_{0|0}| / max(1, |V^c(α²)|)`.
    pub alpha_defect: f64,
    /// `|V^c(β) − M_i y^i| / max(1, |V^c(β)|)`.
    pub beta_defect: f64,
}

pub fn lift_identity(
    a: &MetricField,
    b: &OneFormField,
    v: &VectorFieldOnM,
    sample: &TangentSample,
    cfg: &DiffConfig,
) -> Result<LiftIdentity> {
    let lie = lie_data(a, b, v, &sample.x, cfg)?;
    let alpha2 = |x: &[f64], y: &[f64]| quad(a, x, y);
    let beta = |x: &[f64], y: &[f64]| linear(b, x, y);
    let lift_alpha2 = complete_lift_apply(v, &alpha2, sample, cfg)?;
    let lift_beta = complete_lift_apply(v, &beta, sample, cfg)?;
    let twice_v00 = 2.0 * lie.v00(&sample.y);
    let m_dot_y = lie.lift_beta(&sample.y);
    Ok(LiftIdentity {
        lift_alpha2,
        twice_v00,
        lift_beta,
        m_dot_y,
        alpha_defect: (lift_alpha2 - twice_v00).abs() / lift_alpha2.abs().max(1.0),
        beta_defect: (lift_beta - m_dot_y).abs() / lift_beta.abs().max(1.0),
    })
}

fn quad(a: &MetricField, x: &[f64], y: &[f64]) -> f64 {
    match a.at(x) {
        Ok(m) => {
            let y = DVector::from_column_slice(y);
            y.dot(&(&m * &y))
        }
        Err(_) => f64::NAN,
    }
}

fn linear(b: &OneFormField, x: &[f64], y: &[f64]) -> f64 {
    match b.at(x) {
        Ok(bv) => bv.iter().zip(y).map(|(p, q)| p * q).sum(),
        Err(_) => f64::NAN,
    }
}

/// Which characterization the tensor fit uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FitFamily {
    /// `S = 4c·a`, `M = 2c·b`.
    Theorem1,
    /// Same equations, valid for `β^m α^{1−m}` once `b² = 1`.
    MKropinaUnitB,
    /// `S = 2τ·a − (2k(2c−τ)/m)·b⊗b`, `M = (τ + (2c−τ)/m)·b`.
    MKropinaType { k: f64, m: f64 },
    /// `S = 2τ·a + ε(2c−τ)·b⊗b`, `M = τ·b`.
    ExpType { eps: Sign },
}

impl FitFamily {
    pub fn tag(&self) -> String {
        match self {
            FitFamily::Theorem1 => "theorem1".into(),
            FitFamily::MKropinaUnitB => "mkropina-unit-b".into(),
            FitFamily::MKropinaType { k, m } => format!("mkropina-type(k={k},m={m})"),
            FitFamily::ExpType { eps } => format!("exp-type({eps})"),
        }
    }

    fn unknowns(&self) -> usize {
        match self {
            FitFamily::Theorem1 | FitFamily::MKropinaUnitB => 1,
            _ => 2,
        }
    }

    /// The tensor characterization matching a φ-family at a point with norm `b²`.
    pub fn for_phi(phi: &crate::metrics::PhiFamily, b2: f64) -> FitFamily {
        use crate::metrics::PhiFamily;
        match phi.canonical() {
            PhiFamily::MKropina { m } if (b2 - 1.0).abs() <= UNIT_NORM_TOL => {
                let _ = m;
                FitFamily::MKropinaUnitB
            }
            PhiFamily::MKropina { m } => FitFamily::MKropinaType { k: 0.0, m },
            PhiFamily::MKropinaType { m, k } => FitFamily::MKropinaType { k, m },
            PhiFamily::ExpType { eps } => FitFamily::ExpType { eps },
            _ => FitFamily::Theorem1,
        }
    }

    /// Basis tensors `(A_p, B_p)` with `S = Σ θ_p A_p`, `M = Σ θ_p B_p`.
    /// Unknowns are `(c)` or `(τ, c)`.
    fn basis(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<(DMatrix<f64>, DVector<f64>)> {
        let bb = b * b.transpose();
        match *self {
            FitFamily::Theorem1 | FitFamily::MKropinaUnitB => vec![(a * 4.0, b * 2.0)],
            FitFamily::ExpType { eps } => {
                let e = eps.value();
                vec![(a * 2.0 - &bb * e, b.clone()), (&bb * (2.0 * e), b * 0.0)]
            }
            FitFamily::MKropinaType { k, m } => vec![
                (a * 2.0 + &bb * (2.0 * k / m), b * (1.0 - 1.0 / m)),
                (&bb * (-4.0 * k / m), b * (2.0 / m)),
            ],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalFit {
    pub family: FitFamily,
    pub c_hat: f64,
    pub tau_hat: Option<f64>,
    /// `‖S − Ŝ‖_F / ‖a‖_F`.
    pub residual_s: f64,
    /// `‖M − M̂‖ / max(1, ||β||_α)`.
    pub residual_m: f64,
    pub conformal: bool,
    /// Rank-deficient normal equations or vanishing `β`.
    pub reduced_rank: bool,
}

impl ConformalFit {
    pub fn max_residual(&self) -> f64 {
        self.residual_s.max(self.residual_m)
    }
}

pub fn fit_conformal(
    family: FitFamily,
    a: &MetricField,
    b: &OneFormField,
    v: &VectorFieldOnM,
    x: &[f64],
    cfg: &DiffConfig,
    tol: f64,
) -> Result<ConformalFit> {
    fit_lie(family, &lie_data(a, b, v, x, cfg)?, tol)
}

/// Least-squares fit of the family's scalars to precomputed Lie data.
pub fn fit_lie(family: FitFamily, lie: &LieData, tol: f64) -> Result<ConformalFit> {
    let b2 = lie.beta.b2;
    match family {
        FitFamily::MKropinaUnitB if (b2 - 1.0).abs() > UNIT_NORM_TOL => {
            return Err(Error::Precondition(format!(
                "unit-norm m-Kropina fit needs ||β||_α = 1, got b² = {b2}; rescale with kropina_normalize"
            )));
        }
        FitFamily::MKropinaType { m, .. } if !m.is_finite() || m == 0.0 || m == 1.0 => {
            return Err(Error::Precondition(format!("m-Kropina exponent must avoid 0 and 1, got {m}")));
        }
        _ => {}
    }

    let a = lie.a();
    let b = lie.b();
    let n = a.nrows();
    let b_norm = b2.sqrt();
    let beta_vanishes = b_norm < BETA_VANISHING;
    let wa = frobenius(a);
    let wm = b_norm.max(1.0);
    let basis = family.basis(a, b);
    let p = family.unknowns();

    let rows = if beta_vanishes { n * n } else { n * n + n };
    let mut design = DMatrix::zeros(rows, p);
    let mut rhs = DVector::zeros(rows);
    for i in 0..n {
        for j in 0..n {
            let r = i * n + j;
            rhs[r] = lie.s[(i, j)] / wa;
            for (q, (sa, _)) in basis.iter().enumerate() {
                design[(r, q)] = sa[(i, j)] / wa;
            }
        }
    }
    if !beta_vanishes {
        for i in 0..n {
            let r = n * n + i;
            rhs[r] = lie.m[i] / wm;
            for (q, (_, mb)) in basis.iter().enumerate() {
                design[(r, q)] = mb[i] / wm;
            }
        }
    }

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = 1e-10 * smax;
    let rank = svd.singular_values.iter().filter(|s| **s > cut && **s > 0.0).count();
    let theta = if smax > 0.0 {
        svd.solve(&rhs, cut).map_err(|e| Error::Degenerate(e.to_string()))?
    } else {
        DVector::zeros(p)
    };

    let mut s_model = DMatrix::zeros(n, n);
    let mut m_model = DVector::zeros(n);
    for (q, (sa, mb)) in basis.iter().enumerate() {
        s_model += sa * theta[q];
        m_model += mb * theta[q];
    }
    let residual_s = frobenius(&(&lie.s - s_model)) / wa;
    let residual_m = (&lie.m - m_model).norm() / wm;
    let (c_hat, tau_hat) = if p == 1 { (theta[0], None) } else { (theta[1], Some(theta[0])) };

    Ok(ConformalFit {
        family,
        c_hat,
        tau_hat,
        residual_s,
        residual_m,
        conformal: residual_s.max(residual_m) <= tol,
        reduced_rank: beta_vanishes || rank < p,
    })
}

/// Ray-sampled fit of `V^c(F²) = 4cF²` at one base point.
#[derive(Clone, Debug, Serialize)]
pub struct PointDefect {
    pub x: Vec<f64>,
    pub rays: usize,
    pub c_hat: f64,
    /// `sqrt(Σ (V^c(F²) − 4ĉF²)²) / sqrt(Σ F⁴)`.
    pub defect: f64,
}

/// Family-agnostic check using `F` itself; consecutive samples sharing a
/// base point form one group, each with at least `n + 1` rays.
pub fn direct_defect(
    metric: &AlphaBetaMetric,
    v: &VectorFieldOnM,
    samples: &[TangentSample],
    cfg: &DiffConfig,
) -> Result<Vec<PointDefect>> {
    let n = metric.dim();
    let f2 = |x: &[f64], y: &[f64]| {
        metric
            .alpha_beta(x, y)
            .and_then(|(al, be)| metric.phi.finsler_value(al, be))
            .map(|f| f * f)
            .unwrap_or(f64::NAN)
    };

    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let x = &samples[start].x;
        let end = samples[start..]
            .iter()
            .position(|s| &s.x != x)
            .map_or(samples.len(), |k| start + k);
        let group = &samples[start..end];
        if group.len() < n + 1 {
            return Err(Error::Precondition(format!(
                "direct defect needs at least {} rays per point, got {} at {x:?}",
                n + 1,
                group.len()
            )));
        }
        let mut lifts = Vec::with_capacity(group.len());
        let mut squares = Vec::with_capacity(group.len());
        for s in group {
            let fsq = f2(&s.x, &s.y);
            if !fsq.is_finite() {
                metric.eval_f(s)?;
                return Err(Error::NonFinite(s.x.clone()));
            }
            lifts.push(complete_lift_apply(v, &f2, s, cfg)?);
            squares.push(fsq);
        }
        let num: f64 = lifts.iter().zip(&squares).map(|(l, f)| l * f).sum();
        let den: f64 = squares.iter().map(|f| f * f).sum();
        let c_hat = num / (4.0 * den);
        let res: f64 = lifts
            .iter()
            .zip(&squares)
            .map(|(l, f)| (l - 4.0 * c_hat * f).powi(2))
            .sum();
        out.push(PointDefect { x: x.clone(), rays: group.len(), c_hat, defect: (res / den).sqrt() });
        start = end;
    }
    Ok(out)
}

/// Fitted conformal factor over a set of sample points.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FactorField {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl FactorField {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Self {
        Self { points, values }
    }

    /// Keeps only the points whose fit verdict is positive.
    pub fn from_fits(points: &[Vec<f64>], fits: &[ConformalFit]) -> Self {
        let (points, values) = points
            .iter()
            .zip(fits)
            .filter(|(_, f)| f.conformal)
            .map(|(p, f)| (p.clone(), f.c_hat))
            .unzip();
        Self { points, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    /// `max − min` of the fitted values.
    pub fn spread(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Largest difference quotient `|Δc| / |Δx|` over all pairs.
    pub fn max_gradient(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let dx = self.points[i]
                    .iter()
                    .zip(&self.points[j])
                    .map(|(p, q)| (p - q).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if dx > 0.0 {
                    worst = worst.max((self.values[i] - self.values[j]).abs() / dx);
                }
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomothetyVerdict {
    Homothetic,
    Killing,
    NonHomothetic,
    Inconclusive,
}

impl HomothetyVerdict {
    pub fn is_homothetic(self) -> bool {
        matches!(self, HomothetyVerdict::Homothetic | HomothetyVerdict::Killing)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomothetyReport {
    pub verdict: HomothetyVerdict,
    pub samples: usize,
    pub mean: f64,
    pub spread: f64,
    pub max_gradient: f64,
}

/// Homothetic when the spread of the factor is within `tol·max(1, |mean|)`;
/// Killing when additionally `|mean| ≤ tol`.
pub fn homothety_test(field: &FactorField, tol: f64) -> HomothetyReport {
    let mean = field.mean();
    let spread = field.spread();
    let verdict = if field.len() < MIN_HOMOTHETY_SAMPLES {
        HomothetyVerdict::Inconclusive
    } else if spread <= tol * mean.abs().max(1.0) {
        if mean.abs() <= tol {
            HomothetyVerdict::Killing
        } else {
            HomothetyVerdict::Homothetic
        }
    } else {
        HomothetyVerdict::NonHomothetic
    };
    HomothetyReport { verdict, samples: field.len(), mean, spread, max_gradient: field.max_gradient() }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma51Point {
    pub sigma: f64,
    pub tau: f64,
    pub rho: f64,
    pub residual_s: f64,
    pub residual_m: f64,
    pub residual_conformal_beta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma51Report {
    pub points: Vec<Lemma51Point>,
    /// Largest defect of `S = σ·a`.
    pub hypothesis_s: f64,
    /// Largest defect of `M = τ·b`.
    pub hypothesis_m: f64,
    /// Largest defect of `r = ρ·a` (β conformal for α).
    pub beta_conformal: f64,
    pub applicable: bool,
    /// Spread of `τ − σ` across the points.
    pub spread: f64,
    /// `Some(spread ≤ tol)` when the hypotheses hold, `None` otherwise.
    pub conclusion_holds: Option<bool>,
}

/// Checks the hypotheses `S = σa`, `M = τb`, `r = ρa` at every point and,
/// when all hold, whether `τ − σ` is constant.
pub fn lemma51_test(
    a: &MetricField,
    b: &OneFormField,
    v: &VectorFieldOnM,
    points: &[Vec<f64>],
    cfg: &DiffConfig,
    tol: f64,
) -> Result<Lemma51Report> {
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        let lie = lie_data(a, b, v, x, cfg)?;
        let am = lie.a();
        let bv = lie.b();
        let wa = frobenius(am);
        let aa = am.dot(am);
        let sigma = lie.s.dot(am) / aa;
        let residual_s = frobenius(&(&lie.s - am * sigma)) / wa;
        let bb = bv.dot(bv);
        let tau = if bb > 0.0 { lie.m.dot(bv) / bb } else { 0.0 };
        let residual_m = (&lie.m - bv * tau).norm() / lie.beta.b2.sqrt().max(1.0);
        let rho = lie.beta.r.dot(am) / aa;
        let residual_conformal_beta = frobenius(&(&lie.beta.r - am * rho)) / wa;
        out.push(Lemma51Point { sigma, tau, rho, residual_s, residual_m, residual_conformal_beta });
    }
    let max = |f: fn(&Lemma51Point) -> f64| out.iter().map(f).fold(0.0_f64, f64::max);
    let hypothesis_s = max(|p| p.residual_s);
    let hypothesis_m = max(|p| p.residual_m);
    let beta_conformal = max(|p| p.residual_conformal_beta);
    let diffs: Vec<f64> = out.iter().map(|p| p.tau - p.sigma).collect();
    let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if diffs.is_empty() { 0.0 } else { spread };
    let applicable = !out.is_empty() && hypothesis_s <= tol && hypothesis_m <= tol && beta_conformal <= tol;
    Ok(Lemma51Report {
        points: out,
        hypothesis_s,
        hypothesis_m,
        beta_conformal,
        applicable,
        spread,
        conclusion_holds: applicable.then_some(spread <= tol),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VcB2Report {
    pub tau: f64,
    pub c: f64,
    /// `V^c(b²)`.
    pub lift: f64,
    /// `ε(τ − 2c)b⁴`.
    pub predicted: f64,
    pub residual: f64,
}

/// Compares `V^c(b²)` with `ε(τ − 2c)b⁴` using a positive exp-type fit.
pub fn vc_b2_check(
    a: &MetricField,
    b: &OneFormField,
    v: &VectorFieldOnM,
    x: &[f64],
    eps: Sign,
    cfg: &DiffConfig,
    tol: f64,
) -> Result<VcB2Report> {
    let lie = lie_data(a, b, v, x, cfg)?;
    let fit = fit_lie(FitFamily::ExpType { eps }, &lie, tol)?;
    if !fit.conformal {
        return Err(Error::Precondition(format!(
            "exp-type fit is not conformal at {x:?} (residual {:e})",
            fit.max_residual()
        )));
    }
    let tau = fit.tau_hat.unwrap_or(0.0);
    let b4 = lie.beta.b2 * lie.beta.b2;
    let lift = lie.lift_b2();
    let predicted = eps.value() * (tau - 2.0 * fit.c_hat) * b4;
    Ok(VcB2Report {
        tau,
        c: fit.c_hat,
        lift,
        predicted,
        residual: (lift - predicted).abs() / b4.max(1.0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DeformedLiftReport {
    pub tau: f64,
    pub c: f64,
    pub t: f64,
    /// Predicted `V^c(α̃²)/α̃²`.
    pub alpha_factor: f64,
    /// Predicted `V^c(β̃)/β`.
    pub beta_factor: f64,
    pub residual_alpha: f64,
    pub residual_beta: f64,
    /// For the special triple: residuals of `V^c(α̃²) = 2τα̃²` and
    /// `V^c(β̃) = 2(τ − c)β̃`.
    pub special: Option<(f64, f64)>,
}

impl DeformedLiftReport {
    pub fn max_residual(&self) -> f64 {
        let sp = self.special.map_or(0.0, |(p, q)| p.max(q));
        self.residual_alpha.max(self.residual_beta).max(sp)
    }
}

/// Evaluates `V^c(α̃²)` and `V^c(β̃)` on the deformed pair and compares them
/// with the values predicted from the exp-type scalars `(τ, c)`.
///
/// The `α̃²` coefficient used is `(2c + τ) ± (τ − 2c) b⁴ w'/w`, which is
/// invariant under `(u, v) → κ(u, v)`.
pub fn deformed_lift_check(
    a: &MetricField,
    b: &OneFormField,
    v: &VectorFieldOnM,
    triple: &DeformationTriple,
    x: &[f64],
    cfg: &DiffConfig,
    tol: f64,
) -> Result<DeformedLiftReport> {
    let eps = triple.eps;
    let lie = lie_data(a, b, v, x, cfg)?;
    let fit = fit_lie(FitFamily::ExpType { eps }, &lie, tol)?;
    if !fit.conformal {
        return Err(Error::Precondition(format!(
            "exp-type fit is not conformal at {x:?} (residual {:e})",
            fit.max_residual()
        )));
    }
    let t = lie.beta.b2;
    let (ru, rv) = triple.ode_residual(t);
    if ru.abs().max(rv.abs()) > DEFORMATION_ODE_TOL {
        return Err(Error::Precondition(format!(
            "deformation triple violates its ODE at t = {t} (residuals {ru:e}, {rv:e})"
        )));
    }

    let tau = fit.tau_hat.unwrap_or(0.0);
    let c = fit.c_hat;
    let e = eps.value();
    let (w, dw) = triple.w.at(t);
    let alpha_factor = (2.0 * c + tau) + e * (tau - 2.0 * c) * t * t * dw / w;
    let beta_factor = w * tau + e * (tau - 2.0 * c) * t * t * dw;

    let (at, bt) = deformed_fields(a, b, triple)?;
    let alpha2 = |p: &[f64], y: &[f64]| quad(&at, p, y);
    let beta = |p: &[f64], y: &[f64]| linear(&bt, p, y);
    let n = a.dim();
    let mut rays: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    rays.push(vec![1.0; n]);

    let bx = b.at(x)?;
    let mut residual_alpha = 0.0_f64;
    let mut residual_beta = 0.0_f64;
    let mut special = (0.0_f64, 0.0_f64);
    for y in rays {
        let sample = TangentSample::new(x.to_vec(), y.clone())?;
        let la = complete_lift_apply(v, &alpha2, &sample, cfg)?;
        let lb = complete_lift_apply(v, &beta, &sample, cfg)?;
        let at2 = alpha2(x, &y);
        let beta_y: f64 = bx.iter().zip(&y).map(|(p, q)| p * q).sum();
        let bt_y = beta(x, &y);

        let pa = alpha_factor * at2;
        let pb = beta_factor * beta_y;
        residual_alpha = residual_alpha.max((la - pa).abs() / pa.abs().max(1.0));
        residual_beta = residual_beta.max((lb - pb).abs() / pb.abs().max(1.0));

        let sa = 2.0 * tau * at2;
        let sb = 2.0 * (tau - c) * bt_y;
        special.0 = special.0.max((la - sa).abs() / sa.abs().max(1.0));
        special.1 = special.1.max((lb - sb).abs() / sb.abs().max(1.0));
    }

    Ok(DeformedLiftReport {
        tau,
        c,
        t,
        alpha_factor,
        beta_factor,
        residual_alpha,
        residual_beta,
        special: (triple.kind == TripleKind::Special).then_some(special),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::PhiFamily;

    fn c4() -> DiffConfig {
        DiffConfig::with_scheme(Scheme::Central4)
    }

    fn dilation(n: usize, lam: f64) -> VectorFieldOnM {
        VectorFieldOnM::from_fn(n, move |x| x.iter().map(|v| lam * v).collect())
    }

    fn moebius(k: [f64; 2]) -> VectorFieldOnM {
        VectorFieldOnM::from_fn(2, move |x| {
            let xk = x[0] * k[0] + x[1] * k[1];
            let r2 = x[0] * x[0] + x[1] * x[1];
            vec![2.0 * xk * x[0] - r2 * k[0], 2.0 * xk * x[1] - r2 * k[1]]
        })
    }

    #[test]
    fn lie_data_of_linear_fields() {
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        let lie = lie_data(&a, &b, &dilation(2, 0.6), &[0.2, 0.1], &c4()).unwrap();
        assert!((&lie.s - DMatrix::identity(2, 2) * 1.2).amax() < 1e-9);
        assert!((&lie.m - DVector::from_vec(vec![0.6, 0.0])).amax() < 1e-9);

        let q = [[0.0, 1.5], [-1.5, 0.0]];
        let rot = VectorFieldOnM::from_fn(2, move |x| {
            vec![q[0][0] * x[0] + q[0][1] * x[1], q[1][0] * x[0] + q[1][1] * x[1]]
        });
        let lie = lie_data(&a, &b, &rot, &[0.2, 0.1], &c4()).unwrap();
        assert!(lie.s.amax() < 1e-9);
        // M_i = b^j Q_ji
        assert!((lie.m[0] - q[0][0]).abs() < 1e-9 && (lie.m[1] - q[0][1]).abs() < 1e-9);

        let zero = lie_data(&a, &b, &VectorFieldOnM::zero(2), &[0.2, 0.1], &c4()).unwrap();
        assert_eq!(zero.s.amax(), 0.0);
        assert_eq!(zero.m.amax(), 0.0);
    }

    #[test]
    fn complete_lift_examples() {
        let v = dilation(2, 0.7);
        let s = TangentSample::new(vec![0.3, -0.2], vec![1.0, 2.0]).unwrap();
        let constant = |_: &[f64], _: &[f64]| 3.0;
        assert!(complete_lift_apply(&v, &constant, &s, &c4()).unwrap().abs() < 1e-12);
        let alpha2 = |_: &[f64], y: &[f64]| y[0] * y[0] + y[1] * y[1];
        let lifted = complete_lift_apply(&v, &alpha2, &s, &c4()).unwrap();
        assert!((lifted - 2.0 * 0.7 * 5.0).abs() < 1e-9);
    }

    #[test]
    fn lift_identity_on_curved_background() {
        let a = MetricField::from_fn(2, |x| {
            DMatrix::from_row_slice(2, 2, &[1.0 + x[0] * x[0], 0.2 * x[1], 0.2 * x[1], 2.0 + x[0] * x[1]])
        });
        let b = OneFormField::from_fn(2, |x| vec![x[0] * x[1] + 1.0, x[0].sin()]);
        let v = VectorFieldOnM::from_fn(2, |x| vec![x[1] * x[1] - x[0], 0.5 * x[0] * x[1] + 0.2]);
        let s = TangentSample::new(vec![0.3, -0.4], vec![0.6, 0.9]).unwrap();
        let id = lift_identity(&a, &b, &v, &s, &c4()).unwrap();
        assert!(id.alpha_defect < 1e-8, "{id:?}");
        assert!(id.beta_defect < 1e-8, "{id:?}");
    }

    #[test]
    fn randers_fit_of_dilation() {
        let lam = 0.8;
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        for family in [FitFamily::Theorem1, FitFamily::MKropinaUnitB] {
            let fit = fit_conformal(family, &a, &b, &dilation(2, lam), &[0.1, 0.3], &c4(), 1e-9).unwrap();
            assert!((fit.c_hat - lam / 2.0).abs() < 1e-9);
            assert!(fit.conformal && !fit.reduced_rank);
        }
    }

    #[test]
    fn exp_fit_of_dilation() {
        let lam = 0.8;
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        for eps in [Sign::Plus, Sign::Minus] {
            let fit =
                fit_conformal(FitFamily::ExpType { eps }, &a, &b, &dilation(2, lam), &[0.1, 0.3], &c4(), 1e-9)
                    .unwrap();
            assert!((fit.tau_hat.unwrap() - lam).abs() < 1e-9);
            assert!((fit.c_hat - lam / 2.0).abs() < 1e-9);
            assert!(fit.conformal);
        }
    }

    #[test]
    fn moebius_is_not_conformal_for_constant_form() {
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        let fit = fit_conformal(FitFamily::Theorem1, &a, &b, &moebius([0.0, 1.0]), &[0.4, 0.2], &c4(), 1e-6)
            .unwrap();
        assert!(fit.residual_m > 0.01, "{fit:?}");
        assert!(!fit.conformal);
    }

    #[test]
    fn unit_norm_precondition() {
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![2.0, 0.0]);
        let err = fit_conformal(FitFamily::MKropinaUnitB, &a, &b, &dilation(2, 1.0), &[0.0, 0.0], &c4(), 1e-6);
        assert!(matches!(err, Err(Error::Precondition(_))));
        let err = fit_conformal(
            FitFamily::MKropinaType { k: 0.0, m: 1.0 },
            &a,
            &b,
            &dilation(2, 1.0),
            &[0.0, 0.0],
            &c4(),
            1e-6,
        );
        assert!(err.is_err());
    }

    #[test]
    fn vanishing_form_reduces_rank() {
        let a = MetricField::flat(2);
        let b = OneFormField::zero(2);
        let t1 = fit_conformal(FitFamily::Theorem1, &a, &b, &dilation(2, 0.5), &[0.1, 0.1], &c4(), 1e-9).unwrap();
        assert!(t1.reduced_rank && t1.conformal);
        assert!((t1.c_hat - 0.25).abs() < 1e-9);
        let ex = fit_conformal(
            FitFamily::ExpType { eps: Sign::Plus },
            &a,
            &b,
            &dilation(2, 0.5),
            &[0.1, 0.1],
            &c4(),
            1e-9,
        )
        .unwrap();
        assert!(ex.reduced_rank);
    }

    #[test]
    fn mkropina_type_fit_recovers_synthetic_scalars() {
        // Build S and M from chosen (τ, c) and check the fit inverts them.
        let a = MetricField::flat(3);
        let b = OneFormField::constant(vec![0.3, -0.5, 0.8]);
        let mut lie = lie_data(&a, &b, &VectorFieldOnM::zero(3), &[0.0, 0.0, 0.0], &c4()).unwrap();
        let (k, m, tau, c) = (0.4, -2.0, 0.7, -0.3);
        let family = FitFamily::MKropinaType { k, m };
        let basis = family.basis(lie.a(), lie.b());
        lie.s = &basis[0].0 * tau + &basis[1].0 * c;
        lie.m = &basis[0].1 * tau + &basis[1].1 * c;
        let fit = fit_lie(family, &lie, 1e-12).unwrap();
        assert!((fit.tau_hat.unwrap() - tau).abs() < 1e-12);
        assert!((fit.c_hat - c).abs() < 1e-12);
    }

    #[test]
    fn direct_defect_examples() {
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        let metric = AlphaBetaMetric::new(a.clone(), b.clone(), PhiFamily::ExpType { eps: Sign::Plus }).unwrap();
        let x = vec![0.2, -0.1];
        let rays = [[1.0, 0.2], [0.8, -0.5], [0.6, 0.6], [1.0, -0.9]];
        let samples: Vec<_> = rays.iter().map(|y| TangentSample::new(x.clone(), y.to_vec()).unwrap()).collect();
        let d = direct_defect(&metric, &dilation(2, 0.9), &samples, &c4()).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].c_hat - 0.45).abs() < 1e-6);
        assert!(d[0].defect < 1e-7);

        let zero = direct_defect(&metric, &VectorFieldOnM::zero(2), &samples, &c4()).unwrap();
        assert_eq!(zero[0].c_hat, 0.0);
        assert_eq!(zero[0].defect, 0.0);

        assert!(direct_defect(&metric, &VectorFieldOnM::zero(2), &samples[..2], &c4()).is_err());
    }

    #[test]
    fn homothety_verdicts() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.01, 0.0]).collect();
        let constant = FactorField::new(pts.clone(), vec![0.4 + 1e-13; 12]);
        assert_eq!(homothety_test(&constant, 1e-9).verdict, HomothetyVerdict::Homothetic);
        let zero = FactorField::new(pts.clone(), vec![0.0; 12]);
        assert_eq!(homothety_test(&zero, 1e-9).verdict, HomothetyVerdict::Killing);
        let varying = FactorField::new(pts.clone(), pts.iter().map(|p| p[0]).collect());
        let rep = homothety_test(&varying, 1e-6);
        assert_eq!(rep.verdict, HomothetyVerdict::NonHomothetic);
        assert!((rep.max_gradient - 1.0).abs() < 1e-9);
        let few = FactorField::new(pts[..3].to_vec(), vec![0.0; 3]);
        assert_eq!(homothety_test(&few, 1e-6).verdict, HomothetyVerdict::Inconclusive);
    }

    #[test]
    fn tau_minus_sigma_on_dilation() {
        let lam = 0.6;
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 * i as f64, -0.05 * i as f64]).collect();
        let rep = lemma51_test(&a, &b, &dilation(2, lam), &pts, &c4(), 1e-8).unwrap();
        assert!(rep.applicable);
        assert!((rep.points[0].sigma - 2.0 * lam).abs() < 1e-9);
        assert!((rep.points[0].tau - lam).abs() < 1e-9);
        assert_eq!(rep.conclusion_holds, Some(true));

        let zero = lemma51_test(&a, &b, &VectorFieldOnM::zero(2), &pts, &c4(), 1e-8).unwrap();
        assert_eq!(zero.spread, 0.0);
        assert!(zero.points.iter().all(|p| p.sigma == 0.0 && p.tau == 0.0));
    }

    #[test]
    fn vc_b2_and_deformation_on_dilation() {
        let lam = 0.9;
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        let v = dilation(2, lam);
        let x = [0.1, 0.2];
        let rep = vc_b2_check(&a, &b, &v, &x, Sign::Plus, &c4(), 1e-9).unwrap();
        assert!(rep.residual < 1e-9, "{rep:?}");

        let moe = moebius([0.0, 1.0]);
        assert!(matches!(
            vc_b2_check(&a, &b, &moe, &[0.4, 0.2], Sign::Plus, &c4(), 1e-6),
            Err(Error::Precondition(_))
        ));

        let triple = DeformationTriple::special(Sign::Plus);
        let rep = deformed_lift_check(&a, &b, &v, &triple, &x, &c4(), 1e-9).unwrap();
        assert!((rep.beta_factor - (-1f64).exp() * lam).abs() < 1e-9);
        assert!(rep.max_residual() < 1e-8, "{rep:?}");

        let ident = DeformationTriple::identity(Sign::Plus);
        assert!(matches!(
            deformed_lift_check(&a, &b, &v, &ident, &x, &c4(), 1e-9),
            Err(Error::Precondition(_))
        ));

        let zero = deformed_lift_check(&a, &b, &VectorFieldOnM::zero(2), &triple, &x, &c4(), 1e-9).unwrap();
        assert_eq!(zero.alpha_factor, 0.0);
        assert!(zero.max_residual() < 1e-12);
    }
}
