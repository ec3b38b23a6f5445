//! (α,β)-metrics `F = α φ(β/α)` and transformations of the pair `(α, β)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diffgeo::{MetricField, OneFormField, SmoothMap};
use crate::{Error, Result};

/// Branch sign `ε = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied `φ` with its derivative on an open `s`-interval.
#[derive(Clone)]
pub struct GeneralPhi {
    pub phi: ScalarFn,
    pub dphi: ScalarFn,
    pub s_min: f64,
    pub s_max: f64,
}

impl fmt::Debug for GeneralPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneralPhi(s in ({}, {}))", self.s_min, self.s_max)
    }
}

#[derive(Clone, Debug)]
pub enum PhiFamily {
    /// `φ = 1 + s`.
    Randers,
    /// `F = β^m α^{1−m}`, `m ∉ {0, 1}`.
    MKropina { m: f64 },
    /// `F = (α² + kβ²)^{(1−m)/2} β^m`.
    MKropinaType { m: f64, k: f64 },
    /// `F = β e^{ε α²/β²}`.
    ExpType { eps: Sign },
    /// `F = α²/β`, the case `m = −1`.
    Kropina,
    General(GeneralPhi),
}

impl PhiFamily {
    pub fn validate(&self) -> Result<()> {
        let check_m = |m: f64| {
            if !m.is_finite() || m == 0.0 || m == 1.0 {
                Err(Error::Precondition(format!("m-Kropina exponent must avoid 0 and 1, got {m}")))
            } else {
                Ok(())
            }
        };
        match self {
            PhiFamily::MKropina { m } => check_m(*m),
            PhiFamily::MKropinaType { m, k } => {
                check_m(*m)?;
                if k.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Precondition("m-Kropina type needs finite k".into()))
                }
            }
            PhiFamily::General(g) if !(g.s_min < g.s_max) => {
                Err(Error::Precondition("general φ needs a non-empty s-interval".into()))
            }
            _ => Ok(()),
        }
    }

    /// Kropina is reported as `MKropina { m: -1 }`.
    pub fn canonical(&self) -> PhiFamily {
        match self {
            PhiFamily::Kropina => PhiFamily::MKropina { m: -1.0 },
            other => other.clone(),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            PhiFamily::Randers => "randers".into(),
            PhiFamily::MKropina { m } => format!("m-kropina(m={m})"),
            PhiFamily::MKropinaType { m, k } => format!("m-kropina-type(m={m},k={k})"),
            PhiFamily::ExpType { eps } => format!("exp-type({eps})"),
            PhiFamily::Kropina => "kropina".into(),
            PhiFamily::General(_) => "general".into(),
        }
    }

    /// Exponent `m` for the m-Kropina families.
    pub fn kropina_exponent(&self) -> Option<f64> {
        match self.canonical() {
            PhiFamily::MKropina { m } | PhiFamily::MKropinaType { m, .. } => Some(m),
            _ => None,
        }
    }

    /// Singular in `β`: undefined or degenerate where `β = 0`.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            PhiFamily::MKropina { .. }
                | PhiFamily::MKropinaType { .. }
                | PhiFamily::ExpType { .. }
                | PhiFamily::Kropina
        )
    }

    pub fn phi(&self, s: f64) -> f64 {
        match self.canonical() {
            PhiFamily::Randers => 1.0 + s,
            PhiFamily::MKropina { m } => signed_pow(s, m),
            PhiFamily::MKropinaType { m, k } => (1.0 + k * s * s).powf(0.5 * (1.0 - m)) * signed_pow(s, m),
            PhiFamily::ExpType { eps } => s * (eps.value() / (s * s)).exp(),
            PhiFamily::General(g) => (g.phi)(s),
            PhiFamily::Kropina => unreachable!(),
        }
    }

    pub fn dphi(&self, s: f64) -> f64 {
        match self.canonical() {
            PhiFamily::Randers => 1.0,
            PhiFamily::MKropina { m } => m * signed_pow(s, m - 1.0),
            PhiFamily::MKropinaType { m, k } => {
                let q = 1.0 + k * s * s;
                (1.0 - m) * k * s * q.powf(-0.5 * (1.0 + m)) * signed_pow(s, m)
                    + m * signed_pow(s, m - 1.0) * q.powf(0.5 * (1.0 - m))
            }
            PhiFamily::ExpType { eps } => {
                let e = eps.value();
                (e / (s * s)).exp() * (1.0 - 2.0 * e / (s * s))
            }
            PhiFamily::General(g) => (g.dphi)(s),
            PhiFamily::Kropina => unreachable!(),
        }
    }

    /// `Q = φ'/(φ − sφ')`.
    pub fn q_factor(&self, s: f64) -> f64 {
        let d = self.dphi(s);
        d / (self.phi(s) - s * d)
    }

    /// Check the singular-domain rule for one ray with values `α`, `β`.
    pub fn check_domain(&self, alpha: f64, beta: f64) -> Result<()> {
        if !(alpha > 0.0) {
            return Err(Error::DomainViolation(format!("α must be positive, got {alpha}")));
        }
        let integer = |m: f64| m.fract() == 0.0;
        match self.canonical() {
            PhiFamily::MKropina { m } | PhiFamily::MKropinaType { m, .. } => {
                if !integer(m) && !(beta > 0.0) {
                    return Err(Error::DomainViolation(format!(
                        "non-integer m = {m} requires β > 0, got {beta}"
                    )));
                }
                if integer(m) && m < 0.0 && beta == 0.0 {
                    return Err(Error::DomainViolation(format!("m = {m} requires β ≠ 0")));
                }
                if let PhiFamily::MKropinaType { k, .. } = self.canonical() {
                    if !(alpha * alpha + k * beta * beta > 0.0) {
                        return Err(Error::DomainViolation("α² + kβ² must be positive".into()));
                    }
                }
            }
            PhiFamily::ExpType { .. } if beta == 0.0 => {
                return Err(Error::DomainViolation("exp-type metric requires β ≠ 0".into()));
            }
            PhiFamily::General(g) => {
                let s = beta / alpha;
                if !(g.s_min < s && s < g.s_max) {
                    return Err(Error::DomainViolation(format!(
                        "s = {s} outside ({}, {})",
                        g.s_min, g.s_max
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `F` from the values `α`, `β` of one ray.
    pub fn finsler_value(&self, alpha: f64, beta: f64) -> Result<f64> {
        self.check_domain(alpha, beta)?;
        let f = match self.canonical() {
            PhiFamily::Randers => alpha + beta,
            PhiFamily::MKropina { m } => signed_pow(beta, m) * alpha.powf(1.0 - m),
            PhiFamily::MKropinaType { m, k } => {
                (alpha * alpha + k * beta * beta).powf(0.5 * (1.0 - m)) * signed_pow(beta, m)
            }
            PhiFamily::ExpType { eps } => beta * (eps.value() * alpha * alpha / (beta * beta)).exp(),
            PhiFamily::General(_) => alpha * self.phi(beta / alpha),
            PhiFamily::Kropina => unreachable!(),
        };
        if !f.is_finite() {
            return Err(Error::DomainViolation(format!("F is not finite (α = {alpha}, β = {beta})")));
        }
        if !(f > 0.0) {
            return Err(Error::DomainViolation(format!("F = {f} is not positive")));
        }
        Ok(f)
    }
}

/// `s^m` using an integer power whenever `m` is an integer, so that negative
/// bases are allowed there.
fn signed_pow(s: f64, m: f64) -> f64 {
    if m.fract() == 0.0 && m.abs() < i32::MAX as f64 {
        s.powi(m as i32)
    } else {
        s.powf(m)
    }
}

/// A tangent vector `y ≠ 0` at base point `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TangentSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("x has {} and y has {} components", x.len(), y.len())));
        }
        if y.iter().all(|v| *v == 0.0) {
            return Err(Error::Precondition("tangent vector must be non-zero".into()));
        }
        Ok(Self { x, y })
    }
}

#[derive(Clone, Debug)]
pub struct AlphaBetaMetric {
    pub alpha: MetricField,
    pub beta: OneFormField,
    pub phi: PhiFamily,
}

impl AlphaBetaMetric {
    pub fn new(alpha: MetricField, beta: OneFormField, phi: PhiFamily) -> Result<Self> {
        if alpha.dim() != beta.dim() {
            return Err(Error::Dimension(format!(
                "α lives on R^{} and β on R^{}",
                alpha.dim(),
                beta.dim()
            )));
        }
        phi.validate()?;
        Ok(Self { alpha, beta, phi })
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    /// `(α, β)` for the ray `(x, y)`.
    pub fn alpha_beta(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        let a = self.alpha.at(x)?;
        let b = self.beta.at(x)?;
        let yv = DVector::from_column_slice(y);
        Ok((yv.dot(&(&a * &yv)).max(0.0).sqrt(), b.dot(&yv)))
    }

    /// `F(x, y) = α φ(β/α)`.
    pub fn eval_f(&self, sample: &TangentSample) -> Result<f64> {
        let (alpha, beta) = self.alpha_beta(&sample.x, &sample.y)?;
        self.phi.finsler_value(alpha, beta)
    }
}

/// Rescale `(α, β)` so that `||β̃||_α̃ = 1` while leaving `β^m α^{1−m}` unchanged.
///
/// Uses `α̃ = b^m α` and `β̃ = b^{m−1} β` with `b = ||β||_α`.
pub fn kropina_normalize(a: &MetricField, b: &OneFormField, m: f64) -> Result<(MetricField, OneFormField)> {
    PhiFamily::MKropina { m }.validate()?;
    if a.dim() != b.dim() {
        return Err(Error::Dimension("α and β dimensions differ".into()));
    }
    let n = a.dim();
    let metric = MetricField::new(Arc::new(Normalized { a: a.clone(), b: b.clone(), m, part: Part::Metric }))?;
    let form = OneFormField::new(Arc::new(Normalized { a: a.clone(), b: b.clone(), m, part: Part::Form }))?;
    debug_assert_eq!(metric.dim(), n);
    Ok((metric, form))
}

/// Pointwise form of [`kropina_normalize`].
pub fn kropina_normalize_at(
    a: &MetricField,
    b: &OneFormField,
    m: f64,
    x: &[f64],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (am, inv) = a.factor(x)?;
    let bv = b.at(x)?;
    let b2 = bv.dot(&(&inv * &bv));
    if !(b2 > 0.0) {
        return Err(Error::DomainViolation(format!("||β||_α vanishes at {x:?}")));
    }
    Ok((am * b2.powf(m), bv * b2.powf(0.5 * (m - 1.0))))
}

#[derive(Clone, Copy)]
enum Part {
    Metric,
    Form,
}

struct Normalized {
    a: MetricField,
    b: OneFormField,
    m: f64,
    part: Part,
}

impl SmoothMap for Normalized {
    fn dim_in(&self) -> usize {
        self.a.dim()
    }

    fn dim_out(&self) -> usize {
        match self.part {
            Part::Metric => self.a.dim() * self.a.dim(),
            Part::Form => self.a.dim(),
        }
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        match kropina_normalize_at(&self.a, &self.b, self.m, x) {
            Ok((am, bv)) => match self.part {
                Part::Metric => crate::diffgeo::row_major(&am),
                Part::Form => bv.as_slice().to_vec(),
            },
            Err(_) => vec![f64::NAN; self.dim_out()],
        }
    }

    fn domain(&self) -> Option<&crate::diffgeo::DomainBox> {
        self.a.map().domain()
    }
}

/// Scalar function of `t = b²` together with its derivative.
#[derive(Clone)]
pub struct Profile {
    pub value: ScalarFn,
    pub deriv: ScalarFn,
}

impl Profile {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), deriv: Arc::new(deriv) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, |_| 0.0)
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        ((self.value)(t), (self.deriv)(t))
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile(t -> {})", (self.value)(1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleKind {
    /// `u = 1`, `v = 1 − 1/t`, `w = e^{∓1/t}`.
    Special,
    Identity,
    Custom,
}

/// Deformation `α̃² = u(b²) α² + v(b²) β²`, `β̃ = w(b²) β`.
#[derive(Clone, Debug)]
pub struct DeformationTriple {
    pub u: Profile,
    pub v: Profile,
    pub w: Profile,
    pub eps: Sign,
    pub kind: TripleKind,
}

impl DeformationTriple {
    pub fn new(u: Profile, v: Profile, w: Profile, eps: Sign) -> Self {
        Self { u, v, w, eps, kind: TripleKind::Custom }
    }

    /// The closed-form solution of the deformation ODE.
    pub fn special(eps: Sign) -> Self {
        let e = eps.value();
        Self {
            u: Profile::constant(1.0),
            v: Profile::new(|t| 1.0 - 1.0 / t, |t| 1.0 / (t * t)),
            w: Profile::new(move |t| (-e / t).exp(), move |t| e / (t * t) * (-e / t).exp()),
            eps,
            kind: TripleKind::Special,
        }
    }

    pub fn identity(eps: Sign) -> Self {
        Self {
            u: Profile::constant(1.0),
            v: Profile::constant(0.0),
            w: Profile::constant(1.0),
            eps,
            kind: TripleKind::Identity,
        }
    }

    /// Residuals of `u' = u w'/w ∓ u/t²` and `v' = v w'/w − (±v − u)/t²`,
    /// each written as left side minus right side.
    pub fn ode_residual(&self, t: f64) -> (f64, f64) {
        let e = self.eps.value();
        let (u, du) = self.u.at(t);
        let (v, dv) = self.v.at(t);
        let (w, dw) = self.w.at(t);
        let ratio = dw / w;
        let t2 = t * t;
        let res_u = du - (u * ratio - e * u / t2);
        let res_v = dv - (v * ratio - (e * v - u) / t2);
        (res_u, res_v)
    }

    /// Deformed tensors at one point given `a_ij`, `b_i` and `t = b²`.
    pub fn apply(&self, a: &DMatrix<f64>, b: &DVector<f64>, t: f64) -> (DMatrix<f64>, DVector<f64>) {
        let (u, _) = self.u.at(t);
        let (v, _) = self.v.at(t);
        let (w, _) = self.w.at(t);
        (a * u + b * b.transpose() * v, b * w)
    }
}

/// Deformed pair at `x`, with `b²` recomputed from `(a, b)`.
pub fn deform_pair(
    a: &MetricField,
    b: &OneFormField,
    triple: &DeformationTriple,
    x: &[f64],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (am, inv) = a.factor(x)?;
    let bv = b.at(x)?;
    let t = bv.dot(&(&inv * &bv));
    let (u, _) = triple.u.at(t);
    let (w, _) = triple.w.at(t);
    if !(u > 0.0) {
        return Err(Error::Precondition(format!("u(b²) = {u} must be positive at t = {t}")));
    }
    if w == 0.0 || !w.is_finite() {
        return Err(Error::Precondition(format!("w(b²) = {w} must be finite and non-zero")));
    }
    let (at, bt) = triple.apply(&am, &bv, t);
    if at.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(x.to_vec()));
    }
    Ok((at, bt))
}

/// The deformed `(α̃, β̃)` as first-class fields.
pub fn deformed_fields(
    a: &MetricField,
    b: &OneFormField,
    triple: &DeformationTriple,
) -> Result<(MetricField, OneFormField)> {
    let mk = |part| Deformed { a: a.clone(), b: b.clone(), triple: triple.clone(), part };
    Ok((MetricField::new(Arc::new(mk(Part::Metric)))?, OneFormField::new(Arc::new(mk(Part::Form)))?))
}

struct Deformed {
    a: MetricField,
    b: OneFormField,
    triple: DeformationTriple,
    part: Part,
}

impl SmoothMap for Deformed {
    fn dim_in(&self) -> usize {
        self.a.dim()
    }

    fn dim_out(&self) -> usize {
        match self.part {
            Part::Metric => self.a.dim() * self.a.dim(),
            Part::Form => self.a.dim(),
        }
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        match deform_pair(&self.a, &self.b, &self.triple, x) {
            Ok((at, bt)) => match self.part {
                Part::Metric => crate::diffgeo::row_major(&at),
                Part::Form => bt.as_slice().to_vec(),
            },
            Err(_) => vec![f64::NAN; self.dim_out()],
        }
    }

    fn domain(&self) -> Option<&crate::diffgeo::DomainBox> {
        self.a.map().domain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn flat_unit(phi: PhiFamily) -> AlphaBetaMetric {
        AlphaBetaMetric::new(MetricField::flat(2), OneFormField::constant(vec![1.0, 0.0]), phi).unwrap()
    }

    fn sample(y: [f64; 2]) -> TangentSample {
        TangentSample::new(vec![0.1, 0.2], y.to_vec()).unwrap()
    }

    #[test]
    fn evaluates_named_families() {
        let kropina = flat_unit(PhiFamily::Kropina);
        assert!((kropina.eval_f(&sample([2.0, 0.0])).unwrap() - 2.0).abs() < 1e-15);

        let exp = flat_unit(PhiFamily::ExpType { eps: Sign::Plus });
        assert!((exp.eval_f(&sample([1.0, 0.0])).unwrap() - E).abs() < 1e-15);

        let half = flat_unit(PhiFamily::MKropina { m: 0.5 });
        assert!((half.eval_f(&sample([4.0, 3.0])).unwrap() - 20f64.sqrt()).abs() < 1e-14);

        let randers = flat_unit(PhiFamily::Randers);
        assert!((randers.eval_f(&sample([3.0, 4.0])).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn phi_matches_finsler_value() {
        for phi in [
            PhiFamily::Randers,
            PhiFamily::Kropina,
            PhiFamily::MKropina { m: 2.5 },
            PhiFamily::MKropinaType { m: -2.0, k: 0.3 },
            PhiFamily::ExpType { eps: Sign::Minus },
        ] {
            let (alpha, beta) = (1.7, 0.9);
            let f = phi.finsler_value(alpha, beta).unwrap();
            assert!((f - alpha * phi.phi(beta / alpha)).abs() < 1e-12 * f, "{}", phi.tag());
            // analytic φ' against a central difference
            let s = 0.6;
            let h = 1e-6;
            let fd = (phi.phi(s + h) - phi.phi(s - h)) / (2.0 * h);
            assert!((phi.dphi(s) - fd).abs() < 1e-6 * fd.abs().max(1.0), "{}", phi.tag());
        }
    }

    #[test]
    fn singular_domain_rules() {
        let half = PhiFamily::MKropina { m: 0.5 };
        assert!(half.finsler_value(1.0, -0.2).is_err());
        let kropina = PhiFamily::Kropina;
        assert!(matches!(kropina.finsler_value(1.0, 0.0), Err(Error::DomainViolation(_))));
        // allowed by the β ≠ 0 rule but F would be negative
        assert!(kropina.finsler_value(1.0, -0.5).is_err());
        let sq = PhiFamily::MKropina { m: 2.0 };
        assert!(sq.finsler_value(1.0, -0.5).is_ok());
        let exp = PhiFamily::ExpType { eps: Sign::Minus };
        assert!(exp.finsler_value(1.0, 0.0).is_err());
        assert!(PhiFamily::MKropina { m: 1.0 }.validate().is_err());
        assert!(PhiFamily::MKropina { m: 0.0 }.validate().is_err());
    }

    #[test]
    fn exp_type_is_positively_homogeneous() {
        let exp = flat_unit(PhiFamily::ExpType { eps: Sign::Plus });
        let s = sample([0.8, 0.3]);
        let f = exp.eval_f(&s).unwrap();
        for lam in [0.5, 2.0, 7.0] {
            let scaled = TangentSample::new(s.x.clone(), s.y.iter().map(|v| v * lam).collect()).unwrap();
            let g = exp.eval_f(&scaled).unwrap();
            assert!(((g - lam * f) / (lam * f)).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_of_constant_form() {
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![2.0, 0.0]);
        let (an, bn) = kropina_normalize(&a, &b, -1.0).unwrap();
        let x = [0.1, 0.1];
        assert!((an.at(&x).unwrap() - DMatrix::identity(2, 2) * 0.25).amax() < 1e-15);
        assert!((bn.at(&x).unwrap() - DVector::from_vec(vec![0.5, 0.0])).amax() < 1e-15);

        let f0 = AlphaBetaMetric::new(a, b, PhiFamily::Kropina).unwrap();
        let f1 = AlphaBetaMetric::new(an, bn, PhiFamily::Kropina).unwrap();
        let s = sample([0.7, -0.4]);
        assert!((f0.eval_f(&s).unwrap() - f1.eval_f(&s).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn normalization_rejects_vanishing_form() {
        let a = MetricField::flat(2);
        let b = OneFormField::zero(2);
        assert!(kropina_normalize_at(&a, &b, -1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn deformation_examples() {
        let a = MetricField::flat(2);
        let b = OneFormField::constant(vec![1.0, 0.0]);
        let x = [0.2, 0.3];
        let (at, bt) = deform_pair(&a, &b, &DeformationTriple::identity(Sign::Plus), &x).unwrap();
        assert_eq!(at, DMatrix::identity(2, 2));
        assert_eq!(bt, DVector::from_vec(vec![1.0, 0.0]));

        for eps in [Sign::Plus, Sign::Minus] {
            let (at, bt) = deform_pair(&a, &b, &DeformationTriple::special(eps), &x).unwrap();
            assert_eq!(at, DMatrix::identity(2, 2));
            assert!((bt[0] - (-eps.value()).exp()).abs() < 1e-15);
        }

        let custom = DeformationTriple::new(
            Profile::constant(2.0),
            Profile::constant(1.0),
            Profile::constant(3.0),
            Sign::Plus,
        );
        let (at, bt) = deform_pair(&a, &b, &custom, &x).unwrap();
        assert_eq!(at, DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0]));
        assert_eq!(bt, DVector::from_vec(vec![3.0, 0.0]));

        let bad = DeformationTriple::new(
            Profile::constant(1.0),
            Profile::constant(-2.0),
            Profile::constant(1.0),
            Sign::Plus,
        );
        assert!(deform_pair(&a, &b, &bad, &x).is_err());
    }

    #[test]
    fn special_triple_solves_the_ode() {
        for eps in [Sign::Plus, Sign::Minus] {
            let triple = DeformationTriple::special(eps);
            for k in 0..100 {
                let t = 0.5 + 2.5 * k as f64 / 99.0;
                let (ru, rv) = triple.ode_residual(t);
                assert!(ru.abs() <= 1e-10 && rv.abs() <= 1e-10, "t = {t}");
            }
        }
    }

    #[test]
    fn identity_triple_residual() {
        let t: f64 = 2.0;
        for eps in [Sign::Plus, Sign::Minus] {
            let (ru, rv) = DeformationTriple::identity(eps).ode_residual(t);
            assert!((ru - eps.value() * 0.25).abs() < 1e-12);
            assert!((rv + 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_w_leaves_ode_residual_unchanged() {
        let base = DeformationTriple::special(Sign::Minus);
        let scaled = DeformationTriple::new(
            base.u.clone(),
            base.v.clone(),
            Profile::new(|t| 3.5 * (1.0 / t).exp(), |t| -3.5 / (t * t) * (1.0 / t).exp()),
            Sign::Minus,
        );
        for t in [0.6, 1.0, 2.7] {
            let (a, b) = base.ode_residual(t);
            let (c, d) = scaled.ode_residual(t);
            assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
        }
    }
}
