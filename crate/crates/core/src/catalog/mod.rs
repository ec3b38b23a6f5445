//! Ready-made scenarios: the Kropina–Douglas example family, fixed analytic
//! backgrounds, and scenarios assembled from coefficient tables.

mod example1;
mod poly;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diffgeo::{AffineMap, DomainBox, MetricField, OneFormField, VectorFieldOnM};
use crate::metrics::{PhiFamily, Sign};
use crate::{Error, Result};

pub use example1::{
    build_example1, build_example1_riemannian, f_ode_residual, ConformallyFlatMetric, Example1Beta,
    Example1Params, QuadraticField, Variant, CONSTRAINT_TOL, DOMAIN_MARGIN,
};
pub use poly::{Polynomial, Rational, RationalMap, Term};

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// What a scenario is known to satisfy.
#[derive(Clone, Default)]
pub struct Expected {
    /// Conformal factor `c(x)` under `V^c(F) = 2cF`.
    pub factor: Option<PointFn>,
    pub conformal: Option<bool>,
    pub homothetic: Option<bool>,
    /// `V` is a Killing field (`c ≡ 0`).
    pub killing_field: Option<bool>,
    /// `β` is a Killing form of `α` (`r_ij = 0`).
    pub killing_form: Option<bool>,
    pub einstein: Option<bool>,
    /// `‖β‖_α = 1` everywhere.
    pub unit_norm: bool,
    pub notes: Vec<String>,
}

impl fmt::Debug for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expected")
            .field("factor", &self.factor.as_ref().map(|_| "fn"))
            .field("conformal", &self.conformal)
            .field("homothetic", &self.homothetic)
            .field("killing_field", &self.killing_field)
            .field("killing_form", &self.killing_form)
            .field("einstein", &self.einstein)
            .field("unit_norm", &self.unit_norm)
            .finish()
    }
}

/// Fields plus the `φ`-family and sampling box of one verification run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub a: MetricField,
    pub b: OneFormField,
    pub v: VectorFieldOnM,
    pub phi: PhiFamily,
    pub expected: Expected,
    pub domain: DomainBox,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.a.dim();
        if self.b.dim() != n || self.v.dim() != n || self.domain.dim() != n {
            return Err(Error::Dimension(format!("scenario {} mixes dimensions", self.name)));
        }
        self.phi.validate()
    }
}

/// Serializable form of the closed-form `φ`-families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSpec {
    Randers,
    MKropina { m: f64 },
    MKropinaType { m: f64, k: f64 },
    ExpType { eps: Sign },
    Kropina,
}

impl From<&PhiSpec> for PhiFamily {
    fn from(p: &PhiSpec) -> Self {
        match *p {
            PhiSpec::Randers => PhiFamily::Randers,
            PhiSpec::MKropina { m } => PhiFamily::MKropina { m },
            PhiSpec::MKropinaType { m, k } => PhiFamily::MKropinaType { m, k },
            PhiSpec::ExpType { eps } => PhiFamily::ExpType { eps },
            PhiSpec::Kropina => PhiFamily::Kropina,
        }
    }
}

/// Optional knobs of the built-in scenarios.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinParams {
    pub n: Option<usize>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub q: Option<Vec<Vec<f64>>>,
    pub a0: Option<Vec<f64>>,
    pub k: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub phi: Option<PhiSpec>,
}

pub const BUILTIN_NAMES: &[&str] = &[
    "flat-euclidean",
    "space-form",
    "constant-one-form",
    "flat+const-b+dilation",
    "flat+const-b+rotation",
    "flat+const-b+linear",
    "flat+const-b+moebius",
    "linear-field",
    "moebius-field",
];

fn unit(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

fn matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("matrix must be {n}×{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    if v.len() != n {
        return Err(Error::Config(format!("{what} must have {n} entries")));
    }
    Ok(v.to_vec())
}

/// Looks up a named fixture.
pub fn builtin(name: &str, p: &BuiltinParams) -> Result<Scenario> {
    let default_n = match name {
        "flat+const-b+rotation" => 3,
        "space-form" => 3,
        _ => 2,
    };
    let n = p.n.or(p.k.as_ref().map(Vec::len)).unwrap_or(default_n);
    if n < 1 {
        return Err(Error::Config("n must be positive".into()));
    }
    let phi: PhiFamily = p.phi.as_ref().map(PhiFamily::from).unwrap_or(PhiFamily::Randers);
    let domain = DomainBox::cube(n, 0.5)?;
    let flat = MetricField::flat(n);
    let b_vec = |default: Vec<f64>| match &p.b {
        Some(b) => vector(b, n, "b"),
        None => Ok(default),
    };
    let field = |q: QuadraticField| VectorFieldOnM::new(Arc::new(q));
    let constant_c = |c: f64| -> Option<PointFn> { Some(Arc::new(move |_: &[f64]| c)) };

    let (a, b, v, expected, domain) = match name {
        "flat-euclidean" => (
            flat,
            OneFormField::constant(b_vec(vec![0.0; n])?),
            VectorFieldOnM::zero(n),
            Expected {
                factor: constant_c(0.0),
                conformal: Some(true),
                homothetic: Some(true),
                killing_field: Some(true),
                killing_form: Some(true),
                einstein: Some(true),
                ..Default::default()
            },
            domain,
        ),
        "space-form" => {
            let mu = p.mu.unwrap_or(1.0);
            let half = if mu < 0.0 { 0.5_f64.min(0.7 / (n as f64 * -mu).sqrt()) } else { 0.5 };
            let domain = DomainBox::cube(n, half)?;
            let a = MetricField::new(Arc::new(ConformallyFlatMetric::new(n, mu)))?;
            (
                a,
                OneFormField::constant(b_vec(vec![0.0; n])?),
                VectorFieldOnM::zero(n),
                Expected {
                    factor: constant_c(0.0),
                    conformal: Some(true),
                    homothetic: Some(true),
                    killing_field: Some(true),
                    einstein: Some(true),
                    ..Default::default()
                },
                domain,
            )
        }
        "constant-one-form" => (
            flat,
            OneFormField::constant(b_vec(unit(n))?),
            VectorFieldOnM::zero(n),
            Expected {
                factor: constant_c(0.0),
                conformal: Some(true),
                homothetic: Some(true),
                killing_field: Some(true),
                killing_form: Some(true),
                einstein: Some(true),
                ..Default::default()
            },
            domain,
        ),
        "flat+const-b+dilation" => {
            let lambda = p.lambda.unwrap_or(0.8);
            (
                flat,
                OneFormField::constant(b_vec(unit(n))?),
                field(QuadraticField::dilation(n, lambda))?,
                Expected {
                    factor: constant_c(lambda / 2.0),
                    conformal: Some(true),
                    homothetic: Some(true),
                    killing_field: Some(lambda == 0.0),
                    killing_form: Some(true),
                    einstein: Some(true),
                    ..Default::default()
                },
                domain,
            )
        }
        "flat+const-b+rotation" | "flat+const-b+linear" | "linear-field" => {
            let lambda = if name == "flat+const-b+rotation" { 0.0 } else { p.lambda.unwrap_or(0.5) };
            let q = match &p.q {
                Some(q) => matrix(q, n)?,
                None if n >= 2 => {
                    let mut q = DMatrix::zeros(n, n);
                    q[(0, 1)] = 1.0;
                    q[(1, 0)] = -1.0;
                    q
                }
                None => DMatrix::zeros(n, n),
            };
            if (&q + q.transpose()).amax() > 1e-12 {
                return Err(Error::Config("Q must be antisymmetric".into()));
            }
            let a0 = match &p.a0 {
                Some(a0) => vector(a0, n, "a0")?,
                None => vec![0.0; n],
            };
            let default_b = if n >= 3 { (0..n).map(|i| if i == 2 { 1.0 } else { 0.0 }).collect() } else { unit(n) };
            let b = b_vec(default_b)?;
            // M_i = λ b_i + b^j Q_ji is proportional to b iff Qᵀb = 0.
            let qtb = q.transpose() * DVector::from_column_slice(&b);
            let conformal = qtb.amax() <= 1e-12;
            let mut map = q.clone();
            for i in 0..n {
                map[(i, i)] += lambda;
            }
            (
                flat,
                OneFormField::constant(b),
                VectorFieldOnM::new(Arc::new(AffineMap::new(map, a0)))?,
                Expected {
                    factor: conformal.then(|| constant_c(lambda / 2.0)).flatten(),
                    conformal: Some(conformal),
                    homothetic: conformal.then_some(true),
                    killing_field: conformal.then_some(lambda == 0.0),
                    killing_form: Some(true),
                    einstein: Some(true),
                    ..Default::default()
                },
                domain,
            )
        }
        "flat+const-b+moebius" | "moebius-field" => {
            let k = match &p.k {
                Some(k) => vector(k, n, "k")?,
                None => unit(n),
            };
            let b = b_vec(unit(n))?;
            let trivial = k.iter().all(|v| *v == 0.0);
            (
                flat,
                OneFormField::constant(b),
                field(QuadraticField::moebius(&k))?,
                Expected {
                    factor: trivial.then(|| constant_c(0.0)).flatten(),
                    conformal: Some(trivial),
                    homothetic: trivial.then_some(true),
                    killing_form: Some(true),
                    einstein: Some(true),
                    notes: vec!["V is conformal for α with factor ⟨k, x⟩, not for (α, β)".into()],
                    ..Default::default()
                },
                domain,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown builtin scenario {other:?}; known: {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    let s = Scenario { name: name.to_string(), a, b, v, phi, expected, domain };
    s.check()?;
    Ok(s)
}

/// Scenario given componentwise by rational functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    pub n: usize,
    /// `n × n` entries of `a_ij`.
    pub metric: Vec<Vec<Rational>>,
    pub form: Vec<Rational>,
    pub field: Vec<Rational>,
    #[serde(default = "default_phi")]
    pub phi: PhiSpec,
    #[serde(default)]
    pub domain: Option<DomainBox>,
    /// Known conformal factor, for comparison.
    #[serde(default)]
    pub expected_factor: Option<Rational>,
}

fn default_phi() -> PhiSpec {
    PhiSpec::Randers
}

pub fn build_inline(s: &InlineScenario) -> Result<Scenario> {
    let n = s.n;
    if s.metric.len() != n || s.metric.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("inline metric must be {n}×{n}")));
    }
    if s.form.len() != n || s.field.len() != n {
        return Err(Error::Config(format!("inline form and field need {n} components")));
    }
    let entries: Vec<Rational> = s.metric.iter().flatten().cloned().collect();
    let a = MetricField::new(Arc::new(RationalMap::new(n, &entries)?))?;
    let b = OneFormField::new(Arc::new(RationalMap::new(n, &s.form)?))?;
    let v = VectorFieldOnM::new(Arc::new(RationalMap::new(n, &s.field)?))?;
    let factor: Option<PointFn> = match &s.expected_factor {
        Some(r) => {
            let m = RationalMap::new(n, std::slice::from_ref(r))?;
            Some(Arc::new(move |x: &[f64]| crate::diffgeo::SmoothMap::eval(&m, x)[0]))
        }
        None => None,
    };
    let domain = match &s.domain {
        Some(d) => d.clone(),
        None => DomainBox::cube(n, 0.5)?,
    };
    let sc = Scenario {
        name: "inline".into(),
        a,
        b,
        v,
        phi: PhiFamily::from(&s.phi),
        expected: Expected { conformal: factor.as_ref().map(|_| true), factor, ..Default::default() },
        domain,
    };
    sc.check()?;
    Ok(sc)
}

#[cfg(test)]
mod tests;
