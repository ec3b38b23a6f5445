//! The Kropina–Douglas family with non-homothetic conformal fields.
//!
//! `α = 2|y|/(1 + μ|x|²)`, `β = f(c) dc` with
//! `c = (τ(1 − μ|x|²) + ⟨μγ + η, x⟩)/(1 + μ|x|²)` and the quadratic field
//! `V^i = −2(τ + ⟨η, x⟩)x^i + |x|²η^i + (Qx)^i + γ^i`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Expected, Scenario};
use crate::diffgeo::{DomainBox, MetricField, OneFormField, SmoothMap, VectorFieldOnM};
use crate::metrics::PhiFamily;
use crate::{Error, Result};

/// Feasibility tolerance for the parameter constraints.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Required margin of the `c`-domain condition on the sampling box.
pub const DOMAIN_MARGIN: f64 = 0.1;
const DEFAULT_HALF_WIDTH: f64 = 0.5;
const SHRINK: f64 = 0.9;
const GRID: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// `f² = −1/(μc²)` with `⟨η, γ⟩ = −μ|γ|²`.
    A,
    /// `f² = 2/(μ(⟨η, γ⟩ + μ|γ|² − 2c²))` with `τ = 0`.
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Params {
    pub n: usize,
    pub mu: f64,
    pub tau: f64,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Row-major antisymmetric `Q`, `q[i][j] = q^i_j`.
    pub q: Vec<Vec<f64>>,
    pub variant: Variant,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl Example1Params {
    pub fn variant_a_2d() -> Self {
        Self {
            n: 2,
            mu: -1.0,
            tau: 0.3,
            eta: vec![1.0, 0.6],
            gamma: vec![1.0, 0.0],
            q: vec![vec![0.0, 2.0], vec![-2.0, 0.0]],
            variant: Variant::A,
        }
    }

    pub fn variant_a_3d() -> Self {
        Self {
            n: 3,
            mu: -1.0,
            tau: 0.3,
            eta: vec![1.0, 0.6, 0.0],
            gamma: vec![1.0, 0.0, 0.0],
            q: vec![vec![0.0, 2.0, 0.5], vec![-2.0, 0.0, 0.0], vec![-0.5, 0.0, 0.0]],
            variant: Variant::A,
        }
    }

    pub fn variant_b_2d() -> Self {
        Self {
            n: 2,
            mu: 1.0,
            tau: 0.0,
            eta: vec![0.0, 1.0],
            gamma: vec![1.0, 0.0],
            q: vec![vec![0.0; 2]; 2],
            variant: Variant::B,
        }
    }

    pub fn variant_b_3d() -> Self {
        let q = 0.7;
        Self {
            n: 3,
            mu: 1.0,
            tau: 0.0,
            eta: vec![0.0, 1.0, 0.0],
            gamma: vec![1.0, 0.0, 0.0],
            q: vec![vec![0.0, 0.0, q], vec![0.0, 0.0, -q], vec![-q, q, 0.0]],
            variant: Variant::B,
        }
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.q[i][j])
    }

    /// `⟨η, γ⟩ + μ|γ|²`.
    pub fn k_const(&self) -> f64 {
        dot(&self.eta, &self.gamma) + self.mu * dot(&self.gamma, &self.gamma)
    }

    /// Whether `η = −μγ`, the case in which `V` is homothetic.
    pub fn is_complement(&self) -> bool {
        self.eta
            .iter()
            .zip(&self.gamma)
            .all(|(e, g)| (e + self.mu * g).abs() <= CONSTRAINT_TOL)
    }

    /// Checks dimensions and every algebraic constraint, naming the first one
    /// that fails together with its defect.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::Dimension(format!("the Kropina example needs n ≥ 2, got {n}")));
        }
        if self.eta.len() != n || self.gamma.len() != n || self.q.len() != n || self.q.iter().any(|r| r.len() != n)
        {
            return Err(Error::Dimension("η, γ and Q must match n".into()));
        }
        if self.mu == 0.0 || !self.mu.is_finite() {
            return Err(Error::Infeasible("μ must be a nonzero real".into()));
        }
        let q = self.q_matrix();
        let asym = (&q + q.transpose()).amax();
        if asym > CONSTRAINT_TOL {
            return Err(Error::Infeasible(format!("Q is not antisymmetric (defect {asym:e})")));
        }
        let eta = DVector::from_column_slice(&self.eta);
        let gamma = DVector::from_column_slice(&self.gamma);
        let lin = (&q * &eta + (&gamma * (4.0 * self.tau) + &q * &gamma) * self.mu).amax();
        if lin > CONSTRAINT_TOL {
            return Err(Error::Infeasible(format!("Qη = −μ(4τγ + Qγ) fails (defect {lin:e})")));
        }
        let norm = (eta.norm_squared() - self.mu * (self.mu * gamma.norm_squared() - 4.0 * self.tau * self.tau)).abs();
        if norm > CONSTRAINT_TOL {
            return Err(Error::Infeasible(format!("|η|² = μ(μ|γ|² − 4τ²) fails (defect {norm:e})")));
        }
        match self.variant {
            Variant::A => {
                let d = self.k_const().abs();
                if d > CONSTRAINT_TOL {
                    return Err(Error::Infeasible(format!("variant A needs ⟨η,γ⟩ = −μ|γ|² (defect {d:e})")));
                }
                if self.mu >= 0.0 {
                    return Err(Error::Infeasible(format!("variant A needs μ < 0, got {}", self.mu)));
                }
                if self.is_complement() && self.tau == 0.0 {
                    return Err(Error::Infeasible(
                        "η = −μγ with τ = 0 makes c vanish identically, so f(c) is undefined".into(),
                    ));
                }
            }
            Variant::B => {
                if self.tau.abs() > CONSTRAINT_TOL {
                    return Err(Error::Infeasible(format!("variant B needs τ = 0, got {}", self.tau)));
                }
            }
        }
        Ok(())
    }

    /// `1 + μ|x|²` and the variant's `c`-domain quantity, which must reach
    /// [`DOMAIN_MARGIN`]: `|c|` for A, `μ(K − 2c²)` for B.
    pub fn domain_margin(&self, x: &[f64]) -> (f64, f64) {
        let d = 1.0 + self.mu * dot(x, x);
        let c = CJet::new(self, x).c;
        let q = match self.variant {
            Variant::A => c.abs(),
            Variant::B => self.mu * (self.k_const() - 2.0 * c * c),
        };
        (d, q)
    }

    fn box_ok(&self, b: &DomainBox) -> bool {
        b.grid(GRID).iter().all(|x| {
            let (d, q) = self.domain_margin(x);
            d > 0.0 && q >= DOMAIN_MARGIN
        })
    }

    /// `|x_i| ≤ 0.5`, shrunk by 0.9 until the `c`-domain condition holds
    /// with margin on a grid.
    pub fn default_domain(&self) -> Result<DomainBox> {
        self.validate()?;
        let mut half = DEFAULT_HALF_WIDTH;
        for _ in 0..60 {
            let b = DomainBox::cube(self.n, half)?;
            if self.box_ok(&b) {
                return Ok(b);
            }
            half *= SHRINK;
        }
        Err(Error::DomainViolation("no box around the origin satisfies the c-domain condition".into()))
    }

    /// `f(c)` and `f'(c)` in closed form.
    pub fn f(&self, c: f64) -> Result<(f64, f64)> {
        match self.variant {
            Variant::A => {
                if c == 0.0 {
                    return Err(Error::DomainViolation("variant A needs c ≠ 0".into()));
                }
                let f = 1.0 / ((-self.mu).sqrt() * c);
                Ok((f, -f / c))
            }
            Variant::B => {
                let g = self.k_const() - 2.0 * c * c;
                if self.mu * g <= 0.0 {
                    return Err(Error::DomainViolation(format!("variant B needs μ(K − 2c²) > 0 at c = {c}")));
                }
                let f = (2.0 / (self.mu * g)).sqrt();
                Ok((f, f * 2.0 * c / g))
            }
        }
    }

    /// `c(x)` of the construction.
    pub fn c(&self, x: &[f64]) -> f64 {
        CJet::new(self, x).c
    }

    /// `V(x)`.
    pub fn field(&self, x: &[f64]) -> Vec<f64> {
        self.quadratic_field().eval(x)
    }

    pub fn quadratic_field(&self) -> QuadraticField {
        QuadraticField {
            tau: self.tau,
            eta: self.eta.clone(),
            gamma: self.gamma.clone(),
            q: self.q_matrix(),
        }
    }
}

/// `|f'(c) − 2(c − τ)f/(2τc − 2c² + μ|γ|² + ⟨η, γ⟩)|`.
pub fn f_ode_residual(p: &Example1Params, c: f64) -> Result<f64> {
    let (f, df) = p.f(c)?;
    let den = 2.0 * p.tau * c - 2.0 * c * c + p.k_const();
    if den == 0.0 {
        return Err(Error::DomainViolation(format!("f-equation denominator vanishes at c = {c}")));
    }
    Ok((df - 2.0 * (c - p.tau) / den * f).abs())
}

/// `c`, `∂c` and `∂²c` at a point.
struct CJet {
    c: f64,
    dc: Vec<f64>,
    ddc: DMatrix<f64>,
}

impl CJet {
    fn new(p: &Example1Params, x: &[f64]) -> Self {
        let n = x.len();
        let mu = p.mu;
        let r2 = dot(x, x);
        let pv: Vec<f64> = (0..n).map(|i| mu * p.gamma[i] + p.eta[i]).collect();
        let num = p.tau * (1.0 - mu * r2) + dot(&pv, x);
        let den = 1.0 + mu * r2;
        let c = num / den;
        let dn: Vec<f64> = (0..n).map(|k| -2.0 * p.tau * mu * x[k] + pv[k]).collect();
        let dd: Vec<f64> = (0..n).map(|k| 2.0 * mu * x[k]).collect();
        let dc: Vec<f64> = (0..n).map(|k| (dn[k] - c * dd[k]) / den).collect();
        let ddc = DMatrix::from_fn(n, n, |k, l| {
            let delta = if k == l { 1.0 } else { 0.0 };
            (-2.0 * p.tau * mu * delta - 2.0 * mu * delta * c - dd[l] * dc[k] - dd[k] * dc[l]) / den
        });
        Self { c, dc, ddc }
    }
}

/// `a_ij = 4δ_ij/(1 + μ|x|²)²` with closed-form jets.
#[derive(Clone, Debug)]
pub struct ConformallyFlatMetric {
    pub n: usize,
    pub mu: f64,
    domain: Option<DomainBox>,
}

impl ConformallyFlatMetric {
    pub fn new(n: usize, mu: f64) -> Self {
        Self { n, mu, domain: None }
    }

    pub fn with_domain(mut self, d: DomainBox) -> Self {
        self.domain = Some(d);
        self
    }

    fn scale(&self, x: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
        let n = self.n;
        let mu = self.mu;
        let d = 1.0 + mu * dot(x, x);
        let g = 4.0 / (d * d);
        let dg: Vec<f64> = x.iter().map(|xk| -16.0 * mu * xk / d.powi(3)).collect();
        let ddg = DMatrix::from_fn(n, n, |k, l| {
            let delta = if k == l { 1.0 } else { 0.0 };
            -16.0 * mu * delta / d.powi(3) + 96.0 * mu * mu * x[k] * x[l] / d.powi(4)
        });
        (g, dg, ddg)
    }
}

impl SmoothMap for ConformallyFlatMetric {
    fn dim_in(&self) -> usize {
        self.n
    }

    fn dim_out(&self) -> usize {
        self.n * self.n
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let (g, _, _) = self.scale(x);
        let n = self.n;
        (0..n * n).map(|r| if r / n == r % n { g } else { 0.0 }).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let (_, dg, _) = self.scale(x);
        let n = self.n;
        Some(DMatrix::from_fn(n * n, n, |r, k| if r / n == r % n { dg[k] } else { 0.0 }))
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let (_, _, ddg) = self.scale(x);
        let n = self.n;
        Some((0..n * n).map(|r| if r / n == r % n { ddg.clone() } else { DMatrix::zeros(n, n) }).collect())
    }

    fn domain(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }
}

/// `b_i = f(c) ∂_i c` with closed-form first jets.
#[derive(Clone, Debug)]
pub struct Example1Beta {
    params: Example1Params,
    domain: Option<DomainBox>,
}

impl Example1Beta {
    pub fn new(params: Example1Params, domain: Option<DomainBox>) -> Self {
        Self { params, domain }
    }
}

impl SmoothMap for Example1Beta {
    fn dim_in(&self) -> usize {
        self.params.n
    }

    fn dim_out(&self) -> usize {
        self.params.n
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let j = CJet::new(&self.params, x);
        match self.params.f(j.c) {
            Ok((f, _)) => j.dc.iter().map(|d| f * d).collect(),
            Err(_) => vec![f64::NAN; self.params.n],
        }
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let j = CJet::new(&self.params, x);
        let n = self.params.n;
        let (f, df) = self.params.f(j.c).unwrap_or((f64::NAN, f64::NAN));
        Some(DMatrix::from_fn(n, n, |i, k| df * j.dc[i] * j.dc[k] + f * j.ddc[(i, k)]))
    }

    fn domain(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }
}

/// `V^i = −2(τ + ⟨η, x⟩)x^i + |x|²η^i + (Qx)^i + γ^i` with exact jets.
///
/// Dilations (`τ = −λ/2`), Möbius fields (`η = −k`), rotations and
/// translations are special cases.
#[derive(Clone, Debug)]
pub struct QuadraticField {
    pub tau: f64,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub q: DMatrix<f64>,
}

impl QuadraticField {
    pub fn zero(n: usize) -> Self {
        Self { tau: 0.0, eta: vec![0.0; n], gamma: vec![0.0; n], q: DMatrix::zeros(n, n) }
    }

    pub fn dilation(n: usize, lambda: f64) -> Self {
        Self { tau: -lambda / 2.0, ..Self::zero(n) }
    }

    pub fn moebius(k: &[f64]) -> Self {
        Self { eta: k.iter().map(|v| -v).collect(), ..Self::zero(k.len()) }
    }

    /// `x ↦ (λI + Q)x + a₀`.
    pub fn linear(lambda: f64, q: DMatrix<f64>, a0: Vec<f64>) -> Self {
        let n = q.nrows();
        Self { tau: -lambda / 2.0, eta: vec![0.0; n], gamma: a0, q }
    }
}

impl SmoothMap for QuadraticField {
    fn dim_in(&self) -> usize {
        self.eta.len()
    }

    fn dim_out(&self) -> usize {
        self.eta.len()
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let n = self.eta.len();
        let s = self.tau + dot(&self.eta, x);
        let r2 = dot(x, x);
        (0..n)
            .map(|i| -2.0 * s * x[i] + r2 * self.eta[i] + (0..n).map(|r| self.q[(i, r)] * x[r]).sum::<f64>() + self.gamma[i])
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.eta.len();
        let s = self.tau + dot(&self.eta, x);
        Some(DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            -2.0 * self.eta[j] * x[i] - 2.0 * s * delta + 2.0 * x[j] * self.eta[i] + self.q[(i, j)]
        }))
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.eta.len();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        Some(
            (0..n)
                .map(|i| {
                    DMatrix::from_fn(n, n, |j, k| {
                        -2.0 * self.eta[j] * d(i, k) - 2.0 * self.eta[k] * d(i, j) + 2.0 * d(j, k) * self.eta[i]
                    })
                })
                .collect(),
        )
    }
}

/// Builds the Kropina scenario on `domain`.
///
/// The fitted factor obeys `V^c(α²) = −4c·α²`, so the expected factor
/// under `V^c(F) = 2ĉF` is `ĉ = −c(x)`.
pub fn build_example1(p: &Example1Params, domain: DomainBox) -> Result<Scenario> {
    p.validate()?;
    if domain.dim() != p.n {
        return Err(Error::Dimension("domain dimension differs from n".into()));
    }
    for x in domain.grid(GRID) {
        let (d, q) = p.domain_margin(&x);
        if d <= 0.0 {
            return Err(Error::DomainViolation(format!("1 + μ|x|² = {d} at {x:?}")));
        }
        if q <= 0.0 {
            return Err(Error::DomainViolation(format!("c leaves the f-domain at {x:?} (value {q})")));
        }
    }
    let a = MetricField::new(Arc::new(ConformallyFlatMetric::new(p.n, p.mu).with_domain(domain.clone())))?;
    let b = OneFormField::new(Arc::new(Example1Beta::new(p.clone(), Some(domain.clone()))))?;
    let v = VectorFieldOnM::new(Arc::new(p.quadratic_field()))?;
    let pc = p.clone();
    let homothetic = p.is_complement();
    Ok(Scenario {
        name: format!("example1-{:?}-n{}", p.variant, p.n).to_lowercase(),
        a,
        b,
        v,
        phi: PhiFamily::Kropina,
        domain,
        expected: Expected {
            factor: Some(Arc::new(move |x: &[f64]| -pc.c(x))),
            conformal: Some(true),
            homothetic: Some(homothetic),
            unit_norm: true,
            notes: vec!["expected factor is −c(x) under V^c(F) = 2cF".into()],
            ..Default::default()
        },
    })
}

/// `(α, V)` of the construction with `β = 0`, which stays defined when
/// `η = −μγ` and `τ = 0`.
pub fn build_example1_riemannian(p: &Example1Params, domain: DomainBox) -> Result<Scenario> {
    let a = MetricField::new(Arc::new(ConformallyFlatMetric::new(p.n, p.mu).with_domain(domain.clone())))?;
    let v = VectorFieldOnM::new(Arc::new(p.quadratic_field()))?;
    let pc = p.clone();
    Ok(Scenario {
        name: format!("example1-alpha-n{}", p.n),
        a,
        b: OneFormField::zero(p.n),
        v,
        phi: PhiFamily::Randers,
        domain,
        expected: Expected {
            factor: Some(Arc::new(move |x: &[f64]| -pc.c(x))),
            conformal: Some(true),
            homothetic: Some(p.is_complement()),
            killing_field: p.is_complement().then_some(p.tau == 0.0),
            ..Default::default()
        },
    })
}
