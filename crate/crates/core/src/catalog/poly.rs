//! Rational functions in `n` variables given as coefficient tables.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diffgeo::SmoothMap;
use crate::{Error, Result};

/// `coef · Π x_i^{powers_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![Term { coef: c, powers: vec![] }] }
    }

    fn power(&self, t: &Term, i: usize) -> u32 {
        t.powers.get(i).copied().unwrap_or(0)
    }

    fn monomial(&self, t: &Term, x: &[f64], skip: &[usize]) -> f64 {
        // evaluates coef · Π x_i^{p_i − (#i in skip)} · Π falling factors
        let mut v = t.coef;
        for (i, xi) in x.iter().enumerate() {
            let mut p = self.power(t, i) as i64;
            for &s in skip {
                if s == i {
                    v *= p as f64;
                    p -= 1;
                }
            }
            if p < 0 {
                return 0.0;
            }
            v *= xi.powi(p as i32);
        }
        v
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| self.monomial(t, x, &[])).sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|k| self.terms.iter().map(|t| self.monomial(t, x, &[k])).sum()).collect()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |k, l| self.terms.iter().map(|t| self.monomial(t, x, &[k, l])).sum())
    }

    fn max_var(&self) -> usize {
        self.terms.iter().map(|t| t.powers.len()).max().unwrap_or(0)
    }
}

/// A constant, a polynomial, or a quotient of polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rational {
    Constant(f64),
    Poly(Polynomial),
    Ratio { num: Polynomial, den: Polynomial },
}

impl Rational {
    fn parts(&self) -> (Polynomial, Polynomial) {
        match self {
            Rational::Constant(c) => (Polynomial::constant(*c), Polynomial::constant(1.0)),
            Rational::Poly(p) => (p.clone(), Polynomial::constant(1.0)),
            Rational::Ratio { num, den } => (num.clone(), den.clone()),
        }
    }
}

/// Vector of rational components with quotient-rule jets.
#[derive(Clone, Debug)]
pub struct RationalMap {
    n: usize,
    comps: Vec<(Polynomial, Polynomial)>,
}

impl RationalMap {
    pub fn new(n: usize, comps: &[Rational]) -> Result<Self> {
        let comps: Vec<_> = comps.iter().map(Rational::parts).collect();
        for (p, q) in &comps {
            if p.max_var() > n || q.max_var() > n {
                return Err(Error::Config(format!("a term lists more than {n} exponents")));
            }
            if q.terms.is_empty() {
                return Err(Error::Config("empty denominator".into()));
            }
        }
        Ok(Self { n, comps })
    }
}

impl SmoothMap for RationalMap {
    fn dim_in(&self) -> usize {
        self.n
    }

    fn dim_out(&self) -> usize {
        self.comps.len()
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|(p, q)| p.eval(x) / q.eval(x)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.comps.len(), self.n);
        for (r, (p, q)) in self.comps.iter().enumerate() {
            let (pv, qv) = (p.eval(x), q.eval(x));
            let (dp, dq) = (p.grad(x), q.grad(x));
            let f = pv / qv;
            for k in 0..self.n {
                j[(r, k)] = (dp[k] - f * dq[k]) / qv;
            }
        }
        Some(j)
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(
            self.comps
                .iter()
                .map(|(p, q)| {
                    let (pv, qv) = (p.eval(x), q.eval(x));
                    let (dp, dq) = (p.grad(x), q.grad(x));
                    let (hp, hq) = (p.hessian(x), q.hessian(x));
                    let f = pv / qv;
                    let df: Vec<f64> = (0..self.n).map(|k| (dp[k] - f * dq[k]) / qv).collect();
                    DMatrix::from_fn(self.n, self.n, |k, l| {
                        (hp[(k, l)] - hq[(k, l)] * f - dq[l] * df[k] - dq[k] * df[l]) / qv
                    })
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgeo::{jet, DiffConfig, Order, Scheme};

    fn term(coef: f64, powers: &[u32]) -> Term {
        Term { coef, powers: powers.to_vec() }
    }

    #[test]
    fn polynomial_jets() {
        // x²y + 3y − 1
        let p = Polynomial { terms: vec![term(1.0, &[2, 1]), term(3.0, &[0, 1]), term(-1.0, &[])] };
        let x = [0.5, -2.0];
        assert_eq!(p.eval(&x), 0.25 * -2.0 - 6.0 - 1.0);
        assert_eq!(p.grad(&x), vec![2.0 * 0.5 * -2.0, 0.25 + 3.0]);
        let h = p.hessian(&x);
        assert_eq!(h[(0, 0)], 2.0 * -2.0);
        assert_eq!(h[(0, 1)], 1.0);
        assert_eq!(h[(1, 1)], 0.0);
    }

    #[test]
    fn rational_jets_match_finite_differences() {
        let num = Polynomial { terms: vec![term(1.0, &[1, 1]), term(2.0, &[])] };
        let den = Polynomial { terms: vec![term(1.0, &[]), term(0.5, &[2]), term(0.3, &[0, 2])] };
        let map = RationalMap::new(2, &[Rational::Ratio { num, den }, Rational::Constant(4.0)]).unwrap();
        let x = [0.3, -0.4];
        let exact = jet(&map, &x, Order::Second, &DiffConfig::default()).unwrap();
        let fd = jet(&map, &x, Order::Second, &DiffConfig::with_scheme(Scheme::Central4)).unwrap();
        assert!((&exact.first - &fd.first).amax() < 1e-9);
        let (he, hf) = (exact.second.unwrap(), fd.second.unwrap());
        assert!((&he[0] - &hf[0]).amax() < 1e-6);
        assert_eq!(he[1].amax(), 0.0);
    }

    #[test]
    fn json_forms() {
        let r: Vec<Rational> = serde_json::from_str(
            r#"[1.5, [{"coef": 2.0, "powers": [0, 1]}], {"num": [{"coef": 1.0, "powers": []}], "den": [{"coef": 1.0, "powers": [2]}]}]"#,
        )
        .unwrap();
        assert!(matches!(r[0], Rational::Constant(_)));
        assert!(matches!(r[1], Rational::Poly(_)));
        assert!(matches!(r[2], Rational::Ratio { .. }));
        assert!(RationalMap::new(1, &r).is_err());
        assert!(RationalMap::new(2, &r).is_ok());
    }
}
