use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SmoothMap;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Central2,
    Central4,
    /// Closed-form jets when the map supplies them, `Central4` otherwise.
    #[serde(alias = "analytic")]
    AnalyticWhenAvailable,
}

impl Scheme {
    /// Finite-difference stencil used when no closed form is taken.
    fn stencil(self) -> Scheme {
        match self {
            Scheme::Central2 => Scheme::Central2,
            _ => Scheme::Central4,
        }
    }
}

/// Differentiation settings. Step on axis `i` is `h·max(1, |x_i|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    pub scheme: Scheme,
    pub h_first: f64,
    pub h_second: f64,
    pub jet_tol: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::AnalyticWhenAvailable,
            h_first: 1e-5,
            h_second: 1e-4,
            jet_tol: 1e-6,
        }
    }
}

impl DiffConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_first > 0.0 && self.h_second > 0.0) {
            return Err(Error::Config("difference steps must be positive".into()));
        }
        if self.h_second < self.h_first {
            return Err(Error::Config(
                "second-derivative step must not be smaller than the first-derivative step".into(),
            ));
        }
        Ok(())
    }

    /// Largest stencil reach at coordinate magnitude `scale`.
    pub fn reach(&self, scale: f64) -> f64 {
        2.0 * self.h_first.max(self.h_second) * scale.max(1.0)
    }

    fn step(h: f64, xi: f64) -> f64 {
        h * xi.abs().max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Value and partial derivatives of a map at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: Vec<f64>,
    /// `first[(c, k)] = ∂f_c/∂x^k`.
    pub first: DMatrix<f64>,
    /// `second[c][(k, l)] = ∂²f_c/∂x^k∂x^l`, present for [`Order::Second`].
    pub second: Option<Vec<DMatrix<f64>>>,
    /// True when any part came from finite differences.
    pub numerical: bool,
}

/// One-sided weights `(offset, w)` of antisymmetric central first-derivative stencils.
const W4: [(f64, f64); 2] = [(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const W2: [(f64, f64); 1] = [(1.0, 0.5)];

pub fn jet(f: &dyn SmoothMap, x: &[f64], order: Order, cfg: &DiffConfig) -> Result<Jet> {
    let n = f.dim_in();
    if x.len() != n {
        return Err(Error::Dimension(format!("point has {} coordinates, map expects {n}", x.len())));
    }
    let value = eval_checked(f, x)?;

    let analytic = cfg.scheme == Scheme::AnalyticWhenAvailable;
    let jac = if analytic { f.jacobian(x) } else { None };
    let hess = if analytic && order == Order::Second { f.hessians(x) } else { None };

    let needs_fd = jac.is_none() || (order == Order::Second && hess.is_none());
    if needs_fd {
        if let Some(domain) = f.domain() {
            let margin = cfg.reach(x.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            if domain.distance_to_boundary(x) < margin {
                return Err(Error::BoundaryMargin { point: x.to_vec(), margin });
            }
        }
    }

    let numerical_first = jac.is_none();
    let first = match jac {
        Some(j) => j,
        None => fd_first(f, x, cfg.scheme.stencil(), cfg.h_first)?,
    };

    let mut numerical = numerical_first;
    let second = match order {
        Order::First => None,
        Order::Second => Some(match hess {
            Some(h) => h,
            None => {
                numerical = true;
                if analytic && !numerical_first {
                    fd_of_jacobian(f, x, cfg.h_first)?
                } else {
                    fd_second(f, x, cfg.scheme.stencil(), cfg.h_second)?
                }
            }
        }),
    };

    if !first.iter().all(|v| v.is_finite())
        || second.as_ref().is_some_and(|s| s.iter().any(|m| !m.iter().all(|v| v.is_finite())))
    {
        return Err(Error::NonFinite(x.to_vec()));
    }

    Ok(Jet { value, first, second, numerical })
}

/// Largest disagreement between closed-form jets and finite differences.
///
/// Returns `None` when the map supplies no closed-form jets.
pub fn jet_agreement(f: &dyn SmoothMap, x: &[f64], order: Order, cfg: &DiffConfig) -> Result<Option<f64>> {
    let Some(jac) = f.jacobian(x) else { return Ok(None) };
    let fd = jet(f, x, order, &DiffConfig { scheme: Scheme::Central4, ..*cfg })?;
    let mut worst = (&jac - &fd.first).amax();
    if order == Order::Second {
        if let (Some(h), Some(fd2)) = (f.hessians(x), fd.second.as_ref()) {
            for (a, b) in h.iter().zip(fd2) {
                worst = worst.max((a - b).amax());
            }
        }
    }
    Ok(Some(worst))
}

fn eval_checked(f: &dyn SmoothMap, x: &[f64]) -> Result<Vec<f64>> {
    let v = f.eval(x);
    if v.len() != f.dim_out() {
        return Err(Error::Dimension(format!(
            "map returned {} components, declared {}",
            v.len(),
            f.dim_out()
        )));
    }
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(x.to_vec()))
    }
}

fn weights(scheme: Scheme) -> &'static [(f64, f64)] {
    match scheme {
        Scheme::Central2 => &W2,
        _ => &W4,
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut p = x.to_vec();
    for &(axis, d) in moves {
        p[axis] += d;
    }
    p
}

fn fd_first(f: &dyn SmoothMap, x: &[f64], scheme: Scheme, h: f64) -> Result<DMatrix<f64>> {
    let (n, m) = (f.dim_in(), f.dim_out());
    let mut out = DMatrix::zeros(m, n);
    for k in 0..n {
        let hk = DiffConfig::step(h, x[k]);
        let mut acc = vec![0.0; m];
        for &(off, w) in weights(scheme) {
            let plus = eval_checked(f, &shifted(x, &[(k, off * hk)]))?;
            let minus = eval_checked(f, &shifted(x, &[(k, -off * hk)]))?;
            for c in 0..m {
                acc[c] += w * (plus[c] - minus[c]);
            }
        }
        for c in 0..m {
            out[(c, k)] = acc[c] / hk;
        }
    }
    Ok(out)
}

fn fd_second(f: &dyn SmoothMap, x: &[f64], scheme: Scheme, h: f64) -> Result<Vec<DMatrix<f64>>> {
    let (n, m) = (f.dim_in(), f.dim_out());
    let centre = eval_checked(f, x)?;
    let mut out = vec![DMatrix::zeros(n, n); m];
    // symmetric weights applied to f(x + p h) + f(x − p h) − 2 f(x)
    let diag: &[(f64, f64)] = match scheme {
        Scheme::Central2 => &[(1.0, 1.0)],
        _ => &[(1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)],
    };
    for k in 0..n {
        let hk = DiffConfig::step(h, x[k]);
        let mut acc = vec![0.0; m];
        for &(off, w) in diag {
            let plus = eval_checked(f, &shifted(x, &[(k, off * hk)]))?;
            let minus = eval_checked(f, &shifted(x, &[(k, -off * hk)]))?;
            for c in 0..m {
                acc[c] += w * ((plus[c] - centre[c]) + (minus[c] - centre[c]));
            }
        }
        for c in 0..m {
            out[c][(k, k)] = acc[c] / (hk * hk);
        }
        for l in (k + 1)..n {
            let hl = DiffConfig::step(h, x[l]);
            let mut acc = vec![0.0; m];
            for &(ok, wk) in weights(scheme) {
                for &(ol, wl) in weights(scheme) {
                    let (dk, dl) = (ok * hk, ol * hl);
                    let pp = eval_checked(f, &shifted(x, &[(k, dk), (l, dl)]))?;
                    let pm = eval_checked(f, &shifted(x, &[(k, dk), (l, -dl)]))?;
                    let mp = eval_checked(f, &shifted(x, &[(k, -dk), (l, dl)]))?;
                    let mm = eval_checked(f, &shifted(x, &[(k, -dk), (l, -dl)]))?;
                    for c in 0..m {
                        acc[c] += wk * wl * ((pp[c] - pm[c]) - (mp[c] - mm[c]));
                    }
                }
            }
            for c in 0..m {
                let d = acc[c] / (hk * hl);
                out[c][(k, l)] = d;
                out[c][(l, k)] = d;
            }
        }
    }
    Ok(out)
}

/// Second derivatives from central-4 differences of a closed-form Jacobian.
fn fd_of_jacobian(f: &dyn SmoothMap, x: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>> {
    let (n, m) = (f.dim_in(), f.dim_out());
    let mut out = vec![DMatrix::zeros(n, n); m];
    for l in 0..n {
        let hl = DiffConfig::step(h, x[l]);
        for &(off, w) in &W4 {
            let p = shifted(x, &[(l, off * hl)]);
            let q = shifted(x, &[(l, -off * hl)]);
            let jp = f.jacobian(&p).ok_or_else(|| Error::NonFinite(p.clone()))?;
            let jq = f.jacobian(&q).ok_or_else(|| Error::NonFinite(q.clone()))?;
            for c in 0..m {
                for k in 0..n {
                    out[c][(k, l)] += w * (jp[(c, k)] - jq[(c, k)]) / hl;
                }
            }
        }
    }
    for h in &mut out {
        *h = (&*h + h.transpose()) * 0.5;
    }
    Ok(out)
}
