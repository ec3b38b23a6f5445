use nalgebra::{DMatrix, DVector};

use super::{jet, DiffConfig, MetricField, OneFormField, Order, VectorFieldOnM};
use crate::Result;

/// Metric, inverse and coordinate derivatives at one point.
#[derive(Clone, Debug)]
pub struct MetricAt {
    pub x: Vec<f64>,
    pub a: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    /// `da[k] = ∂_k a`.
    pub da: Vec<DMatrix<f64>>,
    /// `dda[k][l] = ∂_k ∂_l a`, when second derivatives were requested.
    pub dda: Option<Vec<Vec<DMatrix<f64>>>>,
    pub numerical_second: bool,
}

pub fn metric_at(a: &MetricField, x: &[f64], cfg: &DiffConfig, order: Order) -> Result<MetricAt> {
    let n = a.dim();
    let (am, inv) = a.factor(x)?;
    let j = jet(a.map(), x, order, cfg)?;
    let da = (0..n)
        .map(|k| {
            let m = DMatrix::from_fn(n, n, |i, l| j.first[(i * n + l, k)]);
            (&m + m.transpose()) * 0.5
        })
        .collect();
    let dda = j.second.as_ref().map(|second| {
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let m = DMatrix::from_fn(n, n, |i, p| second[i * n + p][(k, l)]);
                        (&m + m.transpose()) * 0.5
                    })
                    .collect()
            })
            .collect()
    });
    Ok(MetricAt {
        x: x.to_vec(),
        a: am,
        inv,
        da,
        dda,
        numerical_second: j.numerical,
    })
}

/// Christoffel symbols of the second kind, `Γ^i_{jk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn from_metric(m: &MetricAt) -> Self {
        let n = m.a.nrows();
        let mut data = vec![0.0; n * n * n];
        for j in 0..n {
            for k in 0..n {
                let lowered: Vec<f64> = (0..n)
                    .map(|l| 0.5 * (m.da[j][(l, k)] + m.da[k][(l, j)] - m.da[l][(j, k)]))
                    .collect();
                for i in 0..n {
                    data[(i * n + j) * n + k] = (0..n).map(|l| m.inv[(i, l)] * lowered[l]).sum();
                }
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    /// `Γ^i_{jk}` as the matrix over `(j, k)`.
    pub fn upper(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |j, k| self.get(i, j, k))
    }

    /// Largest `|Γ^i_{jk} − Γ^i_{kj}|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }
}

pub fn christoffel(a: &MetricField, x: &[f64], cfg: &DiffConfig) -> Result<Christoffel> {
    Ok(Christoffel::from_metric(&metric_at(a, x, cfg, Order::First)?))
}

/// `b_{i|j} = ∂_j b_i − Γ^k_{ij} b_k`.
pub fn covderiv_oneform(a: &MetricField, b: &OneFormField, x: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>> {
    let gamma = christoffel(a, x, cfg)?;
    oneform_cov_with(&gamma, b, x, cfg)
}

pub(crate) fn oneform_cov_with(
    gamma: &Christoffel,
    b: &OneFormField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<DMatrix<f64>> {
    let n = gamma.dim();
    let bj = jet(b.map(), x, Order::First, cfg)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        bj.first[(i, j)] - (0..n).map(|k| gamma.get(k, i, j) * bj.value[k]).sum::<f64>()
    }))
}

/// `V_{i|j} = ∂_j V_i − Γ^k_{ij} V_k` with `V_i = a_ij V^j`.
pub fn covderiv_vector(a: &MetricField, v: &VectorFieldOnM, x: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>> {
    let m = metric_at(a, x, cfg, Order::First)?;
    let gamma = Christoffel::from_metric(&m);
    vector_cov_with(&m, &gamma, v, x, cfg)
}

pub(crate) fn vector_cov_with(
    m: &MetricAt,
    gamma: &Christoffel,
    v: &VectorFieldOnM,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<DMatrix<f64>> {
    let n = gamma.dim();
    let vj = jet(v.map(), x, Order::First, cfg)?;
    let v_up = DVector::from_column_slice(&vj.value);
    let v_low = &m.a * &v_up;
    // ∂_j V_i = ∂_j a_ik V^k + a_ik ∂_j V^k
    let dv_low = DMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| m.da[j][(i, k)] * v_up[k] + m.a[(i, k)] * vj.first[(k, j)])
            .sum::<f64>()
    });
    Ok(DMatrix::from_fn(n, n, |i, j| {
        dv_low[(i, j)] - (0..n).map(|k| gamma.get(k, i, j) * v_low[k]).sum::<f64>()
    }))
}

/// Decomposition of `∇β` into symmetric and antisymmetric parts.
#[derive(Clone, Debug)]
pub struct BetaInvariants {
    /// `cov[(i, j)] = b_{i|j}`.
    pub cov: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// `s_j = b^i s_ij`.
    pub s_low: DVector<f64>,
    pub b2: f64,
    pub b_up: DVector<f64>,
    pub b_low: DVector<f64>,
    pub a: DMatrix<f64>,
}

pub fn beta_invariants(a: &MetricField, b: &OneFormField, x: &[f64], cfg: &DiffConfig) -> Result<BetaInvariants> {
    let m = metric_at(a, x, cfg, Order::First)?;
    let gamma = Christoffel::from_metric(&m);
    let cov = oneform_cov_with(&gamma, b, x, cfg)?;
    let b_low = b.at(x)?;
    Ok(BetaInvariants::from_parts(cov, b_low, m.a, &m.inv))
}

impl BetaInvariants {
    pub fn from_parts(cov: DMatrix<f64>, b_low: DVector<f64>, a: DMatrix<f64>, inv: &DMatrix<f64>) -> Self {
        let r = (&cov + cov.transpose()) * 0.5;
        let s = (&cov - cov.transpose()) * 0.5;
        let b_up = inv * &b_low;
        let s_low = s.transpose() * &b_up;
        let b2 = b_low.dot(&b_up).max(0.0);
        Self { cov, r, s, s_low, b2, b_up, b_low, a }
    }

    /// `b^i b^j s_ij`, zero up to rounding.
    pub fn contracted_s(&self) -> f64 {
        (self.b_up.transpose() * &self.s * &self.b_up)[(0, 0)]
    }
}

/// Ricci tensor of the Levi-Civita connection.
#[derive(Clone, Debug)]
pub struct Ricci {
    pub tensor: DMatrix<f64>,
    /// Second derivatives of `a` came from finite differences.
    pub numerical: bool,
    /// Change of the result when the second-derivative step is doubled.
    pub uncertainty: Option<f64>,
    pub low_confidence: bool,
}

const RICCI_CONFIDENCE: f64 = 1e-4;

pub fn ricci(a: &MetricField, x: &[f64], cfg: &DiffConfig) -> Result<Ricci> {
    let m = metric_at(a, x, cfg, Order::Second)?;
    let tensor = ricci_from(&m);
    if !m.numerical_second {
        return Ok(Ricci { tensor, numerical: false, uncertainty: None, low_confidence: false });
    }
    let coarse_cfg = DiffConfig {
        h_first: cfg.h_first * 2.0,
        h_second: cfg.h_second * 2.0,
        ..*cfg
    };
    let coarse = ricci_from(&metric_at(a, x, &coarse_cfg, Order::Second)?);
    let uncertainty = (&tensor - &coarse).amax();
    let low_confidence = uncertainty > RICCI_CONFIDENCE * tensor.amax().max(1.0);
    Ok(Ricci { tensor, numerical: true, uncertainty: Some(uncertainty), low_confidence })
}

fn ricci_from(m: &MetricAt) -> DMatrix<f64> {
    let n = m.a.nrows();
    let gamma = Christoffel::from_metric(m);
    let dda = m.dda.as_ref().expect("second derivatives requested");

    // dgamma[p][(i, j, k)] = ∂_p Γ^i_jk
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut dgamma = vec![vec![0.0; n * n * n]; n];
    for p in 0..n {
        let dinv = -(&m.inv * &m.da[p] * &m.inv);
        for j in 0..n {
            for k in 0..n {
                let t: Vec<f64> = (0..n)
                    .map(|l| m.da[j][(l, k)] + m.da[k][(l, j)] - m.da[l][(j, k)])
                    .collect();
                let dt: Vec<f64> = (0..n)
                    .map(|l| dda[p][j][(l, k)] + dda[p][k][(l, j)] - dda[p][l][(j, k)])
                    .collect();
                for i in 0..n {
                    dgamma[p][idx(i, j, k)] = 0.5
                        * (0..n)
                            .map(|l| dinv[(i, l)] * t[l] + m.inv[(i, l)] * dt[l])
                            .sum::<f64>();
                }
            }
        }
    }

    let ric = DMatrix::from_fn(n, n, |j, k| {
        let mut acc = 0.0;
        for i in 0..n {
            acc += dgamma[i][idx(i, j, k)] - dgamma[k][idx(i, j, i)];
            for p in 0..n {
                acc += gamma.get(i, i, p) * gamma.get(p, j, k) - gamma.get(i, k, p) * gamma.get(p, j, i);
            }
        }
        acc
    });
    (&ric + ric.transpose()) * 0.5
}

/// `a^{ij} R_ij`.
pub fn scalar_curvature(a: &MetricField, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let ric = ricci(a, x, cfg)?;
    let (_, inv) = a.factor(x)?;
    Ok(inv.component_mul(&ric.tensor).sum())
}

/// Largest `|a_{ij|k}|`; zero for the Levi-Civita connection.
pub fn metric_compatibility_defect(a: &MetricField, x: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let m = metric_at(a, x, cfg, Order::First)?;
    let g = Christoffel::from_metric(&m);
    let n = m.a.nrows();
    let mut worst = 0.0_f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = m.da[k][(i, j)];
                for l in 0..n {
                    v -= g.get(l, k, i) * m.a[(l, j)] + g.get(l, k, j) * m.a[(i, l)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}
