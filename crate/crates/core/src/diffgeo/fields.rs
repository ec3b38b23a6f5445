use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ConstantMap, FnMap, SmoothMap};
use crate::{Error, Result};

/// Riemannian metric `a_ij(x)`, stored as `n²` row-major components.
#[derive(Clone, Debug)]
pub struct MetricField {
    map: Arc<dyn SmoothMap>,
    n: usize,
}

impl MetricField {
    pub fn new(map: Arc<dyn SmoothMap>) -> Result<Self> {
        let n = map.dim_in();
        if map.dim_out() != n * n {
            return Err(Error::Dimension(format!(
                "metric on R^{n} needs {} components, map has {}",
                n * n,
                map.dim_out()
            )));
        }
        Ok(Self { map, n })
    }

    pub fn flat(n: usize) -> Self {
        let id = DMatrix::<f64>::identity(n, n);
        Self { map: Arc::new(ConstantMap::new(n, id.transpose().as_slice().to_vec())), n }
    }

    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let map = FnMap::new(n, n * n, move |x: &[f64]| row_major(&f(x)));
        Self { map: Arc::new(map), n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> &dyn SmoothMap {
        self.map.as_ref()
    }

    /// Component matrix at `x`, symmetrized to remove rounding asymmetry.
    pub fn at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_len(x, self.n)?;
        let vals = self.map.eval(x);
        finite(&vals, x)?;
        let m = DMatrix::from_row_slice(self.n, self.n, &vals);
        Ok((&m + m.transpose()) * 0.5)
    }

    /// Metric matrix and its inverse; fails unless positive definite at `x`.
    pub fn factor(&self, x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let a = self.at(x)?;
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite(x.to_vec()))?;
        Ok((a, chol.inverse()))
    }
}

/// One-form `β = b_i(x) dx^i`.
#[derive(Clone, Debug)]
pub struct OneFormField {
    map: Arc<dyn SmoothMap>,
}

/// Vector field `V = V^i(x) ∂/∂x^i`.
#[derive(Clone, Debug)]
pub struct VectorFieldOnM {
    map: Arc<dyn SmoothMap>,
}

macro_rules! component_field {
    ($ty:ident) => {
        impl $ty {
            pub fn new(map: Arc<dyn SmoothMap>) -> Result<Self> {
                if map.dim_out() != map.dim_in() {
                    return Err(Error::Dimension(format!(
                        "{} on R^{} needs {} components, map has {}",
                        stringify!($ty),
                        map.dim_in(),
                        map.dim_in(),
                        map.dim_out()
                    )));
                }
                Ok(Self { map })
            }

            pub fn constant(value: Vec<f64>) -> Self {
                Self { map: Arc::new(ConstantMap::new(value.len(), value)) }
            }

            pub fn zero(n: usize) -> Self {
                Self::constant(vec![0.0; n])
            }

            pub fn from_fn<F>(n: usize, f: F) -> Self
            where
                F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
            {
                Self { map: Arc::new(FnMap::new(n, n, f)) }
            }

            pub fn dim(&self) -> usize {
                self.map.dim_in()
            }

            pub fn map(&self) -> &dyn SmoothMap {
                self.map.as_ref()
            }

            pub fn at(&self, x: &[f64]) -> Result<DVector<f64>> {
                check_len(x, self.dim())?;
                let vals = self.map.eval(x);
                finite(&vals, x)?;
                Ok(DVector::from_vec(vals))
            }
        }
    };
}

component_field!(OneFormField);
component_field!(VectorFieldOnM);

/// Row-major component list of a square matrix.
pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Dimension(format!("point has {} coordinates, expected {n}", x.len())));
    }
    Ok(())
}

fn finite(vals: &[f64], x: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(x.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_factors_to_identity() {
        let (a, inv) = MetricField::flat(3).factor(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(a, DMatrix::identity(3, 3));
        assert_eq!(inv, DMatrix::identity(3, 3));
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let a = MetricField::from_fn(2, |_| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(matches!(a.factor(&[0.0, 0.0]), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn row_major_layout_is_preserved() {
        let a = MetricField::from_fn(2, |x| DMatrix::from_row_slice(2, 2, &[1.0, x[0], x[0], 2.0]));
        assert_eq!(a.map().eval(&[0.5, 0.0]), vec![1.0, 0.5, 0.5, 2.0]);
        let b = OneFormField::new(Arc::new(FnMap::new(2, 3, |_| vec![0.0; 3])));
        assert!(b.is_err());
    }
}
