use std::fmt;

use nalgebra::DMatrix;

use super::DomainBox;

/// Smooth map `R^n → R^m` given by component functions.
///
/// Closed-form jets are optional; when absent, [`super::jet`] falls back to
/// finite differences. `jacobian` is `m × n`; `hessians` holds one symmetric
/// `n × n` matrix per output component.
pub trait SmoothMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;

    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Domain on which the map is defined, if it is restricted.
    fn domain(&self) -> Option<&DomainBox> {
        None
    }
}

impl fmt::Debug for dyn SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothMap(R^{} -> R^{})", self.dim_in(), self.dim_out())
    }
}

/// Map defined by a closure, without closed-form jets.
pub struct FnMap<F> {
    dim_in: usize,
    dim_out: usize,
    f: F,
    domain: Option<DomainBox>,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim_in: usize, dim_out: usize, f: F) -> Self {
        Self { dim_in, dim_out, f, domain: None }
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }
}

impl<F> SmoothMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn domain(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }
}

/// Constant map with exact (zero) jets.
#[derive(Clone, Debug)]
pub struct ConstantMap {
    dim_in: usize,
    value: Vec<f64>,
}

impl ConstantMap {
    pub fn new(dim_in: usize, value: Vec<f64>) -> Self {
        Self { dim_in, value }
    }
}

impl SmoothMap for ConstantMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.value.len()
    }

    fn eval(&self, _x: &[f64]) -> Vec<f64> {
        self.value.clone()
    }

    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.value.len(), self.dim_in))
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.dim_in, self.dim_in); self.value.len()])
    }
}

/// Affine map `x ↦ A x + c` with exact jets.
#[derive(Clone, Debug)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: Vec<f64>) -> Self {
        assert_eq!(matrix.nrows(), offset.len(), "offset length must match the output dimension");
        Self { matrix, offset }
    }

    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let m = matrix.nrows();
        Self::new(matrix, vec![0.0; m])
    }
}

impl SmoothMap for AffineMap {
    fn dim_in(&self) -> usize {
        self.matrix.ncols()
    }

    fn dim_out(&self) -> usize {
        self.matrix.nrows()
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|i| self.offset[i] + (0..x.len()).map(|j| self.matrix[(i, j)] * x[j]).sum::<f64>())
            .collect()
    }

    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.matrix.clone())
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.matrix.ncols();
        Some(vec![DMatrix::zeros(n, n); self.matrix.nrows()])
    }
}
