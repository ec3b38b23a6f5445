//! Pointwise Riemannian computations in a single coordinate chart.
//!
//! Every tensor is returned in the ambient coordinate basis. Index
//! conventions: `cov[(i, j)] = b_{i|j}`, `Christoffel::get(i, j, k) = Γ^i_{jk}`,
//! and first jets are `m × n` matrices with column `k` holding `∂/∂x^k`.

mod connection;
mod domain;
mod fields;
mod jet;
mod map;

pub use connection::{
    beta_invariants, christoffel, covderiv_oneform, covderiv_vector, metric_at,
    metric_compatibility_defect, ricci, scalar_curvature, BetaInvariants, Christoffel, MetricAt,
    Ricci,
};
pub use domain::DomainBox;
pub use fields::{row_major, MetricField, OneFormField, VectorFieldOnM};
pub use jet::{jet, jet_agreement, DiffConfig, Jet, Order, Scheme};
pub use map::{AffineMap, ConstantMap, FnMap, SmoothMap};
pub(crate) use connection::{oneform_cov_with, vector_cov_with};

use nalgebra::DMatrix;

/// Frobenius norm of a matrix.
pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}
