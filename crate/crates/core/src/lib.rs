//! Numerical verification of conformal vector fields on (α,β)-metric spaces.
//!
//! A Finsler metric of the form `F = α φ(β/α)` is built from a Riemannian
//! metric `α = sqrt(a_ij y^i y^j)` and a one-form `β = b_i y^i`. A vector
//! field `V` is conformal with factor `c` when its complete lift satisfies
//! `V^c(F) = 2cF`. This crate evaluates the tensor equations that
//! characterize such fields pointwise, fits the conformal factor, and checks
//! the classification conditions (Douglas, Killing, Einstein, ...) that
//! decide whether a conformal field must be homothetic.
//!
//! Module map:
//!
//! - [`diffgeo`]: derivative jets, Christoffel symbols, covariant derivatives
//!   and Ricci curvature in coordinates.
//! - [`metrics`]: the φ-families, evaluation of `F`, unit-norm rescaling for
//!   m-Kropina metrics and the `(u, v, w)` deformation of `(α, β)`.
//! - [`conformal`]: complete lifts, Lie-derivative data and least-squares fits
//!   of the conformal factor.
//! - [`classification`]: pointwise residuals of curvature-type conditions.
//! - [`catalog`]: closed-form scenarios, including the Kropina family with a
//!   non-homothetic conformal field.
//! - [`cli`]: configuration documents, sampling and report generation for the
//!   `verify` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod classification;
pub mod cli;
pub mod conformal;
pub mod diffgeo;
pub mod error;
pub mod metrics;

pub use error::{Error, Result};
