use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use conformal_ab::catalog::{build_example1, Example1Params, QuadraticField};
use conformal_ab::conformal::{fit_conformal, lift_identity, FitFamily};
use conformal_ab::diffgeo::{AffineMap, DiffConfig, MetricField, OneFormField, Scheme, VectorFieldOnM};
use conformal_ab::metrics::{Sign, TangentSample};

fn flat_unit(n: usize) -> (MetricField, OneFormField) {
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    (MetricField::flat(n), OneFormField::constant(b))
}

/// `λx + Qx + a₀` with `Q` antisymmetric and `Qᵀb = 0` for `b = e₁`.
fn conformal_affine(lambda: f64, q12: f64, a0: [f64; 3]) -> VectorFieldOnM {
    let mut m = DMatrix::identity(3, 3) * lambda;
    m[(1, 2)] += q12;
    m[(2, 1)] -= q12;
    VectorFieldOnM::new(Arc::new(AffineMap::new(m, a0.to_vec()))).unwrap()
}

fn exact() -> DiffConfig {
    DiffConfig::with_scheme(Scheme::AnalyticWhenAvailable)
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.4..0.4_f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn factors_add(l1 in -2.0..2.0_f64, l2 in -2.0..2.0_f64, q1 in -1.0..1.0_f64, q2 in -1.0..1.0_f64, x in coords()) {
        let (a, b) = flat_unit(3);
        let v1 = conformal_affine(l1, q1, [0.1, 0.0, 0.2]);
        let v2 = conformal_affine(l2, q2, [0.0, -0.3, 0.0]);
        let sum = conformal_affine(l1 + l2, q1 + q2, [0.1, -0.3, 0.2]);
        let cfg = exact();
        let f = |v: &VectorFieldOnM| fit_conformal(FitFamily::Theorem1, &a, &b, v, &x, &cfg, 1e-9).unwrap();
        let (c1, c2, c) = (f(&v1).c_hat, f(&v2).c_hat, f(&sum));
        prop_assert!(c.conformal);
        prop_assert!((c.c_hat - c1 - c2).abs() <= 1e-6);
    }

    #[test]
    fn factors_scale(kappa in prop::sample::select(vec![-1.0, 2.0, 10.0]), lambda in -2.0..2.0_f64, x in coords()) {
        let (a, b) = flat_unit(3);
        let cfg = exact();
        for fam in [FitFamily::Theorem1, FitFamily::ExpType { eps: Sign::Minus }] {
            let base = fit_conformal(fam, &a, &b, &conformal_affine(lambda, 0.3, [0.0; 3]), &x, &cfg, 1e-9).unwrap();
            let scaled = conformal_affine(kappa * lambda, kappa * 0.3, [0.0; 3]);
            let s = fit_conformal(fam, &a, &b, &scaled, &x, &cfg, 1e-9).unwrap();
            prop_assert!((s.c_hat - kappa * base.c_hat).abs() <= 1e-9);
            if let (Some(t), Some(t0)) = (s.tau_hat, base.tau_hat) {
                prop_assert!((t - kappa * t0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn kropina_example_factor_scales(kappa in prop::sample::select(vec![-1.0, 2.0, 10.0]), t in 0.0..1.0_f64) {
        let p = Example1Params::variant_b_2d();
        let s = build_example1(&p, p.default_domain().unwrap()).unwrap();
        let q = p.quadratic_field();
        let scaled = QuadraticField {
            tau: kappa * q.tau,
            eta: q.eta.iter().map(|v| kappa * v).collect(),
            gamma: q.gamma.iter().map(|v| kappa * v).collect(),
            q: q.q * kappa,
        };
        let scaled = VectorFieldOnM::new(Arc::new(scaled)).unwrap();
        let x = [0.3 * t - 0.1, 0.2 - 0.3 * t];
        let cfg = exact();
        let base = fit_conformal(FitFamily::MKropinaUnitB, &s.a, &s.b, &s.v, &x, &cfg, 1e-6).unwrap();
        let f = fit_conformal(FitFamily::MKropinaUnitB, &s.a, &s.b, &scaled, &x, &cfg, 1e-6).unwrap();
        prop_assert!((f.c_hat - kappa * base.c_hat).abs() <= 1e-9 * kappa.abs().max(1.0));
    }

    #[test]
    fn lift_identity_holds_with_finite_differences(
        coef in prop::collection::vec(-1.0..1.0_f64, 9),
        x in coords(),
        y in prop::collection::vec(-1.0..1.0_f64, 3),
    ) {
        prop_assume!(y.iter().any(|v| v.abs() > 0.1));
        let a = MetricField::from_fn(3, |x: &[f64]| {
            let d = 1.0 + 0.2 * x[0] * x[0];
            DMatrix::from_row_slice(
                3,
                3,
                &[d, 0.1 * x[1], 0.0, 0.1 * x[1], 1.0, 0.05 * x[2], 0.0, 0.05 * x[2], 1.0 + 0.1 * x[1]],
            )
        });
        let b = OneFormField::from_fn(3, |x: &[f64]| vec![0.3 * x[1], 0.1, 0.2 * x[0] * x[2]]);
        let m = DMatrix::from_row_slice(3, 3, &coef);
        let v = VectorFieldOnM::new(Arc::new(AffineMap::linear(m))).unwrap();
        let sample = TangentSample::new(x, y).unwrap();
        let id = lift_identity(&a, &b, &v, &sample, &DiffConfig::with_scheme(Scheme::Central4)).unwrap();
        prop_assert!(id.alpha_defect <= 1e-6, "{id:?}");
        prop_assert!(id.beta_defect <= 1e-6, "{id:?}");
    }
}

#[test]
fn zero_field_has_zero_factor() {
    let (a, b) = flat_unit(3);
    let v = VectorFieldOnM::new(Arc::new(QuadraticField::zero(3))).unwrap();
    for fam in [FitFamily::Theorem1, FitFamily::MKropinaUnitB, FitFamily::ExpType { eps: Sign::Plus }] {
        let f = fit_conformal(fam, &a, &b, &v, &[0.1, 0.2, 0.3], &exact(), 1e-12).unwrap();
        assert!(f.conformal && f.c_hat.abs() < 1e-15);
    }
}
