use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::classification::{closedness_residual, douglas_kropina_residual, einstein_residual};
use crate::conformal::{fit_conformal, homothety_test, FactorField, FitFamily, HomothetyVerdict};
use crate::diffgeo::{beta_invariants, jet, DiffConfig, Order, Scheme};

fn points(d: &DomainBox, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d.dim()).map(|i| rng.random_range(d.lower()[i]..d.upper()[i])).collect())
        .collect()
}

fn all_variants() -> Vec<Example1Params> {
    vec![
        Example1Params::variant_a_2d(),
        Example1Params::variant_a_3d(),
        Example1Params::variant_b_2d(),
        Example1Params::variant_b_3d(),
    ]
}

#[test]
fn kropina_example_parameter_sets_are_feasible() {
    for p in all_variants() {
        p.validate().unwrap();
        assert!(!p.is_complement());
    }
    let p = Example1Params::variant_a_2d();
    assert!((p.k_const()).abs() < 1e-15);
    let b = Example1Params::variant_b_2d();
    assert_eq!(b.k_const(), 1.0);
    assert!((f_ode_residual(&b, 0.0).unwrap()).abs() < 1e-15);
}

#[test]
fn kropina_example_infeasible_parameters_name_the_constraint() {
    let mut p = Example1Params::variant_a_2d();
    p.eta[1] = 0.7;
    let msg = p.validate().unwrap_err().to_string();
    assert!(msg.contains("Qη"), "{msg}");

    let mut p = Example1Params::variant_b_2d();
    p.tau = 0.1;
    assert!(p.validate().is_err());

    let comp = Example1Params {
        n: 2,
        mu: -1.0,
        tau: 0.0,
        eta: vec![1.0, 0.0],
        gamma: vec![1.0, 0.0],
        q: vec![vec![0.0; 2]; 2],
        variant: Variant::A,
    };
    assert!(comp.is_complement());
    assert!(matches!(comp.validate(), Err(Error::Infeasible(_))));
}

#[test]
fn f_equation_holds_in_closed_form() {
    let a = Example1Params::variant_a_2d();
    for c in [0.1, 0.5, -0.3, 2.0] {
        assert!(f_ode_residual(&a, c).unwrap() <= 1e-12);
    }
    let b = Example1Params::variant_b_2d();
    for c in [0.0, 0.3, -0.6, 0.7] {
        assert!(f_ode_residual(&b, c).unwrap() <= 1e-9);
    }
    assert!(f_ode_residual(&b, 0.75).is_err());
}

#[test]
fn default_domains() {
    let a = Example1Params::variant_a_2d();
    let d = a.default_domain().unwrap();
    for x in d.grid(11) {
        let (den, q) = a.domain_margin(&x);
        assert!(den > 0.0 && q >= DOMAIN_MARGIN - 1e-12);
    }
    let b = Example1Params::variant_b_3d();
    assert!(b.default_domain().is_ok());
}

#[test]
fn kropina_example_jets_agree_with_finite_differences() {
    for p in all_variants() {
        let d = p.default_domain().unwrap();
        let s = build_example1(&p, d.clone()).unwrap();
        let fd = DiffConfig::with_scheme(Scheme::Central4);
        let exact = DiffConfig::default();
        for x in points(&d.shrink(0.01).unwrap(), 5, 3) {
            for map in [s.a.map(), s.b.map(), s.v.map()] {
                let e = jet(map, &x, Order::First, &exact).unwrap();
                let f = jet(map, &x, Order::First, &fd).unwrap();
                assert!(!e.numerical);
                assert!((&e.first - &f.first).amax() < 1e-7, "{}", s.name);
            }
            let e = jet(s.a.map(), &x, Order::Second, &exact).unwrap().second.unwrap();
            let f = jet(s.a.map(), &x, Order::Second, &fd).unwrap().second.unwrap();
            for (p, q) in e.iter().zip(&f) {
                assert!((p - q).amax() < 1e-5);
            }
        }
    }
}

#[test]
fn kropina_example_unit_norm_closed_douglas() {
    let cfg = DiffConfig::default();
    for p in all_variants() {
        let d = p.default_domain().unwrap();
        let s = build_example1(&p, d.clone()).unwrap();
        for x in points(&d, 100, 11) {
            let inv = beta_invariants(&s.a, &s.b, &x, &cfg).unwrap();
            assert!((inv.b2 - 1.0).abs() <= 1e-9, "{} b² = {}", s.name, inv.b2);
        }
        for x in points(&d, 20, 12) {
            assert!(closedness_residual(&s.b, &x, &cfg).unwrap() <= 1e-7);
            assert!(douglas_kropina_residual(&s.a, &s.b, &x, &cfg).unwrap() <= 1e-7);
        }
    }
}

#[test]
fn kropina_example_conformal_factor() {
    let cfg = DiffConfig::default();
    for p in all_variants() {
        let d = p.default_domain().unwrap();
        let s = build_example1(&p, d.clone()).unwrap();
        let expected = s.expected.factor.clone().unwrap();
        let pts = points(&d, 12, 5);
        let mut fits = Vec::new();
        for x in &pts {
            let fit = fit_conformal(FitFamily::MKropinaUnitB, &s.a, &s.b, &s.v, x, &cfg, 1e-5).unwrap();
            assert!(fit.conformal, "{} {fit:?}", s.name);
            let c = expected(x);
            assert!((fit.c_hat - c).abs() <= 1e-5 * c.abs().max(1e-12), "{} {} vs {c}", s.name, fit.c_hat);
            assert!((fit.c_hat + p.c(x)).abs() <= 1e-5 * c.abs());
            fits.push(fit);
        }
        let rep = homothety_test(&FactorField::from_fits(&pts, &fits), 1e-5);
        assert_eq!(rep.verdict, HomothetyVerdict::NonHomothetic, "{}", s.name);
    }
}

#[test]
fn kropina_example_complement_alpha_part_is_killing() {
    let comp = Example1Params {
        n: 2,
        mu: -1.0,
        tau: 0.0,
        eta: vec![1.0, 0.0],
        gamma: vec![1.0, 0.0],
        q: vec![vec![0.0, 0.5], vec![-0.5, 0.0]],
        variant: Variant::A,
    };
    let d = DomainBox::cube(2, 0.5).unwrap();
    let s = build_example1_riemannian(&comp, d.clone()).unwrap();
    assert_eq!(s.expected.homothetic, Some(true));
    let pts = points(&d, 12, 9);
    let fits: Vec<_> = pts
        .iter()
        .map(|x| fit_conformal(FitFamily::Theorem1, &s.a, &s.b, &s.v, x, &DiffConfig::default(), 1e-9).unwrap())
        .collect();
    assert!(fits.iter().all(|f| f.reduced_rank && f.conformal));
    let rep = homothety_test(&FactorField::from_fits(&pts, &fits), 1e-9);
    assert_eq!(rep.verdict, HomothetyVerdict::Killing);
}

#[test]
fn kropina_example_rejects_bad_domains() {
    let p = Example1Params::variant_a_2d();
    let wide = DomainBox::cube(2, 1.2).unwrap();
    assert!(matches!(build_example1(&p, wide), Err(Error::DomainViolation(_))));
}

#[test]
fn builtin_examples() {
    let cfg = DiffConfig::default();
    let dil = builtin("flat+const-b+dilation", &BuiltinParams { lambda: Some(0.8), ..Default::default() }).unwrap();
    let f = fit_conformal(FitFamily::Theorem1, &dil.a, &dil.b, &dil.v, &[0.1, 0.2], &cfg, 1e-12).unwrap();
    assert!((f.c_hat - 0.4).abs() < 1e-12);
    assert_eq!((dil.expected.factor.unwrap())(&[0.0, 0.0]), 0.4);

    let sf = builtin("space-form", &BuiltinParams { mu: Some(1.0), n: Some(3), ..Default::default() }).unwrap();
    let rep = einstein_residual(&sf.a, &[0.1, 0.2, -0.1], &cfg, 3).unwrap();
    assert!(rep.residual <= 1e-10 && !rep.low_confidence, "{rep:?}");
    assert!((rep.scalar_curvature - 6.0).abs() < 1e-9);

    let rot = builtin("flat+const-b+rotation", &BuiltinParams::default()).unwrap();
    assert_eq!(rot.expected.conformal, Some(true));
    assert_eq!(rot.expected.killing_field, Some(true));
    let f = fit_conformal(FitFamily::Theorem1, &rot.a, &rot.b, &rot.v, &[0.1, 0.2, 0.3], &cfg, 1e-12).unwrap();
    assert!(f.conformal && f.c_hat.abs() < 1e-12);

    let twisted = builtin(
        "flat+const-b+rotation",
        &BuiltinParams { b: Some(vec![1.0, 0.0, 0.0]), ..Default::default() },
    )
    .unwrap();
    assert_eq!(twisted.expected.conformal, Some(false));
    let f = fit_conformal(FitFamily::Theorem1, &twisted.a, &twisted.b, &twisted.v, &[0.1, 0.2, 0.3], &cfg, 1e-9)
        .unwrap();
    assert!(!f.conformal);

    let moe = builtin("flat+const-b+moebius", &BuiltinParams { k: Some(vec![0.0, 1.0]), ..Default::default() }).unwrap();
    assert_eq!(moe.expected.conformal, Some(false));

    for name in BUILTIN_NAMES {
        let s = builtin(name, &BuiltinParams::default()).unwrap();
        s.check().unwrap();
    }
    assert!(matches!(builtin("nope", &BuiltinParams::default()), Err(Error::Config(_))));
}

#[test]
fn inline_scenario_round_trip() {
    let json = r#"{
        "n": 2,
        "metric": [[1.0, 0.0], [0.0, 1.0]],
        "form": [1.0, 0.0],
        "field": [[{"coef": 0.6, "powers": [1]}], [{"coef": 0.6, "powers": [0, 1]}]],
        "phi": {"family": "exp-type", "eps": -1},
        "expected_factor": 0.3
    }"#;
    let spec: InlineScenario = serde_json::from_str(json).unwrap();
    let s = build_inline(&spec).unwrap();
    assert!(matches!(s.phi, PhiFamily::ExpType { eps: Sign::Minus }));
    let f = fit_conformal(
        FitFamily::ExpType { eps: Sign::Minus },
        &s.a,
        &s.b,
        &s.v,
        &[0.2, 0.1],
        &DiffConfig::default(),
        1e-12,
    )
    .unwrap();
    assert!((f.c_hat - 0.3).abs() < 1e-12);
    assert_eq!((s.expected.factor.unwrap())(&[0.0, 0.0]), 0.3);

    let bad = r#"{"n": 2, "metric": [[1.0]], "form": [1.0, 0.0], "field": [0.0, 0.0]}"#;
    assert!(build_inline(&serde_json::from_str(bad).unwrap()).is_err());
}
