use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::Scenario;
use crate::diffgeo::DiffConfig;
use crate::metrics::{AlphaBetaMetric, PhiFamily, TangentSample};
use crate::{Error, Result};

/// Rays with `|β| < SINGULAR_MARGIN·‖β‖_α·α` are redrawn for singular families.
pub const SINGULAR_MARGIN: f64 = 0.2;
/// Rays with `F/α` below this are redrawn for Randers and general `φ`.
pub const POSITIVITY_MARGIN: f64 = 0.1;
pub const MAX_REDRAWS: usize = 100;

/// Base points and, for each, a bundle of admissible rays.
#[derive(Clone, Debug)]
pub struct Samples {
    pub points: Vec<Vec<f64>>,
    pub rays: Vec<Vec<Vec<f64>>>,
}

impl Samples {
    pub fn tangent(&self, point: usize) -> Vec<TangentSample> {
        self.rays[point]
            .iter()
            .map(|y| TangentSample { x: self.points[point].clone(), y: y.clone() })
            .collect()
    }
}

/// Draws points uniformly in the scenario box, pulled in from the boundary
/// by twice the stencil reach, then rays uniformly on the unit sphere.
///
/// Points are drawn before any ray so that the point set depends only on
/// the seed and count.
pub fn draw(scenario: &Scenario, count: usize, rays: usize, seed: u64, cfg: &DiffConfig) -> Result<Samples> {
    let n = scenario.dim();
    let reach = cfg.reach(scenario.domain.largest_abs_coordinate());
    let inner = scenario.domain.shrink(2.0 * reach)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..n).map(|i| rng.random_range(inner.lower()[i]..inner.upper()[i])).collect())
        .collect();

    let metric = AlphaBetaMetric::new(scenario.a.clone(), scenario.b.clone(), scenario.phi.clone())?;
    let mut bundles = Vec::with_capacity(count);
    for x in &points {
        let (_, inv) = scenario.a.factor(x)?;
        let b = scenario.b.at(x)?;
        let b_norm = b.dot(&(&inv * &b)).max(0.0).sqrt();
        let mut bundle = Vec::with_capacity(rays);
        for _ in 0..rays {
            bundle.push(draw_ray(&mut rng, &metric, x, b_norm)?);
        }
        bundles.push(bundle);
    }
    Ok(Samples { points, rays: bundles })
}

fn draw_ray(rng: &mut ChaCha8Rng, metric: &AlphaBetaMetric, x: &[f64], b_norm: f64) -> Result<Vec<f64>> {
    let n = x.len();
    for _ in 0..MAX_REDRAWS {
        let mut y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        if admissible(metric, x, &y, b_norm) {
            return Ok(y);
        }
    }
    Err(Error::DomainViolation(format!(
        "no admissible ray at {x:?} after {MAX_REDRAWS} draws for {}",
        metric.phi.tag()
    )))
}

fn admissible(metric: &AlphaBetaMetric, x: &[f64], y: &[f64], b_norm: f64) -> bool {
    let Ok((alpha, beta)) = metric.alpha_beta(x, y) else {
        return false;
    };
    let Ok(f) = metric.phi.finsler_value(alpha, beta) else {
        return false;
    };
    if metric.phi.is_singular() && beta.abs() < SINGULAR_MARGIN * b_norm * alpha {
        return false;
    }
    if matches!(metric.phi, PhiFamily::Randers | PhiFamily::General(_)) && f < POSITIVITY_MARGIN * alpha {
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, build_example1, BuiltinParams, Example1Params};

    #[test]
    fn same_seed_same_samples() {
        let s = builtin("flat+const-b+dilation", &BuiltinParams::default()).unwrap();
        let cfg = DiffConfig::default();
        let a = draw(&s, 10, 3, 5, &cfg).unwrap();
        let b = draw(&s, 10, 3, 5, &cfg).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.rays, b.rays);
        let c = draw(&s, 10, 3, 6, &cfg).unwrap();
        assert_ne!(a.points, c.points);
        assert!(a.points.iter().all(|p| s.domain.contains(p)));
    }

    #[test]
    fn kropina_rays_respect_the_singular_margin() {
        let p = Example1Params::variant_b_2d();
        let s = build_example1(&p, p.default_domain().unwrap()).unwrap();
        let metric = AlphaBetaMetric::new(s.a.clone(), s.b.clone(), s.phi.clone()).unwrap();
        let smp = draw(&s, 5, 6, 1, &DiffConfig::default()).unwrap();
        for (x, bundle) in smp.points.iter().zip(&smp.rays) {
            for y in bundle {
                let (al, be) = metric.alpha_beta(x, y).unwrap();
                assert!(be >= SINGULAR_MARGIN * al * 0.999, "{be} vs {al}");
            }
        }
    }

    #[test]
    fn vanishing_form_has_no_kropina_rays() {
        let mut s = builtin("flat-euclidean", &BuiltinParams::default()).unwrap();
        s.phi = PhiFamily::Kropina;
        assert!(draw(&s, 1, 1, 0, &DiffConfig::default()).is_err());
    }
}
