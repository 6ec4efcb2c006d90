use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expansion::{ExpansionConfig, ExpansionContext, HartogsExpansion};
use super::lattice::ZLattice;
use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::lemniscate::RationalFunction;
use crate::polycurve::AlgebraicCurve;

/// Scaled coefficients below this fraction of the largest are treated as
/// rounding noise.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Root-test estimate of the radius of convergence in powers of `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub infinite: bool,
    /// Radius from a least-squares fit of `log ||c_k||` against `k`.
    pub fit_radius: f64,
    pub discrepancy: f64,
    pub window: (usize, usize),
    /// False when the tail of the window fell below the noise floor.
    pub resolved: bool,
    pub level: f64,
}

impl RadiusEstimate {
    fn infinite(level: f64, window: (usize, usize)) -> Self {
        RadiusEstimate {
            radius: f64::INFINITY,
            infinite: true,
            fit_radius: f64::INFINITY,
            discrepancy: 0.0,
            window,
            resolved: false,
            level,
        }
    }
}

/// Estimate from `a_k = ||c_k|| level^k`, `k = 0..`.
pub fn radius_from_scaled(scaled: &[f64], level: f64) -> Result<RadiusEstimate> {
    if scaled.len() < 3 {
        return Err(Error::Precondition("at least three coefficients are needed".into()));
    }
    let k_max = scaled.len() - 1;
    let amax = scaled.iter().copied().fold(0.0, f64::max);
    if amax == 0.0 {
        return Ok(RadiusEstimate::infinite(level, (1, k_max)));
    }
    let noise = NOISE_FLOOR * amax;
    let Some(last) = (1..=k_max).rev().find(|&k| scaled[k] > noise) else {
        return Ok(RadiusEstimate::infinite(level, (1, k_max)));
    };
    let resolved = last + 4 > k_max;
    let root = |k: usize| scaled[k].powf(1.0 / k as f64);
    let max_root = |lo: usize, hi: usize| {
        (lo.max(1)..=hi)
            .filter(|&k| scaled[k] > noise)
            .map(root)
            .fold(0.0, f64::max)
    };
    if !resolved {
        if last < 8 {
            return Ok(RadiusEstimate::infinite(level, (1, last)));
        }
        let early = max_root(last / 4, last / 2);
        let late = max_root(3 * last / 4, last);
        if late < 0.7 * early {
            return Ok(RadiusEstimate::infinite(level, (last / 2, last)));
        }
    }
    let lo = (last / 2).max(1);
    let radius = level / max_root(lo, last);

    let pts: Vec<(f64, f64)> = (lo..=last)
        .filter(|&k| scaled[k] > noise)
        .map(|k| (k as f64, scaled[k].ln()))
        .collect();
    let fit_radius = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        level * (-sxy / sxx).exp()
    } else {
        radius
    };
    Ok(RadiusEstimate {
        radius,
        infinite: false,
        fit_radius,
        discrepancy: (radius - fit_radius).abs() / radius,
        window: (lo, last),
        resolved,
        level,
    })
}

/// Estimate from unscaled norms `||c_k||`.
pub fn radius_from_norms(norms: &[f64]) -> Result<RadiusEstimate> {
    radius_from_scaled(norms, 1.0)
}

pub fn radius_estimate(exp: &HartogsExpansion) -> Result<RadiusEstimate> {
    radius_from_scaled(&exp.scaled_norms, exp.level)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RadiusFieldConfig {
    pub expansion: ExpansionConfig,
    /// Further expansions at larger levels after the first.
    pub adaptive_rounds: usize,
    /// New level as a fraction of the current radius estimate.
    pub shrink: f64,
}

impl Default for RadiusFieldConfig {
    fn default() -> Self {
        RadiusFieldConfig { expansion: ExpansionConfig::default(), adaptive_rounds: 4, shrink: 0.85 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusField {
    pub lattice: ZLattice,
    pub level: f64,
    pub estimates: Vec<Option<RadiusEstimate>>,
    pub failures: Vec<Option<String>>,
    /// Minimum of the radius over the Chebyshev window of each node.
    pub r_star: Vec<Option<f64>>,
}

impl RadiusField {
    pub fn radius(&self, idx: usize) -> Option<f64> {
        self.estimates[idx].map(|e| e.radius)
    }
}

/// Levels are kept on the ladder `level * 2^(j/8)` so that contour geometry
/// can be shared between lattice points.
fn ladder_below(base: f64, x: f64) -> f64 {
    let j = (8.0 * (x / base).log2()).floor();
    base * 2f64.powf(j / 8.0)
}

pub fn radius_at<F: FiberFunction + ?Sized>(
    ctx: &ExpansionContext<'_>,
    f: &F,
    z: &[Complex64],
    level: f64,
    config: &RadiusFieldConfig,
) -> Result<RadiusEstimate> {
    let mut lvl = level;
    let mut best = radius_estimate(&ctx.expand(f, z, lvl)?)?;
    for _ in 0..config.adaptive_rounds {
        if best.infinite {
            break;
        }
        let next = ladder_below(level, config.shrink * best.radius.min(best.fit_radius));
        if next <= 1.05 * lvl {
            break;
        }
        match ctx.expand(f, z, next).and_then(|e| radius_estimate(&e)) {
            Ok(est) => {
                best = est;
                lvl = next;
            }
            Err(_) => break,
        }
    }
    Ok(best)
}

/// Radius of convergence at every lattice point, with masked failures.
pub fn radius_field<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    g: &RationalFunction,
    level: f64,
    lattice: &ZLattice,
    config: RadiusFieldConfig,
) -> Result<RadiusField> {
    let ctx = ExpansionContext::new(curve, g, config.expansion);
    let results: Vec<Result<RadiusEstimate>> = (0..lattice.len())
        .into_par_iter()
        .map(|i| radius_at(&ctx, f, &lattice.point(i), level, &config))
        .collect();
    let mut estimates = Vec::with_capacity(results.len());
    let mut failures = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(e) => {
                estimates.push(Some(e));
                failures.push(None);
            }
            Err(e) => {
                estimates.push(None);
                failures.push(Some(e.to_string()));
            }
        }
    }
    let r_star = window_minimum(lattice, &estimates.iter().map(|e| e.map(|e| e.radius)).collect::<Vec<_>>());
    Ok(RadiusField { lattice: lattice.clone(), level, estimates, failures, r_star })
}

/// Minimum over the Chebyshev window, ignoring masked neighbours.
pub fn window_minimum(lattice: &ZLattice, values: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..lattice.len())
        .map(|i| {
            values[i]?;
            lattice.window(i).into_iter().filter_map(|j| values[j]).reduce(f64::min)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::CurvePoint;

    #[test]
    fn constant_norms_have_unit_radius() {
        let est = radius_from_norms(&[1.0; 61]).unwrap();
        assert!((est.radius - 1.0).abs() < 1e-12);
        assert!(!est.infinite);
        assert!(est.discrepancy < 1e-12);
    }

    #[test]
    fn geometric_norms() {
        let norms: Vec<f64> = (0..=60).map(|k| 0.5f64.powi(k)).collect();
        let est = radius_from_norms(&norms).unwrap();
        assert!((est.radius - 2.0).abs() < 1e-9);
        assert!((est.fit_radius - 2.0).abs() < 1e-9);
    }

    #[test]
    fn factorial_decay_is_infinite() {
        let mut norms = vec![1.0];
        for k in 1..=60 {
            norms.push(norms[k - 1] / k as f64);
        }
        assert!(radius_from_norms(&norms).unwrap().infinite);
        assert!(radius_from_norms(&[1.0, 0.0, 0.0, 0.0]).unwrap().infinite);
    }

    #[test]
    fn simple_pole_radius() {
        let curve = AlgebraicCurve::identity_graph();
        let g = RationalFunction::identity();
        let lattice = ZLattice::real_line(0.0, 0.25, 3).unwrap();
        let f = |z: &[Complex64], w: &CurvePoint| (w.xi - (2.0 + z[0])).inv();
        let field = radius_field(&f, &curve, &g, 1.0, &lattice, RadiusFieldConfig::default()).unwrap();
        for i in 0..3 {
            let truth = 2.0 + 0.25 * i as f64;
            let r = field.radius(i).unwrap();
            assert!((r - truth).abs() < 0.05 * truth, "{r} vs {truth}");
        }
        assert_eq!(field.r_star[1], field.radius(0));
    }
}
