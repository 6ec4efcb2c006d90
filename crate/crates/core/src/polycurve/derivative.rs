use num_complex::Complex64;
use num_traits::Zero;

use super::curve::{AlgebraicCurve, CurvePoint};
use crate::error::{Error, Result};
use crate::fiber::FiberFunction;

const START_NODES: usize = 64;
const MAX_NODES: usize = 4096;

/// `d^k/dxi^k f(z, pi^{-1}(xi))` at `xi = pi(a)` on the sheet through `a`,
/// by the trapezoidal Cauchy integral on a circle of radius
/// `min(chart_radius / 2, radius)`.
pub fn curve_derivative<F: FiberFunction + ?Sized>(
    curve: &AlgebraicCurve,
    f: &F,
    z: &[Complex64],
    a: CurvePoint,
    k: usize,
    radius: f64,
) -> Result<Complex64> {
    let chart = curve.branches_at(a.xi)?;
    let r = (0.5 * chart.radius_of_validity).min(radius);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("invalid quadrature radius {r}")));
    }
    let entry = curve.continue_branch(a, &[a.xi + r])?;
    let mut samples: Vec<Complex64> = Vec::new();
    let mut n = START_NODES;
    let mut previous: Option<Complex64> = None;
    let factorial: f64 = (1..=k).map(|j| j as f64).product();
    loop {
        // Lift all n nodes. Old samples are the even-indexed ones of the new set.
        let path: Vec<Complex64> = (1..=n)
            .map(|j| a.xi + Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / n as f64))
            .collect();
        let lifted = curve.track_polyline(entry, &path)?;
        samples.clear();
        samples.push(f.eval(z, &entry));
        samples.extend(lifted[..n - 1].iter().map(|p| f.eval(z, p)));
        let mut acc = Complex64::zero();
        for (j, v) in samples.iter().enumerate() {
            let theta = std::f64::consts::TAU * j as f64 / n as f64;
            acc += v * Complex64::from_polar(r.powi(-(k as i32)), -(k as f64) * theta);
        }
        let value = acc / n as f64 * factorial;
        if let Some(prev) = previous {
            let scale = samples.iter().map(|v| v.norm()).fold(0.0, f64::max) * factorial / r.powi(k as i32);
            let change = (value - prev).norm();
            if change <= 1e-12 * scale.max(value.norm()) {
                return Ok(value);
            }
            if 2 * n > MAX_NODES {
                return Err(Error::QuadratureNotConverged { nodes: n, change });
            }
        }
        previous = Some(value);
        n *= 2;
    }
}
