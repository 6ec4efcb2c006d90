use num_complex::Complex64;

use super::curve::{AlgebraicCurve, CurvePoint};
use crate::error::{Error, Result};
use crate::upoly::UPoly;

/// Paths must stay this far (relative to the critical-set scale) from
/// every critical value.
pub const PATH_SAFETY_MARGIN: f64 = 1e-3;

const MAX_HALVINGS: u32 = 20;
const MIN_STEP: f64 = 1e-12;

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

impl AlgebraicCurve {
    /// Rejects a polyline that comes too close to a critical value.
    pub fn check_path(&self, start: Complex64, path: &[Complex64]) -> Result<()> {
        let margin = PATH_SAFETY_MARGIN * self.critical_scale();
        let mut prev = start;
        for &next in path {
            for &c in &self.critical_xi {
                let d = segment_distance(c, prev, next);
                if d < margin {
                    return Err(Error::PathHitsCritical { critical: c, distance: d });
                }
            }
            prev = next;
        }
        Ok(())
    }

    /// Tracks the sheet through `start` along the polyline `start.xi ->
    /// path[0] -> path[1] -> ...` and returns the endpoint.
    pub fn continue_branch(&self, start: CurvePoint, path: &[Complex64]) -> Result<CurvePoint> {
        let pts = self.track_polyline(start, path)?;
        Ok(*pts.last().unwrap_or(&start))
    }

    /// Like [`continue_branch`](Self::continue_branch) but returns the
    /// lifted point at every vertex of the polyline.
    pub fn track_polyline(&self, start: CurvePoint, path: &[Complex64]) -> Result<Vec<CurvePoint>> {
        self.check_path(start.xi, path)?;
        let tol = 1e-9 * self.coefficient_scale();
        if self.poly.eval(start.xi, start.eta).norm() > tol * (1.0 + start.eta.norm()).powi(self.eta_degree as i32) {
            return Err(Error::Precondition(format!(
                "start point ({}, {}) is not on the curve",
                start.xi, start.eta
            )));
        }
        let mut out = Vec::with_capacity(path.len());
        let mut tracker = Tracker::new(self, start)?;
        for &target in path {
            tracker.segment(target)?;
            out.push(tracker.point());
        }
        Ok(out)
    }
}

struct Tracker<'a> {
    curve: &'a AlgebraicCurve,
    xi: Complex64,
    eta: Complex64,
    // all roots over the current xi, used for the sheet gap
    roots: Vec<Complex64>,
    step: f64,
}

impl<'a> Tracker<'a> {
    fn new(curve: &'a AlgebraicCurve, start: CurvePoint) -> Result<Self> {
        let roots = if curve.eta_degree > 1 { curve.sheet_values(start.xi)? } else { Vec::new() };
        Ok(Tracker { curve, xi: start.xi, eta: start.eta, roots, step: 0.125 })
    }

    fn point(&self) -> CurvePoint {
        CurvePoint::new(self.xi, self.eta)
    }

    fn gap(&self) -> f64 {
        self.roots
            .iter()
            .map(|r| (r - self.eta).norm())
            .filter(|&d| d > 1e-300)
            .fold(f64::INFINITY, f64::min)
    }

    fn segment(&mut self, target: Complex64) -> Result<()> {
        let a = self.xi;
        let delta = target - a;
        if delta.norm() == 0.0 {
            return Ok(());
        }
        let mut t = 0.0;
        // step is in units of xi-distance, carried across segments
        let len = delta.norm();
        while t < 1.0 {
            let mut h = (self.step / len).min(1.0 - t);
            let mut halvings = 0;
            loop {
                let t_new = if t + h >= 1.0 - 1e-15 { 1.0 } else { t + h };
                let xi_new = if t_new == 1.0 { target } else { a + delta * t_new };
                if let Some((eta_new, correction, roots_new)) = self.attempt(xi_new) {
                    let gap = self.gap();
                    if correction <= 0.1 * gap || gap.is_infinite() {
                        self.xi = xi_new;
                        self.eta = eta_new;
                        self.roots = roots_new;
                        t = t_new;
                        let taken = h * len;
                        self.step = if correction < 0.025 * gap { 2.0 * taken } else { taken };
                        break;
                    }
                }
                halvings += 1;
                h *= 0.5;
                if h * len < MIN_STEP * (1.0 + a.norm()) || halvings > 60 {
                    return Err(Error::TrackingLost { xi: a + delta * t });
                }
            }
        }
        Ok(())
    }

    /// Predictor plus damped Newton at `xi_new`. Returns the corrected root,
    /// the size of the correction and all roots over `xi_new`.
    fn attempt(&self, xi_new: Complex64) -> Option<(Complex64, f64, Vec<Complex64>)> {
        let poly = &self.curve.poly;
        let (_, p_xi, p_eta) = poly.eval_with_gradient(self.xi, self.eta);
        let tangent = if p_eta.norm() > 0.0 { -p_xi / p_eta } else { return None };
        let predicted = self.eta + tangent * (xi_new - self.xi);
        let coeffs = UPoly { coeffs: poly.eta_coeffs(xi_new) };
        let mut eta = predicted;
        let mut converged = false;
        for _ in 0..40 {
            let (v, dv) = coeffs.eval_with_derivative(eta);
            if dv.norm() == 0.0 {
                return None;
            }
            let full = v / dv;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let trial = eta - full * lambda;
                if coeffs.eval(trial).norm() < v.norm() || v.norm() == 0.0 {
                    eta = trial;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            let step = (full * lambda).norm();
            if step <= 4.0 * f64::EPSILON * (1.0 + eta.norm()) {
                converged = true;
                break;
            }
            if !accepted {
                // no decrease at all: we are at rounding level
                converged = v.norm() <= 1e-12 * self.curve.coefficient_scale() * (1.0 + eta.norm()).powi(self.curve.eta_degree as i32);
                break;
            }
        }
        if !converged {
            return None;
        }
        let correction = (eta - predicted).norm();
        let roots = if self.curve.eta_degree > 1 {
            let mut roots = coeffs.roots_from(&self.roots).ok()?;
            // the tracked root must be one of them
            let nearest = roots
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - eta).norm().total_cmp(&(b.1 - eta).norm()))
                .map(|(i, _)| i)?;
            roots[nearest] = eta;
            roots
        } else {
            Vec::new()
        };
        Some((eta, correction, roots))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::BivariatePolynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sqrt_curve() -> AlgebraicCurve {
        AlgebraicCurve::new(BivariatePolynomial::from_real_terms(&[(0, 2, 1.0), (1, 0, -1.0)]).unwrap()).unwrap()
    }

    fn circle(center: Complex64, radius: f64, start_angle: f64, n: usize) -> Vec<Complex64> {
        (1..=n)
            .map(|k| center + Complex64::from_polar(radius, start_angle + std::f64::consts::TAU * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn real_sqrt_branch() {
        let curve = sqrt_curve();
        let end = curve.continue_branch(CurvePoint::new(c(4.0, 0.0), c(2.0, 0.0)), &[c(9.0, 0.0)]).unwrap();
        assert!((end.eta - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn graph_is_path_independent() {
        let curve = AlgebraicCurve::new(BivariatePolynomial::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]).unwrap()).unwrap();
        let start = CurvePoint::new(c(1.0, 0.0), c(1.0, 0.0));
        let end = curve.continue_branch(start, &[c(0.0, 3.0), c(-2.0, -1.0), c(2.0, 0.0)]).unwrap();
        assert!((end.eta - c(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn loop_around_branch_point_swaps_sheets() {
        let curve = sqrt_curve();
        let start = CurvePoint::new(c(1.0, 0.0), c(1.0, 0.0));
        let end = curve.continue_branch(start, &circle(c(0.0, 0.0), 1.0, 0.0, 32)).unwrap();
        assert!((end.eta - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn null_homotopic_loop_returns_to_start() {
        let curve = sqrt_curve();
        let start = CurvePoint::new(c(3.0, 0.0), c(3f64.sqrt(), 0.0));
        let end = curve.continue_branch(start, &circle(c(4.0, 0.0), 1.0, std::f64::consts::PI, 40)).unwrap();
        assert!((end.eta - start.eta).norm() < 1e-12);
    }

    #[test]
    fn path_through_critical_point_is_rejected() {
        let curve = sqrt_curve();
        let start = CurvePoint::new(c(-1.0, 0.0), c(0.0, 1.0));
        assert!(matches!(
            curve.continue_branch(start, &[c(1.0, 0.0)]),
            Err(Error::PathHitsCritical { .. })
        ));
    }

    #[test]
    fn close_sheets_are_not_confused() {
        // eta^2 - xi passing at distance 0.01 from the branch point
        let curve = sqrt_curve();
        let start = CurvePoint::new(c(-1.0, 0.01), curve.poly.eta_poly(c(-1.0, 0.01)).roots().unwrap()[0]);
        let pts = curve.track_polyline(start, &[c(1.0, 0.01)]).unwrap();
        let end = pts[0];
        assert!(curve.relative_residual(&end) < 1e-12);
        // going above the branch point keeps the sign of Re(eta) * Im(eta_start)
        let expected = if start.eta.im > 0.0 { end.xi.sqrt() } else { -end.xi.sqrt() };
        assert!((end.eta - expected).norm() < 1e-10);
    }

    #[test]
    fn start_off_the_curve_is_rejected() {
        let curve = sqrt_curve();
        assert!(matches!(
            curve.continue_branch(CurvePoint::new(c(4.0, 0.0), c(1.0, 0.0)), &[c(5.0, 0.0)]),
            Err(Error::Precondition(_))
        ));
    }
}
