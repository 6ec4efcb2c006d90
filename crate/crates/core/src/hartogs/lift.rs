use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lemniscate::Contour;
use crate::polycurve::{AlgebraicCurve, CurvePoint};

/// One closed loop of the lifted cycle. It covers its base loop
/// `base_circuits` times before closing.
#[derive(Clone, Debug)]
pub struct LiftedLoop {
    pub points: Vec<CurvePoint>,
    /// `dxi/dt` and `deta/dt` with respect to the base parameter.
    pub dxi: Vec<Complex64>,
    pub deta: Vec<Complex64>,
    pub step: f64,
    pub base_component: usize,
    pub base_circuits: u32,
}

#[derive(Clone, Debug)]
pub struct LiftedContour {
    pub loops: Vec<LiftedLoop>,
}

impl LiftedContour {
    pub fn node_count(&self) -> usize {
        self.loops.iter().map(|l| l.points.len()).sum()
    }
}

fn eta_slope(curve: &AlgebraicCurve, p: &CurvePoint) -> Complex64 {
    let (_, p_xi, p_eta) = curve.poly.eval_with_gradient(p.xi, p.eta);
    -p_xi / p_eta
}

/// Lifts every loop of `base` to all sheets. Sheets exchanged by the
/// monodromy of a loop are joined into one longer loop.
pub fn lift_contour(curve: &AlgebraicCurve, base: &Contour) -> Result<LiftedContour> {
    let mut loops = Vec::new();
    for (ci, range) in base.components.iter().enumerate() {
        let nodes = &base.nodes[range.clone()];
        let der = &base.derivative_nodes[range.clone()];
        let step = base.steps[ci];
        let n = nodes.len();
        if n == 0 {
            continue;
        }
        let chart = curve.branches_at(nodes[0])?;
        let sheets = chart.sheet_values;
        let mut used = vec![false; sheets.len()];
        if curve.eta_degree == 1 {
            let mut points = Vec::with_capacity(n);
            for &xi in nodes {
                let eta = curve.sheet_values(xi)?[0];
                points.push(CurvePoint::new(xi, eta));
            }
            loops.push(finish(curve, points, der, step, ci, 1));
            continue;
        }
        let path: Vec<Complex64> = nodes[1..].iter().copied().chain(std::iter::once(nodes[0])).collect();
        for s in 0..sheets.len() {
            if used[s] {
                continue;
            }
            used[s] = true;
            let mut points = Vec::new();
            let mut current = CurvePoint::new(nodes[0], sheets[s]);
            let mut circuits = 0u32;
            loop {
                let tracked = curve.track_polyline(current, &path)?;
                points.push(current);
                points.extend_from_slice(&tracked[..n - 1]);
                circuits += 1;
                let end = tracked[n - 1];
                let (idx, dist) = sheets
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (k, (v - end.eta).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                let scale = 1.0 + end.eta.norm();
                if dist > 1e-7 * scale {
                    return Err(Error::TrackingLost { xi: end.xi });
                }
                if idx == s {
                    break;
                }
                if used[idx] || circuits as usize > sheets.len() {
                    return Err(Error::TrackingLost { xi: end.xi });
                }
                used[idx] = true;
                current = CurvePoint::new(nodes[0], sheets[idx]);
            }
            let der_rep: Vec<Complex64> = (0..circuits as usize).flat_map(|_| der.iter().copied()).collect();
            loops.push(finish(curve, points, &der_rep, step, ci, circuits));
        }
    }
    Ok(LiftedContour { loops })
}

fn finish(
    curve: &AlgebraicCurve,
    points: Vec<CurvePoint>,
    dxi: &[Complex64],
    step: f64,
    base_component: usize,
    base_circuits: u32,
) -> LiftedLoop {
    let deta = points.iter().zip(dxi).map(|(p, d)| eta_slope(curve, p) * d).collect();
    LiftedLoop { points, dxi: dxi.to_vec(), deta, step, base_component, base_circuits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::BivariatePolynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn curve(terms: &[(u32, u32, f64)]) -> AlgebraicCurve {
        AlgebraicCurve::new(BivariatePolynomial::from_real_terms(terms).unwrap()).unwrap()
    }

    #[test]
    fn graph_lift() {
        let cv = curve(&[(0, 1, 1.0), (2, 0, -1.0)]);
        let lifted = lift_contour(&cv, &Contour::circle(c(0.0, 0.0), 1.0, 64)).unwrap();
        assert_eq!(lifted.loops.len(), 1);
        for (p, d) in lifted.loops[0].points.iter().zip(&lifted.loops[0].deta) {
            assert!((p.eta - p.xi * p.xi).norm() < 1e-14);
            // deta/dt = 2 xi dxi/dt, dxi/dt = i xi on the unit circle
            assert!((d - 2.0 * p.xi * Complex64::i() * p.xi).norm() < 1e-12);
        }
    }

    #[test]
    fn unramified_circle_gives_two_loops() {
        let cv = curve(&[(0, 2, 1.0), (1, 0, -1.0)]);
        let lifted = lift_contour(&cv, &Contour::circle(c(4.0, 0.0), 1.0, 64)).unwrap();
        assert_eq!(lifted.loops.len(), 2);
        assert!(lifted.loops.iter().all(|l| l.base_circuits == 1 && l.points.len() == 64));
    }

    #[test]
    fn ramified_circle_gives_one_double_loop() {
        let cv = curve(&[(0, 2, 1.0), (1, 0, -1.0)]);
        let lifted = lift_contour(&cv, &Contour::circle(c(0.0, 0.0), 1.0, 64)).unwrap();
        assert_eq!(lifted.loops.len(), 1);
        let l = &lifted.loops[0];
        assert_eq!(l.base_circuits, 2);
        assert_eq!(l.points.len(), 128);
        // the eta-trace is the unit circle traversed once
        let winding: Complex64 = l
            .points
            .iter()
            .zip(&l.deta)
            .map(|(p, d)| d / p.eta * l.step)
            .sum();
        assert!((winding - c(0.0, std::f64::consts::TAU)).norm() < 1e-10);
    }
}
