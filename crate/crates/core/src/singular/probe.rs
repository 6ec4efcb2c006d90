use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::polycurve::{AlgebraicCurve, CurvePoint};

pub const LAURENT_NOISE_FLOOR: f64 = 1e-9;
pub const DEFAULT_LAURENT_NODES: usize = 64;
const MAX_NODES: usize = 1024;

#[derive(Clone, Debug, Serialize)]
pub struct LaurentProbe {
    pub singular: bool,
    /// Most negative index with a significant coefficient, if any.
    pub deepest_index: Option<i32>,
    /// Largest `|b_n| / max|f|` over negative `n` on the outer circle.
    pub negative_weight: f64,
    /// Nodes on the outer circle after alias refinement.
    pub nodes: usize,
}

/// Points of the sheet through `center` over the circle
/// `center.xi + r e^(2 pi i j / n)`.
pub fn chart_circle(curve: &AlgebraicCurve, center: &CurvePoint, r: f64, n: usize) -> Result<Vec<CurvePoint>> {
    if curve.distance_to_critical(center.xi) <= r * (1.0 + 1e-9) {
        return Err(Error::AtCriticalPoint { xi: center.xi });
    }
    let nodes: Vec<Complex64> = (0..n).map(|j| center.xi + Complex64::from_polar(r, TAU * j as f64 / n as f64)).collect();
    if curve.eta_degree == 1 {
        return nodes.iter().map(|&xi| Ok(CurvePoint::new(xi, curve.fiber(xi)?[0].eta))).collect();
    }
    curve.track_polyline(*center, &nodes)
}

/// Coefficients `b_n = a_n r^n` of the Laurent series on a circle, indexed
/// `0..n/2` then `-n/2..0` as returned by the FFT.
fn circle_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|v| v / n as f64).collect()
}

fn index(n: usize, k: i32) -> usize {
    k.rem_euclid(n as i32) as usize
}

fn significant(b: &[Complex64], max_f: f64, depth: usize) -> Vec<i32> {
    let n = b.len();
    (1..=depth as i32)
        .map(|k| -k)
        .filter(|&k| b[index(n, k)].norm() > LAURENT_NOISE_FLOOR * max_f)
        .collect()
}

fn values_on<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    z: &[Complex64],
    center: &CurvePoint,
    r: f64,
    n: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let pts = chart_circle(curve, center, r, n)?;
    let vals: Vec<Complex64> = pts.iter().map(|p| f.eval(z, p)).collect();
    let max = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !max.is_finite() {
        return Err(Error::PoleOnContour);
    }
    Ok((vals, max))
}

/// Laurent test for removability at `candidate`: circles of radius `r` (at
/// `nodes` and `2 nodes` points, to rule out aliasing) and `r/2`. While the
/// two resolutions disagree the node count is doubled, up to `MAX_NODES`.
pub fn laurent_probe<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    z: &[Complex64],
    candidate: &CurvePoint,
    radius: f64,
    nodes: usize,
) -> Result<LaurentProbe> {
    let depth = nodes / 4;
    let mut n = nodes;
    let (mut v1, mut m1) = values_on(f, curve, z, candidate, radius, n)?;
    loop {
        let (v2, m2) = values_on(f, curve, z, candidate, radius, 2 * n)?;
        let b1 = circle_coefficients(&v1);
        let b2 = circle_coefficients(&v2);
        let negative_weight = (1..=depth as i32)
            .map(|k| b1[index(n, -k)].norm() / m1.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        let sig = significant(&b1, m1, depth);
        let alias_free = sig.iter().all(|&k| {
            let a = b1[index(n, k)];
            let b = b2[index(2 * n, k)];
            (a - b).norm() <= 1e-3 * a.norm() + LAURENT_NOISE_FLOOR * m1.max(m2)
        });
        if sig.is_empty() || alias_free || 2 * n >= MAX_NODES {
            let singular = !sig.is_empty() && alias_free;
            let deepest_index = if singular {
                let (v3, m3) = values_on(f, curve, z, candidate, radius / 2.0, n)?;
                let inner = significant(&circle_coefficients(&v3), m3, depth);
                inner.last().or(sig.last()).copied()
            } else {
                None
            };
            return Ok(LaurentProbe { singular, deepest_index, negative_weight, nodes: n });
        }
        n *= 2;
        v1 = v2;
        m1 = m2;
    }
}

/// True when `f(z, .)` has a non-removable singularity within `radius` of
/// `candidate` in the chart.
pub fn pseudoconcavity_probe<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    z: &[Complex64],
    candidate: &CurvePoint,
    radius: f64,
) -> Result<bool> {
    Ok(laurent_probe(f, curve, z, candidate, radius, DEFAULT_LAURENT_NODES)?.singular)
}

/// Moves `candidate` onto the singularity inside its probe circle using the
/// moments of the logarithmic derivative (the pole centroid), shrinking the
/// circle each round. Falls back to the ratio `a_(-2) / a_(-1)`.
pub fn locate_singularity<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    z: &[Complex64],
    candidate: &CurvePoint,
    radius: f64,
    nodes: usize,
) -> Result<CurvePoint> {
    let mut center = *candidate;
    let mut r = radius;
    for _ in 0..4 {
        let pts = chart_circle(curve, &center, r, nodes)?;
        let vals: Vec<Complex64> = pts.iter().map(|p| f.eval(z, p)).collect();
        let b = circle_coefficients(&vals);
        let n = nodes as i32;
        // (zeta - c) f'(zeta) on the circle from the spectral derivative
        let mut spec: Vec<Complex64> = (0..nodes)
            .map(|i| {
                let k = if (i as i32) < n / 2 { i as i32 } else { i as i32 - n };
                b[i] * k as f64
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(nodes).process(&mut spec);
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        for (j, (d, v)) in spec.iter().zip(&vals).enumerate() {
            let u = Complex64::from_polar(r, TAU * j as f64 / nodes as f64);
            let q = d / v;
            m0 += q;
            m1 += q * u;
        }
        m0 /= nodes as f64;
        m1 /= nodes as f64;
        let poles = -m0.re;
        let shift = if poles >= 0.5 && (m0 + poles.round()).norm() < 1e-3 {
            m1 / m0
        } else {
            let a1 = b[index(nodes, -1)] * r;
            let a2 = b[index(nodes, -2)] * r * r;
            if a1.norm() > LAURENT_NOISE_FLOOR * vals.iter().map(|v| v.norm()).fold(0.0, f64::max) * r {
                a2 / a1
            } else {
                break;
            }
        };
        if !(shift.re.is_finite() && shift.im.is_finite()) || shift.norm() >= r {
            break;
        }
        let target = center.xi + shift;
        center = if curve.eta_degree == 1 {
            CurvePoint::new(target, curve.fiber(target)?[0].eta)
        } else {
            curve.continue_branch(center, &[target])?
        };
        let moved = shift.norm();
        r = (4.0 * moved).max(r / 8.0).min(r);
        if moved < 1e-13 * (1.0 + center.xi.norm()) {
            break;
        }
    }
    Ok(center)
}
