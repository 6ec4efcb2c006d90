use std::collections::HashSet;
use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use num_traits::Zero;

use super::rational::RationalFunction;
use super::region::{CellClass, Lemniscate, Membership};
use crate::error::{Error, Result};

/// Closed integration cycle: loops of nodes equispaced in a periodic
/// parameter, with the derivative of the point with respect to it.
#[derive(Clone, Debug)]
pub struct Contour {
    pub nodes: Vec<Complex64>,
    pub derivative_nodes: Vec<Complex64>,
    pub closed: bool,
    pub components: Vec<Range<usize>>,
    /// Parameter spacing per component.
    pub steps: Vec<f64>,
    /// Number of parameter periods (of length 2 pi) per component.
    pub circuits: Vec<u32>,
}

impl Contour {
    /// Counterclockwise circle, `n` nodes.
    pub fn circle(center: Complex64, radius: f64, n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut der = Vec::with_capacity(n);
        for j in 0..n {
            let e = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
            nodes.push(center + e * radius);
            der.push(Complex64::i() * e * radius);
        }
        Contour {
            nodes,
            derivative_nodes: der,
            closed: true,
            components: vec![0..n],
            steps: vec![TAU / n as f64],
            circuits: vec![1],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoidal weight `dzeta/dt * dt` of every node.
    pub fn weights(&self) -> Vec<Complex64> {
        let mut w = vec![Complex64::zero(); self.nodes.len()];
        for (range, &step) in self.components.iter().zip(&self.steps) {
            for j in range.clone() {
                w[j] = self.derivative_nodes[j] * step;
            }
        }
        w
    }

    /// `integral f(zeta) dzeta` by the trapezoidal rule.
    pub fn integrate(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(self.weights()).map(|(&z, w)| f(z) * w).sum()
    }

    /// `integral dzeta / (zeta - z0)`, i.e. `2 pi i` times the winding number.
    pub fn cauchy_index(&self, z0: Complex64) -> Complex64 {
        self.integrate(|z| (z - z0).inv())
    }
}

/// Nonzero critical points of `g` whose modulus is within `1e-6` (relative)
/// of the level.
fn check_regular_level(g: &RationalFunction, rho: f64) -> Result<()> {
    for z in g.critical_points() {
        if let Ok(v) = g.eval(z) {
            if (v.norm() - rho).abs() <= 1e-6 * rho {
                return Err(Error::Precondition(format!(
                    "level {rho} is a critical value of |g| (critical point {z})"
                )));
            }
        }
    }
    Ok(())
}

struct LevelTracer<'a> {
    g: &'a RationalFunction,
    rho: f64,
    max_step: f64,
}

impl LevelTracer<'_> {
    /// Newton for `g(zeta) = rho e^{i theta}` from `zeta`.
    fn solve(&self, mut zeta: Complex64, theta: f64) -> Option<(Complex64, usize)> {
        let target = Complex64::from_polar(self.rho, theta);
        for it in 0..12 {
            let (v, dv) = self.g.eval_with_derivative(zeta);
            if !(dv.norm() > 0.0) || !v.re.is_finite() {
                return None;
            }
            let delta = (v - target) / dv;
            zeta -= delta;
            if delta.norm() <= 1e-14 * (1.0 + zeta.norm()) {
                return Some((zeta, it + 1));
            }
        }
        None
    }

    fn tangent(&self, zeta: Complex64) -> Complex64 {
        let (v, dv) = self.g.eval_with_derivative(zeta);
        Complex64::i() * v / dv
    }

    /// Traces from `start` (on the level set) with increasing `arg g` until
    /// the curve closes. Returns the dense trace `(s, zeta)` and the number
    /// of circuits of `arg g`.
    fn trace(&self, start: Complex64, max_circuits: u32) -> Result<(Vec<(f64, Complex64)>, u32)> {
        let theta0 = self.g.eval_unchecked(start).arg();
        let mut pts = vec![(0.0, start)];
        let mut s = 0.0;
        let mut zeta = start;
        let mut ds: f64 = 0.05;
        let mut steps = 0usize;
        let close_tol = 1e-7 * (1.0 + start.norm());
        for k in 1..=max_circuits {
            let goal = TAU * k as f64;
            while s < goal {
                steps += 1;
                if steps > 2_000_000 || ds < 1e-13 {
                    return Err(Error::TracingStalled(zeta));
                }
                let h = ds.min(goal - s);
                let t = self.tangent(zeta);
                let predicted = zeta + t * h;
                if (t * h).norm() > self.max_step {
                    ds = 0.5 * self.max_step / t.norm();
                    continue;
                }
                let s_new = if h == goal - s { goal } else { s + h };
                match self.solve(predicted, theta0 + s_new) {
                    Some((z, iters)) if (z - predicted).norm() <= 0.25 * (predicted - zeta).norm() + 1e-13 => {
                        s = s_new;
                        zeta = z;
                        pts.push((s, zeta));
                        if iters <= 3 {
                            ds = h * 1.5;
                        }
                    }
                    _ => ds = 0.5 * h,
                }
            }
            if (zeta - start).norm() <= close_tol {
                pts.pop();
                return Ok((pts, k));
            }
        }
        Err(Error::TracingStalled(start))
    }
}

/// Traces every boundary loop of the component. Nodes are equispaced in
/// `arg g`, `nodes_per_loop` per circuit; each loop keeps the component on
/// its left.
pub fn boundary_contour(lem: &Lemniscate, nodes_per_loop: usize) -> Result<Contour> {
    let g = &lem.g;
    let rho = lem.level;
    check_regular_level(g, rho)?;
    let bbox = lem.bounding_box;
    let seeds: Vec<_> = lem
        .outer_cover
        .iter()
        .copied()
        .filter(|&c| lem.class_of(c) == Some(CellClass::Boundary))
        .filter(|&c| lem.neighbors(c).iter().any(|n| lem.is_inner(*n)))
        .collect();
    if seeds.is_empty() {
        return Err(Error::Precondition("lemniscate has an empty boundary cover".into()));
    }
    let h_min = seeds.iter().map(|&c| bbox.cell_half_width(c)).fold(f64::INFINITY, f64::min);
    let tracer = LevelTracer { g, rho, max_step: 2.0 * h_min };
    let bucket = 4.0 * h_min;
    let key = |z: Complex64| ((z.re / bucket).floor() as i64, (z.im / bucket).floor() as i64);
    let mut visited: HashSet<(i64, i64)> = HashSet::new();
    let max_circuits = g.degree() as u32;

    let mut contour = Contour {
        nodes: Vec::new(),
        derivative_nodes: Vec::new(),
        closed: true,
        components: Vec::new(),
        steps: Vec::new(),
        circuits: Vec::new(),
    };
    for cell in seeds {
        let Some(start) = project(g, rho, bbox.cell_center(cell), 8.0 * bbox.cell_half_width(cell)) else {
            continue;
        };
        let (kx, ky) = key(start);
        if (-1..=1).any(|dx| (-1..=1).any(|dy| visited.contains(&(kx + dx, ky + dy)))) {
            continue;
        }
        let (trace, circuits) = tracer.trace(start, max_circuits)?;
        for &(_, z) in &trace {
            visited.insert(key(z));
        }
        // a level curve bounding some other component would have that
        // component, not ours, on its left
        let t = tracer.tangent(start);
        let left = start + Complex64::i() * t / t.norm() * (0.5 * h_min);
        if lem.membership(left) == Membership::Excluded {
            continue;
        }
        let n_total = nodes_per_loop * circuits as usize;
        let first = contour.nodes.len();
        let theta0 = g.eval_unchecked(start).arg();
        let step = TAU / nodes_per_loop as f64;
        let mut cursor = 0;
        for j in 0..n_total {
            let s = step * j as f64;
            while cursor + 1 < trace.len() && trace[cursor + 1].0 <= s {
                cursor += 1;
            }
            let (s0, z0) = trace[cursor];
            let guess = z0 + tracer.tangent(z0) * (s - s0);
            let (z, _) = tracer.solve(guess, theta0 + s).ok_or(Error::TracingStalled(guess))?;
            contour.nodes.push(z);
            contour.derivative_nodes.push(tracer.tangent(z));
        }
        contour.components.push(first..contour.nodes.len());
        contour.steps.push(step);
        contour.circuits.push(circuits);
    }
    if contour.components.is_empty() {
        return Err(Error::TracingStalled(Complex64::zero()));
    }
    Ok(contour)
}

/// Gradient Newton projection of `z` onto `|g| = rho`.
fn project(g: &RationalFunction, rho: f64, mut z: Complex64, max_move: f64) -> Option<Complex64> {
    let origin = z;
    let ln_rho = rho.ln();
    for _ in 0..60 {
        let (v, dv) = g.eval_with_derivative(z);
        if v.norm() == 0.0 || !v.re.is_finite() {
            return None;
        }
        let phi = v.norm().ln() - ln_rho;
        let h = dv / v;
        if h.norm() == 0.0 {
            return None;
        }
        let mut delta = phi / h;
        // log|g| is far from linear across more than |g / g'|
        let limit = 0.5 / h.norm();
        if delta.norm() > limit {
            delta *= limit / delta.norm();
        }
        z -= delta;
        if (z - origin).norm() > max_move {
            return None;
        }
        if phi.abs() < 1e-14 && delta.norm() < 1e-13 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let phi = g.eval_unchecked(z).norm().ln() - ln_rho;
    (phi.abs() < 1e-12).then_some(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemniscate::region::{component_region, BoundingBox};
    use crate::lemniscate::GaussRational;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(s: &str) -> GaussRational {
        s.parse().unwrap()
    }

    #[test]
    fn unit_circle() {
        let g = RationalFunction::identity();
        let lem = component_region(&g, 1.0, BoundingBox::new(c(0.0, 0.0), 2.0), 8).unwrap();
        let contour = boundary_contour(&lem, 256).unwrap();
        assert_eq!(contour.components.len(), 1);
        assert_eq!(contour.len(), 256);
        for z in &contour.nodes {
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }
        let idx = contour.cauchy_index(c(0.1, -0.2));
        assert!((idx - c(0.0, TAU)).norm() < 1e-8);
    }

    #[test]
    fn circle_around_the_pole_runs_clockwise() {
        let g = RationalFunction::from_poles(q("1/2"), 1, &[(q("2"), 1)]).unwrap();
        let lem = component_region(&g, 1.0, BoundingBox::new(c(0.0, 0.0), 8.0), 8).unwrap();
        let contour = boundary_contour(&lem, 128).unwrap();
        assert_eq!(contour.components.len(), 1);
        let center = c(8.0 / 3.0, 0.0);
        for z in &contour.nodes {
            assert!(((z - center).norm() - 4.0 / 3.0).abs() < 1e-10);
        }
        // winds -1 around the excluded disk, 0 around points of the component
        assert!((contour.cauchy_index(center) - c(0.0, -TAU)).norm() < 1e-8);
        assert!(contour.cauchy_index(c(0.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn multiply_covered_level_curve() {
        // |zeta^2| < 1/4: arg g makes two turns along one pass of the circle
        let g = RationalFunction::new(q("1"), 2, vec![q("1")]).unwrap();
        let lem = component_region(&g, 0.25, BoundingBox::new(c(0.0, 0.0), 2.0), 8).unwrap();
        let contour = boundary_contour(&lem, 64).unwrap();
        assert_eq!(contour.circuits, vec![2]);
        assert_eq!(contour.len(), 128);
        let idx = contour.cauchy_index(c(0.1, 0.0));
        assert!((idx - c(0.0, TAU)).norm() < 1e-8);
        let area = contour.integrate(|z| z.conj()) / (2.0 * Complex64::i());
        assert!((area.re - std::f64::consts::PI * 0.25).abs() < 1e-9);
    }

    #[test]
    fn two_holes() {
        let g = RationalFunction::from_poles(q("1/4"), 1, &[(q("2"), 1), (q("-2"), 1)]).unwrap();
        // |zeta / (4 (zeta^2 - 4))| < 1: component of 0 with holes around +-2
        let lem = component_region(&g, 1.0, BoundingBox::new(c(0.0, 0.0), 12.0), 9).unwrap();
        let contour = boundary_contour(&lem, 128).unwrap();
        assert_eq!(contour.components.len(), 2);
        for z in &contour.nodes {
            assert!((g.eval(*z).unwrap().norm() - 1.0).abs() < 1e-10);
        }
        for pole in [c(2.0, 0.0), c(-2.0, 0.0)] {
            assert!((contour.cauchy_index(pole) - c(0.0, -TAU)).norm() < 1e-8);
        }
        // Cauchy formula on the unbounded component: int g/(zeta - z0) recovers
        // g(z0) - g(infinity) = g(z0) as g vanishes at infinity
        let z0 = c(0.3, 0.4);
        let val = contour.integrate(|z| g.eval(z).unwrap() / (z - z0)) / (Complex64::i() * TAU);
        assert!((val - g.eval(z0).unwrap()).norm() < 1e-9, "{val}");
    }

    #[test]
    fn critical_level_is_rejected() {
        // zeta / (1 + zeta^2) has critical points +-1 where |g| = 1/2
        let g = RationalFunction::new(q("1"), 1, vec![q("1"), q("0"), q("1")]).unwrap();
        assert!(matches!(check_regular_level(&g, 0.5), Err(Error::Precondition(_))));
        assert!(check_regular_level(&g, 0.4).is_ok());
    }
}
