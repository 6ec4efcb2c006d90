use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lift::{lift_contour, LiftedContour};
use crate::error::{Error, Result};
use crate::lemniscate::{
    auto_half_width, boundary_contour, component_region, exterior_bound, BoundingBox, Contour, Lemniscate,
    RationalFunction,
};
use crate::polycurve::{AlgebraicCurve, CurvePoint};

/// Coordinate in which the Cauchy kernel of a piece is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelCoordinate {
    Xi,
    Eta,
}

/// A connected piece of the preimage of the lemniscate, on which the
/// kernel coordinate is injective.
#[derive(Clone, Debug)]
pub struct Piece {
    pub coordinate: KernelCoordinate,
    pub nodes: Range<usize>,
    /// A pole of `g`, used to anchor the kernel of an unbounded component.
    pub anchor: Option<Complex64>,
}

/// Where the reference compact for coefficient norms is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceCompact {
    /// The level curve `|g| = level / 2` around the origin.
    LevelCurve,
    /// The circle `|zeta| = r` in the base.
    Circle(f64),
}

/// Quadrature data for one `(g, level, nodes)` triple, independent of `f`.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub level: f64,
    pub nodes_per_loop: usize,
    pub lemniscate: Lemniscate,
    pub lifted: LiftedContour,
    pub points: Vec<CurvePoint>,
    pub phi: Vec<Complex64>,
    /// `dphi/dt * dt / (2 pi i)` at each node.
    pub dphi: Vec<Complex64>,
    pub g_values: Vec<Complex64>,
    pub pieces: Vec<Piece>,
    pub samples: Vec<CurvePoint>,
    pub sample_piece: Vec<usize>,
}

pub(crate) fn coordinate_of(p: &CurvePoint, c: KernelCoordinate) -> Complex64 {
    match c {
        KernelCoordinate::Xi => p.xi,
        KernelCoordinate::Eta => p.eta,
    }
}

/// Certified component of `{|g| < level}` around 0, growing the box and the
/// depth until it fits.
pub fn level_component(g: &RationalFunction, level: f64) -> Result<Lemniscate> {
    let c = g.scale_f64().norm();
    let d0 = g.denominator_f64().coeffs[0].norm();
    let m = g.zero_order().max(1) as f64;
    let mut extent = 2.0 * (level * d0 / c).powf(1.0 / m);
    // an unbounded component only needs a box past its holes where the
    // exterior certificate holds
    let poles = g.poles().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut r = (2.0 * poles).max(1.0);
    while r < extent {
        if exterior_bound(g, r) < level {
            extent = r;
            break;
        }
        r *= 2.0;
    }
    let mut half = auto_half_width(extent);
    let mut depth = 8;
    for _ in 0..12 {
        match component_region(g, level, BoundingBox::new(Complex64::new(0.0, 0.0), half), depth) {
            Ok(lem) => return Ok(lem),
            Err(Error::ComponentEscapesBox { .. }) => half *= 4.0,
            Err(Error::DepthExhausted { .. }) if depth < 18 => depth += 2,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ComponentEscapesBox { half_width: half })
}

impl Geometry {
    pub fn build(
        curve: &AlgebraicCurve,
        g: &RationalFunction,
        level: f64,
        nodes_per_loop: usize,
        reference: ReferenceCompact,
        sample_count: usize,
    ) -> Result<Geometry> {
        let lemniscate = level_component(g, level)?;
        let contour = boundary_contour(&lemniscate, nodes_per_loop)?;
        let lifted = lift_contour(curve, &contour)?;
        let multi = curve.eta_degree > 1;
        if multi && lemniscate.unbounded {
            return Err(Error::Unsupported("unbounded lemniscate component on a multi-sheeted curve".into()));
        }
        if multi && contour.components.len() > 1 {
            return Err(Error::Unsupported("multiply connected lemniscate on a multi-sheeted curve".into()));
        }
        let anchor = if lemniscate.unbounded { g.poles().first().copied() } else { None };

        let mut points = Vec::new();
        let mut phi = Vec::new();
        let mut dphi = Vec::new();
        let mut pieces: Vec<Piece> = Vec::new();
        for lp in &lifted.loops {
            let coordinate = if lp.base_circuits > 1 { KernelCoordinate::Eta } else { KernelCoordinate::Xi };
            let start = points.len();
            let scale = Complex64::new(0.0, lp.step / TAU);
            for (j, p) in lp.points.iter().enumerate() {
                points.push(*p);
                phi.push(coordinate_of(p, coordinate));
                let d = match coordinate {
                    KernelCoordinate::Xi => lp.dxi[j],
                    KernelCoordinate::Eta => lp.deta[j],
                };
                // dt / (2 pi i) = -i dt / (2 pi)
                dphi.push(d * scale.conj());
            }
            let end = points.len();
            match pieces.last_mut() {
                Some(last) if !multi => last.nodes.end = end,
                _ => pieces.push(Piece { coordinate, nodes: start..end, anchor }),
            }
        }
        let g_values = points.iter().map(|p| g.eval_unchecked(p.xi)).collect();
        let mut geom = Geometry {
            level,
            nodes_per_loop,
            lemniscate,
            lifted,
            points,
            phi,
            dphi,
            g_values,
            pieces,
            samples: Vec::new(),
            sample_piece: Vec::new(),
        };
        geom.place_samples(curve, g, reference, sample_count)?;
        Ok(geom)
    }

    fn place_samples(
        &mut self,
        curve: &AlgebraicCurve,
        g: &RationalFunction,
        reference: ReferenceCompact,
        count: usize,
    ) -> Result<()> {
        let base: Vec<Complex64> = match reference {
            ReferenceCompact::LevelCurve => {
                let lem = level_component(g, self.level / 2.0)?;
                boundary_contour(&lem, count)?.nodes
            }
            ReferenceCompact::Circle(r) => Contour::circle(Complex64::new(0.0, 0.0), r, count).nodes,
        };
        let margin = 1e-3 * curve.critical_scale();
        for xi in base {
            if curve.distance_to_critical(xi) < margin {
                continue;
            }
            for p in curve.fiber(xi)? {
                let piece = self.locate(&p).ok_or_else(|| {
                    Error::Unsupported("reference point not reproduced by any piece of the lifted cycle".into())
                })?;
                self.samples.push(p);
                self.sample_piece.push(piece);
            }
        }
        if self.samples.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(())
    }

    pub fn kernel(&self, piece: &Piece, j: usize, w_phi: Complex64) -> Complex64 {
        let pj = self.phi[j];
        match piece.anchor {
            None => (pj - w_phi).inv(),
            Some(p) => (w_phi - p) / ((pj - w_phi) * (pj - p)),
        }
    }

    /// The piece whose Cauchy integrals reproduce `1`, `xi` and `eta` at
    /// `w`, if any.
    pub fn locate(&self, w: &CurvePoint) -> Option<usize> {
        let tol = 1e-6;
        self.pieces.iter().position(|piece| {
            let wp = coordinate_of(w, piece.coordinate);
            let mut one = Complex64::new(0.0, 0.0);
            let mut xi = one;
            let mut eta = one;
            for j in piece.nodes.clone() {
                let k = self.kernel(piece, j, wp) * self.dphi[j];
                one += k;
                xi += k * self.points[j].xi;
                eta += k * self.points[j].eta;
            }
            // xi and eta are not holomorphic at infinity
            (one - 1.0).norm() < tol
                && (piece.anchor.is_some()
                    || (xi - w.xi).norm() < tol * (1.0 + w.xi.norm())
                        && (eta - w.eta).norm() < tol * (1.0 + w.eta.norm()))
        })
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::BivariatePolynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn graph_geometry_reproduces_points() {
        let curve = AlgebraicCurve::identity_graph();
        let g = RationalFunction::identity();
        let geom = Geometry::build(&curve, &g, 0.5, 128, ReferenceCompact::LevelCurve, 64).unwrap();
        assert_eq!(geom.pieces.len(), 1);
        assert_eq!(geom.samples.len(), 64);
        for s in &geom.samples {
            assert!((s.xi.norm() - 0.25).abs() < 1e-9);
        }
        let outside = CurvePoint::new(c(0.7, 0.0), c(0.7, 0.0));
        assert_eq!(geom.locate(&outside), None);
    }

    #[test]
    fn sqrt_curve_uses_eta_coordinate() {
        let curve = AlgebraicCurve::new(BivariatePolynomial::from_real_terms(&[(0, 2, 1.0), (1, 0, -1.0)]).unwrap())
            .unwrap();
        let g = RationalFunction::identity();
        let geom = Geometry::build(&curve, &g, 1.0, 128, ReferenceCompact::LevelCurve, 64).unwrap();
        assert_eq!(geom.pieces.len(), 1);
        assert_eq!(geom.pieces[0].coordinate, KernelCoordinate::Eta);
        assert_eq!(geom.samples.len(), 128);
    }

    #[test]
    fn unramified_sheets_are_separate_pieces() {
        let curve = AlgebraicCurve::new(
            BivariatePolynomial::from_real_terms(&[(0, 2, 1.0), (1, 0, -1.0), (0, 0, -4.0)]).unwrap(),
        )
        .unwrap();
        let g = RationalFunction::identity();
        let geom = Geometry::build(&curve, &g, 1.0, 128, ReferenceCompact::LevelCurve, 32).unwrap();
        assert_eq!(geom.pieces.len(), 2);
        let p = CurvePoint::new(c(0.3, 0.0), c(-(4.3f64).sqrt(), 0.0));
        let q = CurvePoint::new(c(0.3, 0.0), c((4.3f64).sqrt(), 0.0));
        let (a, b) = (geom.locate(&p).unwrap(), geom.locate(&q).unwrap());
        assert_ne!(a, b);
    }
}
