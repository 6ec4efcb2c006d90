use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{coordinate_of, Geometry, ReferenceCompact};
use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::lemniscate::RationalFunction;
use crate::polycurve::{AlgebraicCurve, CurvePoint};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub k_max: usize,
    /// Nodes per contour circuit to start from; 0 picks one from `k_max`.
    pub start_nodes: usize,
    pub max_nodes: usize,
    /// Node doubling stops once the largest change in a scaled coefficient
    /// is below this fraction of the largest one.
    pub rel_tol: f64,
    pub reference: ReferenceCompact,
    pub samples: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            k_max: 60,
            start_nodes: 0,
            max_nodes: 8192,
            rel_tol: 1e-10,
            reference: ReferenceCompact::LevelCurve,
            samples: 64,
        }
    }
}

impl ExpansionConfig {
    fn first_nodes(&self) -> usize {
        if self.start_nodes > 0 {
            self.start_nodes
        } else {
            (2 * (self.k_max + 1)).next_power_of_two().max(64)
        }
    }
}

/// Coefficients `c_k(w)` of `f = sum c_k(w) g(pi(w))^k` on a reference
/// compact, together with the quadrature that produced them.
#[derive(Clone, Debug)]
pub struct HartogsExpansion {
    pub z: Vec<Complex64>,
    pub level: f64,
    pub k_max: usize,
    pub samples: Vec<CurvePoint>,
    /// `scaled[k][s] = c_k(samples[s]) * level^k`.
    pub scaled: Vec<Vec<Complex64>>,
    /// `max_s |c_k(samples[s])| * level^k`.
    pub scaled_norms: Vec<f64>,
    pub nodes_per_loop: usize,
    pub quadrature_change: f64,
    geometry: Arc<Geometry>,
    values: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub terms: usize,
    pub tail_bound: f64,
}

impl HartogsExpansion {
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `c_k` at sample `s`. May overflow for tiny levels and large `k`.
    pub fn coefficient(&self, k: usize, s: usize) -> Complex64 {
        self.scaled[k][s] / self.level.powi(k as i32)
    }

    /// `||c_k||` over the reference compact.
    pub fn norm(&self, k: usize) -> f64 {
        self.scaled_norms[k] / self.level.powi(k as i32)
    }

    fn located(&self, w: &CurvePoint) -> Result<usize> {
        let gw = self.g_at(w);
        if gw.norm() >= self.level {
            return Err(Error::OutsideLemniscate { modulus: gw.norm(), limit: self.level });
        }
        self.geometry
            .locate(w)
            .ok_or(Error::OutsideLemniscate { modulus: gw.norm(), limit: self.level })
    }

    fn g_at(&self, w: &CurvePoint) -> Complex64 {
        self.geometry.lemniscate.g.eval_unchecked(w.xi)
    }

    /// `c_k(w)` at an arbitrary point of the lemniscate.
    pub fn coefficient_at(&self, w: &CurvePoint, k: usize) -> Result<Complex64> {
        let piece_idx = self.located(w)?;
        let geom = &*self.geometry;
        let piece = &geom.pieces[piece_idx];
        let wp = coordinate_of(w, piece.coordinate);
        let gw = self.g_at(w);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in piece.nodes.clone() {
            let gj = geom.g_values[j];
            acc += self.values[j] * geom.dphi[j] * geom.kernel(piece, j, wp) * (gj - gw) / gj.powi(k as i32 + 1);
        }
        Ok(acc)
    }

    /// Sums the series at `w` until the tail bound drops below `tol`.
    pub fn evaluate_series(&self, w: &CurvePoint, tol: f64) -> Result<SeriesValue> {
        let piece_idx = self.located(w)?;
        let geom = &*self.geometry;
        let piece = &geom.pieces[piece_idx];
        let wp = coordinate_of(w, piece.coordinate);
        let gw = self.g_at(w);
        let mut terms = Vec::with_capacity(piece.nodes.len());
        let mut total = 0.0;
        for j in piece.nodes.clone() {
            let t = self.values[j] * geom.dphi[j] * geom.kernel(piece, j, wp);
            total += t.norm();
            terms.push((t, gw / geom.g_values[j]));
        }
        let q = gw.norm() / self.level;
        // smallest n with total * q^(n+1) <= tol
        let n = if total <= tol || q == 0.0 {
            0
        } else {
            let n = ((tol / total).ln() / q.ln()).ceil() - 1.0;
            if !n.is_finite() || n > 1e6 {
                return Err(Error::TailNotBounded(tol));
            }
            n.max(0.0) as usize
        };
        let mut value = Complex64::new(0.0, 0.0);
        let mut tail = 0.0;
        for (t, qj) in terms {
            let p = qj.powi(n as i32 + 1);
            value += t * (1.0 - p);
            tail += t.norm() * p.norm();
        }
        if tail > tol {
            return Err(Error::TailNotBounded(tol));
        }
        Ok(SeriesValue { value, terms: n + 1, tail_bound: tail })
    }
}

/// Shares contour geometry between expansions of the same `g`.
pub struct ExpansionContext<'a> {
    pub curve: &'a AlgebraicCurve,
    pub g: &'a RationalFunction,
    pub config: ExpansionConfig,
    cache: Mutex<HashMap<(u64, usize), Arc<Geometry>>>,
}

impl<'a> ExpansionContext<'a> {
    pub fn new(curve: &'a AlgebraicCurve, g: &'a RationalFunction, config: ExpansionConfig) -> Self {
        ExpansionContext { curve, g, config, cache: Mutex::new(HashMap::new()) }
    }

    pub fn geometry(&self, level: f64, nodes: usize) -> Result<Arc<Geometry>> {
        let key = (level.to_bits(), nodes);
        if let Some(g) = self.cache.lock().unwrap().get(&key) {
            return Ok(g.clone());
        }
        let geom = Arc::new(Geometry::build(
            self.curve,
            self.g,
            level,
            nodes,
            self.config.reference,
            self.config.samples,
        )?);
        self.cache.lock().unwrap().insert(key, geom.clone());
        Ok(geom)
    }

    pub fn expand<F: FiberFunction + ?Sized>(&self, f: &F, z: &[Complex64], level: f64) -> Result<HartogsExpansion> {
        let cfg = &self.config;
        let mut n = cfg.first_nodes();
        let mut prev: Option<Vec<Vec<Complex64>>> = None;
        loop {
            let geom = self.geometry(level, n)?;
            let values: Vec<Complex64> = geom.points.iter().map(|p| f.eval(z, p)).collect();
            if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::PoleOnContour);
            }
            let table = scaled_table(&geom, &values, cfg.k_max);
            let change = prev.as_ref().map(|p| max_change(p, &table));
            let scale = table.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
            if let Some(change) = change {
                if change <= cfg.rel_tol * scale {
                    let scaled_norms =
                        table.iter().map(|row| row.iter().map(|c| c.norm()).fold(0.0, f64::max)).collect();
                    return Ok(HartogsExpansion {
                        z: z.to_vec(),
                        level,
                        k_max: cfg.k_max,
                        samples: geom.samples.clone(),
                        scaled: table,
                        scaled_norms,
                        nodes_per_loop: n,
                        quadrature_change: if scale > 0.0 { change / scale } else { 0.0 },
                        geometry: geom,
                        values,
                    });
                }
                if 2 * n > cfg.max_nodes {
                    return Err(Error::QuadratureNotConverged { nodes: n, change: change / scale.max(f64::MIN_POSITIVE) });
                }
            }
            prev = Some(table);
            n *= 2;
        }
    }
}

fn max_change(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `level^k c_k(w_s)` for every sample: with `u_j = level / g_j` of unit
/// modulus, this is `sum_j A_j u_j^k`.
fn scaled_table(geom: &Geometry, values: &[Complex64], k_max: usize) -> Vec<Vec<Complex64>> {
    let ns = geom.samples.len();
    let mut table = vec![vec![Complex64::new(0.0, 0.0); ns]; k_max + 1];
    for (s, w) in geom.samples.iter().enumerate() {
        let piece = &geom.pieces[geom.sample_piece[s]];
        let wp = coordinate_of(w, piece.coordinate);
        let gw = geom.lemniscate.g.eval_unchecked(w.xi);
        for j in piece.nodes.clone() {
            let gj = geom.g_values[j];
            let u = geom.level / gj;
            let mut a = values[j] * geom.dphi[j] * geom.kernel(piece, j, wp) * (gj - gw) / gj;
            for row in table.iter_mut() {
                row[s] += a;
                a *= u;
            }
        }
    }
    table
}

/// Expansion of `f(z, .)` in powers of `g` using the boundary of the
/// `level` lemniscate.
pub fn coefficients<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    g: &RationalFunction,
    level: f64,
    z: &[Complex64],
    config: ExpansionConfig,
) -> Result<HartogsExpansion> {
    ExpansionContext::new(curve, g, config).expand(f, z, level)
}

pub fn evaluate_series(exp: &HartogsExpansion, w: &CurvePoint, tol: f64) -> Result<SeriesValue> {
    exp.evaluate_series(w, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::BivariatePolynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn graph_sq() -> AlgebraicCurve {
        AlgebraicCurve::new(BivariatePolynomial::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn geometric_series_coefficients() {
        let curve = graph_sq();
        let g = RationalFunction::identity();
        let f = |_: &[Complex64], w: &CurvePoint| (1.0 - w.xi).inv();
        let exp = coefficients(&f, &curve, &g, 0.5, &[], ExpansionConfig { k_max: 30, ..Default::default() }).unwrap();
        for k in 0..=30 {
            for s in 0..exp.samples.len() {
                assert!((exp.scaled[k][s] - 0.5f64.powi(k as i32)).norm() < 1e-14, "k={k}");
            }
        }
        let w = CurvePoint::new(c(0.3, 0.0), c(0.09, 0.0));
        let v = exp.evaluate_series(&w, 1e-12).unwrap();
        assert!((v.value - 1.0 / 0.7).norm() < 1e-8);
        assert!(v.tail_bound <= 1e-12);
        let far = CurvePoint::new(c(0.6, 0.0), c(0.36, 0.0));
        assert!(matches!(exp.evaluate_series(&far, 1e-12), Err(Error::OutsideLemniscate { .. })));
    }

    #[test]
    fn coefficients_depend_on_w_for_nonlinear_g() {
        // g = zeta / (1 - zeta/4), f = 1/(1 - zeta): the partial sums still
        // reproduce f inside the lemniscate
        let curve = AlgebraicCurve::identity_graph();
        let g: RationalFunction = RationalFunction::new(
            "1".parse().unwrap(),
            1,
            vec!["1".parse().unwrap(), "-1/4".parse().unwrap()],
        )
        .unwrap();
        let f = |_: &[Complex64], w: &CurvePoint| (1.0 - w.xi).inv();
        let exp = coefficients(&f, &curve, &g, 0.4, &[], ExpansionConfig::default()).unwrap();
        let w = CurvePoint::new(c(0.1, 0.2), c(0.1, 0.2));
        let v = exp.evaluate_series(&w, 1e-13).unwrap();
        assert!((v.value - f(&[], &w)).norm() < 1e-9);
        let direct: Complex64 = (0..v.terms)
            .map(|k| exp.coefficient_at(&w, k).unwrap() * g.eval(w.xi).unwrap().powi(k as i32))
            .sum();
        assert!((direct - v.value).norm() < 1e-9);
    }

    #[test]
    fn unbounded_component_uses_anchored_kernel() {
        // g = zeta / (2 (zeta - 2)): {|g| < 0.8} is the outside of a disc
        // around 2, and f = 1/(zeta - 2) vanishes at infinity
        let curve = AlgebraicCurve::identity_graph();
        let g = RationalFunction::new("-1/4".parse().unwrap(), 1, vec!["1".parse().unwrap(), "-1/2".parse().unwrap()])
            .unwrap();
        let f = |_: &[Complex64], w: &CurvePoint| (w.xi - 2.0).inv() + 3.0;
        let exp = coefficients(&f, &curve, &g, 0.8, &[], ExpansionConfig::default()).unwrap();
        assert!(exp.geometry().lemniscate.unbounded);
        for w in [c(-1.0, 0.5), c(0.5, -0.5), c(-6.0, 2.0)] {
            let p = CurvePoint::new(w, w);
            let v = exp.evaluate_series(&p, 1e-12).unwrap();
            assert!((v.value - f(&[], &p)).norm() < 1e-8, "{w}");
        }
    }

    #[test]
    fn sqrt_fiber_is_a_single_term() {
        let curve = AlgebraicCurve::new(BivariatePolynomial::from_real_terms(&[(0, 2, 1.0), (1, 0, -1.0)]).unwrap())
            .unwrap();
        let g = RationalFunction::identity();
        let f = |_: &[Complex64], w: &CurvePoint| w.eta;
        let exp = coefficients(&f, &curve, &g, 1.0, &[], ExpansionConfig { k_max: 10, ..Default::default() }).unwrap();
        for s in 0..exp.samples.len() {
            assert!((exp.coefficient(0, s) - exp.samples[s].eta).norm() < 1e-12);
        }
        assert!(exp.scaled_norms[1..].iter().all(|&n| n < 1e-13));
    }

    #[test]
    fn pole_on_contour_is_reported() {
        let curve = AlgebraicCurve::identity_graph();
        let g = RationalFunction::identity();
        let f = |_: &[Complex64], w: &CurvePoint| if w.xi.norm() > 0.49 { Complex64::new(f64::NAN, 0.0) } else { w.xi };
        assert!(matches!(
            coefficients(&f, &curve, &g, 0.5, &[], ExpansionConfig::default()),
            Err(Error::PoleOnContour)
        ));
    }
}
