use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::EngineConfig;
use super::probes::ProbeSet;
use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::hartogs::{
    radius_at, window_minimum, ExpansionConfig, ExpansionContext, RadiusEstimate, RadiusFieldConfig, ReferenceCompact,
    ZLattice,
};
use crate::lemniscate::{RationalFunction, RationalSpec};
use crate::polycurve::AlgebraicCurve;

/// Evaluation levels above `max |g|` over the probes are capped at this
/// multiple of the base level.
const MAX_LEVEL_RATIO: f64 = 1e4;
const EVAL_RETRIES: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SliceOrigin {
    Family { index: usize },
    GapTarget { round: usize, z_indices: Vec<usize> },
}

/// One rational function `g` of the atlas with its convergence data per `z`.
#[derive(Clone, Debug, Serialize)]
pub struct Slice {
    pub g: RationalSpec,
    pub label: String,
    pub origin: SliceOrigin,
    pub base_level: f64,
    pub active: Vec<bool>,
    pub estimates: Vec<Option<RadiusEstimate>>,
    pub failures: Vec<Option<String>>,
    /// Window minimum of `min(R, R_fit)`.
    pub r_star: Vec<Option<f64>>,
    pub eval_level: Vec<Option<f64>>,
    pub eval_nodes: Vec<Option<usize>>,
    /// Covered probes and the series value there, per `z`.
    pub values: Vec<Vec<(usize, Complex64)>>,
    #[serde(skip)]
    pub function: RationalFunction,
}

impl Slice {
    pub fn covers(&self, z: usize, probe: usize) -> Option<Complex64> {
        let v = &self.values[z];
        v.binary_search_by_key(&probe, |e| e.0).ok().map(|i| v[i].1)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OverlapEntry {
    pub z: usize,
    pub probe: usize,
    pub first: usize,
    pub second: usize,
    pub discrepancy: f64,
    pub value: Complex64,
}

impl OverlapEntry {
    pub fn relative(&self) -> f64 {
        self.discrepancy / (1.0 + self.value.norm())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationAtlas {
    pub z_grid: ZLattice,
    pub probes: ProbeSet,
    pub slices: Vec<Slice>,
    pub overlap_log: Vec<OverlapEntry>,
    /// Largest `|f1 - f2| / (1 + |f1|)` over the log.
    pub max_overlap: f64,
    pub consistent: bool,
}

impl ContinuationAtlas {
    pub fn new(z_grid: ZLattice, probes: ProbeSet) -> Self {
        ContinuationAtlas { z_grid, probes, slices: Vec::new(), overlap_log: Vec::new(), max_overlap: 0.0, consistent: true }
    }

    /// Per probe, whether some slice covers it at `z`.
    pub fn union_mask(&self, z: usize) -> Vec<bool> {
        let mut mask = vec![false; self.probes.len()];
        for s in &self.slices {
            for &(p, _) in &s.values[z] {
                mask[p] = true;
            }
        }
        mask
    }

    pub fn covered_count(&self) -> usize {
        (0..self.z_grid.len()).map(|z| self.union_mask(z).iter().filter(|&&c| c).count()).sum()
    }

    /// Rebuilds the overlap log: the first covering slice of every probe
    /// against each later one.
    pub fn check_overlaps(&mut self, tol: f64) -> Result<()> {
        let mut log = Vec::new();
        for z in 0..self.z_grid.len() {
            for p in 0..self.probes.len() {
                let mut hits = self.slices.iter().enumerate().filter_map(|(i, s)| s.covers(z, p).map(|v| (i, v)));
                let Some((first, f1)) = hits.next() else { continue };
                for (second, f2) in hits {
                    log.push(OverlapEntry { z, probe: p, first, second, discrepancy: (f1 - f2).norm(), value: f1 });
                }
            }
        }
        self.max_overlap = log.iter().map(|e| e.relative()).fold(0.0, f64::max);
        self.overlap_log = log;
        self.consistent = self.max_overlap <= tol;
        if self.consistent {
            Ok(())
        } else {
            Err(Error::InconsistentAtlas { discrepancy: self.max_overlap, tolerance: tol })
        }
    }
}

/// `0.99 min |g|` on the circle `|zeta| = r`: the component of the sublevel
/// set through 0 then stays inside that disk.
pub fn base_level(g: &RationalFunction, r: f64) -> f64 {
    let m = (0..512)
        .map(|k| g.eval_unchecked(Complex64::from_polar(r, TAU * k as f64 / 512.0)).norm())
        .fold(f64::INFINITY, f64::min);
    0.99 * m
}

fn radius_config(cfg: &EngineConfig) -> RadiusFieldConfig {
    RadiusFieldConfig {
        expansion: ExpansionConfig { k_max: cfg.k_max, ..ExpansionConfig::default() },
        adaptive_rounds: cfg.adaptive_rounds,
        shrink: cfg.shrink,
    }
}

fn eval_config(cfg: &EngineConfig) -> ExpansionConfig {
    // the trapezoid rule at |g| / level = q needs about log(eps) / log(q) nodes
    let q = (1.0 - cfg.coverage_margin) / (1.0 - cfg.eval_margin);
    let nodes = ((1e-13f64).ln() / q.ln()).ceil() as usize;
    ExpansionConfig {
        k_max: cfg.eval_k_max,
        start_nodes: nodes.next_power_of_two().max(64),
        max_nodes: 16384,
        rel_tol: 1e-10,
        reference: ReferenceCompact::LevelCurve,
        samples: 16,
    }
}

struct Evaluated {
    level: f64,
    nodes: usize,
    values: Vec<(usize, Complex64)>,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_at<F: FiberFunction + ?Sized>(
    ctx: &ExpansionContext<'_>,
    f: &F,
    z: &[Complex64],
    probes: &ProbeSet,
    g_mod: &[f64],
    r_star: f64,
    base: f64,
    cfg: &EngineConfig,
) -> Result<Evaluated> {
    let mut level = if r_star.is_finite() {
        (1.0 - cfg.eval_margin) * r_star
    } else {
        let top = g_mod.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        (1.1 * top).min(MAX_LEVEL_RATIO * base).max(base)
    };
    let ratio = (1.0 - cfg.coverage_margin) / (1.0 - cfg.eval_margin);
    let tol = 1e-3 * cfg.overlap_tol;
    let mut last = None;
    for _ in 0..=EVAL_RETRIES {
        match ctx.expand(f, z, level) {
            Ok(exp) => {
                let limit = ((1.0 - cfg.coverage_margin) * r_star).min(ratio * level);
                let values = probes
                    .probes
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| g_mod[i] < limit)
                    .filter_map(|(i, p)| exp.evaluate_series(&p.point, tol).ok().map(|s| (i, s.value)))
                    .collect();
                return Ok(Evaluated { level, nodes: exp.nodes_per_loop, values });
            }
            Err(e) => last = Some(e),
        }
        level *= 0.97;
    }
    Err(last.unwrap())
}

/// Convergence data of one `g` at the active lattice points.
#[allow(clippy::too_many_arguments)]
pub fn build_slice<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    g: &RationalFunction,
    origin: SliceOrigin,
    base_radius: f64,
    active: Vec<bool>,
    z_grid: &ZLattice,
    probes: &ProbeSet,
    cfg: &EngineConfig,
) -> Result<Slice> {
    let base = base_level(g, base_radius);
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::Precondition(format!("g = {g} has no positive level inside |zeta| = {base_radius}")));
    }
    let rcfg = radius_config(cfg);
    let ctx = ExpansionContext::new(curve, g, rcfg.expansion);
    let n = z_grid.len();
    let results: Vec<Option<Result<RadiusEstimate>>> = (0..n)
        .into_par_iter()
        .map(|i| active[i].then(|| radius_at(&ctx, f, &z_grid.point(i), base, &rcfg)))
        .collect();
    let mut estimates = Vec::with_capacity(n);
    let mut failures = Vec::with_capacity(n);
    for r in results {
        match r {
            Some(Ok(e)) => {
                estimates.push(Some(e));
                failures.push(None);
            }
            Some(Err(e)) => {
                estimates.push(None);
                failures.push(Some(e.to_string()));
            }
            None => {
                estimates.push(None);
                failures.push(None);
            }
        }
    }
    let effective: Vec<Option<f64>> = estimates.iter().map(|e| e.map(|e| e.radius.min(e.fit_radius))).collect();
    let r_star = window_minimum(z_grid, &effective);

    let g_mod: Vec<f64> = probes.probes.iter().map(|p| g.eval_unchecked(p.point.xi).norm()).collect();
    let ectx = ExpansionContext::new(curve, g, eval_config(cfg));
    let evaluated: Vec<Option<Result<Evaluated>>> = (0..n)
        .into_par_iter()
        .map(|i| r_star[i].map(|rs| evaluate_at(&ectx, f, &z_grid.point(i), probes, &g_mod, rs, base, cfg)))
        .collect();
    let mut eval_level = Vec::with_capacity(n);
    let mut eval_nodes = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for (i, e) in evaluated.into_iter().enumerate() {
        match e {
            Some(Ok(ev)) => {
                eval_level.push(Some(ev.level));
                eval_nodes.push(Some(ev.nodes));
                values.push(ev.values);
            }
            Some(Err(err)) => {
                failures[i] = Some(format!("evaluation: {err}"));
                eval_level.push(None);
                eval_nodes.push(None);
                values.push(Vec::new());
            }
            None => {
                eval_level.push(None);
                eval_nodes.push(None);
                values.push(Vec::new());
            }
        }
    }
    Ok(Slice {
        g: g.to_spec(),
        label: g.to_string(),
        origin,
        base_level: base,
        active,
        estimates,
        failures,
        r_star,
        eval_level,
        eval_nodes,
        values,
        function: g.clone(),
    })
}

/// Slices for every member of `family` over the whole lattice, with the
/// overlap check.
pub fn build_atlas<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    family: &[RationalFunction],
    z_grid: &ZLattice,
    probes: ProbeSet,
    cfg: &EngineConfig,
) -> Result<ContinuationAtlas> {
    if family.is_empty() {
        return Err(Error::Precondition("the rational family is empty".into()));
    }
    let mut atlas = ContinuationAtlas::new(z_grid.clone(), probes);
    for (index, g) in family.iter().enumerate() {
        let active = vec![true; z_grid.len()];
        match build_slice(f, curve, g, SliceOrigin::Family { index }, cfg.base_radius, active, z_grid, &atlas.probes, cfg) {
            Ok(s) => atlas.slices.push(s),
            Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    atlas.check_overlaps(cfg.overlap_tol)?;
    Ok(atlas)
}

/// The first `size` members of the enumerated family, led by `g = zeta`.
pub fn default_family(cfg: &EngineConfig) -> Vec<RationalFunction> {
    let mut out = vec![RationalFunction::identity()];
    for g in crate::lemniscate::enumerate_family(cfg.family_degree, cfg.family_height) {
        if out.len() >= cfg.family_size {
            break;
        }
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::probes::place_probes;
    use crate::lemniscate::GaussRational;
    use crate::polycurve::CurvePoint;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn geometric_series_covers_the_unit_disk() {
        let curve = AlgebraicCurve::identity_graph();
        let cfg = EngineConfig::default();
        let probes = place_probes(&curve, &cfg.probes).unwrap();
        let grid = ZLattice::real_line(0.0, 1.0, 1).unwrap();
        let f = |_: &[Complex64], w: &CurvePoint| (1.0 - w.xi).inv();
        let atlas = build_atlas(&f, &curve, &[RationalFunction::identity()], &grid, probes, &cfg).unwrap();
        assert!(atlas.overlap_log.is_empty());
        let mask = atlas.union_mask(0);
        for (p, covered) in atlas.probes.probes.iter().zip(&mask) {
            let r = p.point.xi.norm();
            if r < 0.9 {
                assert!(covered, "{r}");
            }
            if r > 0.96 {
                assert!(!covered, "{r}");
            }
        }
        for &(p, v) in &atlas.slices[0].values[0] {
            let w = atlas.probes.probes[p].point.xi;
            assert!((v - (1.0 - w).inv()).norm() < 1e-7 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn two_slices_agree() {
        let curve = AlgebraicCurve::identity_graph();
        let cfg = EngineConfig::default();
        let probes = place_probes(&curve, &cfg.probes).unwrap();
        let grid = ZLattice::real_line(0.0, 1.0, 1).unwrap();
        let f = |_: &[Complex64], w: &CurvePoint| (2.0 - w.xi).inv();
        // zeta / (2 (zeta - 2)) = (-1/4) zeta / (1 - zeta / 2)
        let g2 = RationalFunction::new(
            "-1/4".parse().unwrap(),
            1,
            vec![GaussRational::one(), "-1/2".parse().unwrap()],
        )
        .unwrap();
        let atlas = build_atlas(&f, &curve, &[RationalFunction::identity(), g2], &grid, probes, &cfg).unwrap();
        assert!(!atlas.overlap_log.is_empty());
        assert!(atlas.max_overlap < 1e-7, "{}", atlas.max_overlap);
        let mask = atlas.union_mask(0);
        for (p, covered) in atlas.probes.probes.iter().zip(&mask) {
            if (p.point.xi - 2.0).norm() > 0.3 {
                assert!(covered, "{}", p.point.xi);
            }
        }
        assert!(atlas.slices[1].estimates[0].unwrap().infinite);
        let _ = c(0.0, 0.0);
    }

    #[test]
    fn entire_function_is_covered_by_the_first_slice() {
        let curve = AlgebraicCurve::identity_graph();
        let cfg = EngineConfig::default();
        let probes = place_probes(&curve, &cfg.probes).unwrap();
        let grid = ZLattice::real_line(0.0, 1.0, 2).unwrap();
        let f = |z: &[Complex64], w: &CurvePoint| (w.xi + z[0]).exp();
        let atlas = build_atlas(&f, &curve, &[RationalFunction::identity()], &grid, probes, &cfg).unwrap();
        assert!(atlas.slices[0].estimates.iter().all(|e| e.unwrap().infinite));
        assert_eq!(atlas.covered_count(), 2 * atlas.probes.len());
    }
}
