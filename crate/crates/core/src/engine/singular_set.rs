use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::atlas::ContinuationAtlas;
use super::config::EngineConfig;
use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::polycurve::{AlgebraicCurve, CurvePoint};
use crate::singular::{laurent_probe, locate_singularity, FiberPoint, SingularFiberSet};

/// Probe disks reach this multiple of the probe spacing.
const PROBE_REACH: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeOutcome {
    Covered,
    /// A singularity was located inside the probe disk.
    Singular,
    Regular,
    /// The Laurent test could not be run.
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularSetEstimate {
    pub sfs: SingularFiberSet,
    /// Uncovered probes not explained by a located singularity, per `z`.
    pub coverage_gaps: Vec<Vec<usize>>,
    pub outcomes: Vec<Vec<ProbeOutcome>>,
}

impl SingularSetEstimate {
    pub fn gap_count(&self) -> usize {
        self.coverage_gaps.iter().map(|g| g.len()).sum()
    }

    /// Recomputes the gaps after slices were added: probes covered now are
    /// dropped, earlier Laurent outcomes are kept.
    pub fn refresh(&mut self, atlas: &ContinuationAtlas) {
        for z in 0..atlas.z_grid.len() {
            let mask = atlas.union_mask(z);
            for (p, covered) in mask.into_iter().enumerate() {
                if covered {
                    self.outcomes[z][p] = ProbeOutcome::Covered;
                }
            }
            self.coverage_gaps[z] = gaps_of(&self.outcomes[z]);
        }
    }
}

fn gaps_of(outcomes: &[ProbeOutcome]) -> Vec<usize> {
    outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(o, ProbeOutcome::Regular | ProbeOutcome::Failed))
        .map(|(i, _)| i)
        .collect()
}

fn sheet_of(curve: &AlgebraicCurve, p: &CurvePoint, fallback: usize) -> usize {
    match curve.branches_at(p.xi) {
        Ok(chart) => chart
            .sheet_values
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - p.eta).norm().total_cmp(&(b.1 - p.eta).norm()))
            .map_or(fallback, |(i, _)| i),
        Err(_) => fallback,
    }
}

/// Laurent test on the disk around one uncovered probe; a positive test is
/// refined to the singular point and re-checked at doubled resolution.
fn examine<F: FiberFunction + ?Sized>(
    f: &F,
    curve: &AlgebraicCurve,
    z: &[Complex64],
    start: &CurvePoint,
    sheet: usize,
    spacing: f64,
    nodes: usize,
) -> (ProbeOutcome, Option<FiberPoint>) {
    let dist = curve.distance_to_critical(start.xi);
    let r = (PROBE_REACH * spacing).min(0.9 * dist);
    let probe = match laurent_probe(f, curve, z, start, r, nodes) {
        Ok(p) => p,
        Err(_) => return (ProbeOutcome::Failed, None),
    };
    if !probe.singular {
        return (ProbeOutcome::Regular, None);
    }
    let Ok(found) = locate_singularity(f, curve, z, start, r, nodes) else {
        return (ProbeOutcome::Failed, None);
    };
    let recheck_r = (r / 4.0).min(0.9 * curve.distance_to_critical(found.xi));
    match laurent_probe(f, curve, z, &found, recheck_r, 2 * nodes) {
        Ok(p) if p.singular => {
            (ProbeOutcome::Singular, Some(FiberPoint { value: found.xi, sheet: sheet_of(curve, &found, sheet) }))
        }
        _ => (ProbeOutcome::Failed, None),
    }
}

/// Fibers of the singular set: uncovered probes whose Laurent test finds a
/// singularity, refined and merged per sheet at `1e-3` of the probe diameter.
pub fn singular_set<F: FiberFunction + ?Sized>(
    atlas: &ContinuationAtlas,
    f: &F,
    curve: &AlgebraicCurve,
    cfg: &EngineConfig,
) -> Result<SingularSetEstimate> {
    if !atlas.consistent {
        return Err(Error::InconsistentAtlas { discrepancy: atlas.max_overlap, tolerance: cfg.overlap_tol });
    }
    let n = atlas.z_grid.len();
    let per_z: Vec<(Vec<ProbeOutcome>, Vec<FiberPoint>)> = (0..n)
        .into_par_iter()
        .map(|zi| {
            let z = atlas.z_grid.point(zi);
            let mask = atlas.union_mask(zi);
            let mut outcomes = Vec::with_capacity(mask.len());
            let mut points = Vec::new();
            for (p, covered) in atlas.probes.probes.iter().zip(mask) {
                if covered {
                    outcomes.push(ProbeOutcome::Covered);
                    continue;
                }
                let (o, pt) = examine(f, curve, &z, &p.point, p.sheet, p.spacing, cfg.laurent_nodes);
                outcomes.push(o);
                points.extend(pt);
            }
            (outcomes, points)
        })
        .collect();
    let tol = 1e-3 * atlas.probes.diameter;
    let mut outcomes = Vec::with_capacity(n);
    let mut fibers = Vec::with_capacity(n);
    for (o, pts) in per_z {
        outcomes.push(o);
        fibers.push(pts);
    }
    let sfs = SingularFiberSet::new(atlas.z_grid.clone(), fibers, tol)?;
    let coverage_gaps = outcomes.iter().map(|o| gaps_of(o)).collect();
    Ok(SingularSetEstimate { sfs, coverage_gaps, outcomes })
}

/// `zeta -> 1/zeta` on every fiber point, keeping sheet tags.
pub fn invert_chart(sfs: &SingularFiberSet) -> Result<SingularFiberSet> {
    let fibers = sfs
        .fibers
        .iter()
        .map(|f| {
            f.iter()
                .map(|p| {
                    if p.value.norm() == 0.0 {
                        Err(Error::OriginInSet)
                    } else {
                        Ok(FiberPoint { value: p.value.inv(), sheet: p.sheet })
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SingularFiberSet { z_grid: sfs.z_grid.clone(), fibers, max_fiber_size: sfs.max_fiber_size })
}

/// `zeta -> 1/zeta` on bare chart points.
pub fn invert_points(points: &[Complex64]) -> Result<Vec<Complex64>> {
    points.iter().map(|p| if p.norm() == 0.0 { Err(Error::OriginInSet) } else { Ok(p.inv()) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::atlas::build_atlas;
    use crate::engine::probes::place_probes;
    use crate::hartogs::ZLattice;
    use crate::lemniscate::RationalFunction;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn run<F: FiberFunction>(f: &F, grid: &ZLattice) -> SingularSetEstimate {
        let curve = AlgebraicCurve::identity_graph();
        let cfg = EngineConfig::default();
        let probes = place_probes(&curve, &cfg.probes).unwrap();
        let atlas = build_atlas(f, &curve, &[RationalFunction::identity()], grid, probes, &cfg).unwrap();
        singular_set(&atlas, f, &curve, &cfg).unwrap()
    }

    #[test]
    fn two_poles() {
        let grid = ZLattice::real_line(0.0, 1.0, 1).unwrap();
        let f = |_: &[Complex64], w: &CurvePoint| ((w.xi - 2.0) * (w.xi - c(0.0, 3.0))).inv();
        let est = run(&f, &grid);
        let vals = est.sfs.values(0);
        assert_eq!(vals.len(), 2, "{vals:?}");
        assert!((vals[0] - c(0.0, 3.0)).norm() < 1e-8);
        assert!((vals[1] - c(2.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn entire_has_no_fibers_and_no_gaps() {
        let grid = ZLattice::real_line(0.0, 1.0, 1).unwrap();
        let f = |_: &[Complex64], w: &CurvePoint| w.xi.exp();
        let est = run(&f, &grid);
        assert!(est.sfs.is_empty());
        assert_eq!(est.gap_count(), 0);
    }

    #[test]
    fn inversion() {
        let grid = ZLattice::real_line(0.0, 1.0, 1).unwrap();
        let sfs = SingularFiberSet::from_values(grid.clone(), vec![vec![c(2.0, 0.0), c(0.0, 3.0)]], 1e-12).unwrap();
        let inv = invert_chart(&sfs).unwrap();
        let vals = inv.values(0);
        assert!(vals.contains(&c(0.5, 0.0)));
        assert!((vals.iter().find(|v| v.re == 0.0).unwrap() - c(0.0, -1.0 / 3.0)).norm() < 1e-16);
        let back = invert_chart(&inv).unwrap();
        for (a, b) in back.values(0).iter().zip(sfs.values(0)) {
            assert!((a - b).norm() <= 1e-15 * b.norm());
        }
        let bad = SingularFiberSet::from_values(grid, vec![vec![c(0.0, 0.0)]], 1e-12).unwrap();
        assert!(matches!(invert_chart(&bad), Err(Error::OriginInSet)));
    }
}
