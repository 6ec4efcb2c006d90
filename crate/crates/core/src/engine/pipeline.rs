use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::atlas::{build_atlas, build_slice, default_family, ContinuationAtlas, SliceOrigin};
use super::config::EngineConfig;
use super::probes::place_probes;
use super::singular_set::{invert_chart, singular_set, SingularSetEstimate};
use crate::error::{Error, Result};
use crate::fiber::FiberFunction;
use crate::hartogs::ZLattice;
use crate::lemniscate::{lemma2_construct, Disk};
use crate::polycurve::{monodromy_irreducible, AlgebraicCurve, Irreducibility};
use crate::singular::{capacity_field, weierstrass_fit, CapacityReport, FitVerdict, SingularFiberSet, WeierstrassFit};
use crate::upoly::cluster_points;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithAnalytic,
    Negative,
    HypothesesUnmet,
    InsufficientCoverage,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWithAnalytic => "consistent-with-analytic",
            Verdict::Negative => "negative",
            Verdict::HypothesesUnmet => "hypotheses-unmet",
            Verdict::InsufficientCoverage => "insufficient-coverage",
        })
    }
}

/// Replaces the computed fibers by prescribed ones, `z -> S_z`.
pub type FiberInjection = dyn Fn(&[Complex64]) -> Vec<Complex64> + Sync;

pub struct PipelineInput<'a> {
    pub f: &'a dyn FiberFunction,
    /// Free-form description of `f` recorded in the manifest hash.
    pub function_id: String,
    pub curve: &'a AlgebraicCurve,
    pub z_grid: ZLattice,
    pub config: EngineConfig,
    pub injected_fibers: Option<&'a FiberInjection>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Coverage {
    pub probes: usize,
    pub covered: usize,
    pub singular: usize,
    pub gaps: usize,
    pub covered_fraction: f64,
    pub gap_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub verdict: Verdict,
    pub irreducibility: Irreducibility,
    pub coverage: Coverage,
    pub fibers_finite: bool,
    pub atlas: Option<ContinuationAtlas>,
    pub singular: Option<SingularSetEstimate>,
    /// The fibers handed to the fit (computed or injected).
    pub fibers: Option<SingularFiberSet>,
    pub inverted: Option<SingularFiberSet>,
    pub inversion_error: Option<String>,
    pub fit: Option<WeierstrassFit>,
    pub fit_error: Option<String>,
    pub capacity: Option<CapacityReport>,
    pub gap_slice_failures: Vec<String>,
    pub timings: Vec<(String, f64)>,
    pub input_hash: String,
}

fn input_hash(input: &PipelineInput<'_>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&input.config).expect("config serializes"));
    h.update(input.curve.poly.to_text().as_bytes());
    h.update(input.function_id.as_bytes());
    h.update(serde_json::to_vec(&input.z_grid).expect("grid serializes"));
    h.update([input.injected_fibers.is_some() as u8]);
    hex::encode(h.finalize())
}

/// Adds slices targeted at the located singularities: for each `z`, a
/// lemniscate holding a disk around 0 and avoiding `S_z`, evaluated at `z`
/// and its lattice neighbours. Identical functions share a slice.
fn gap_round<F: FiberFunction + ?Sized>(
    atlas: &mut ContinuationAtlas,
    est: &SingularSetEstimate,
    f: &F,
    curve: &AlgebraicCurve,
    cfg: &EngineConfig,
    round: usize,
    failures: &mut Vec<String>,
) -> Result<bool> {
    let n = atlas.z_grid.len();
    let mut targets: Vec<(crate::lemniscate::RationalFunction, f64, Vec<usize>)> = Vec::new();
    for zi in 0..n {
        if est.coverage_gaps[zi].is_empty() || est.sfs.fibers[zi].is_empty() {
            continue;
        }
        let scale = atlas.probes.diameter.max(1.0);
        let sigma = cluster_points(&est.sfs.values(zi), 1e-9 * scale);
        let rmin = sigma.iter().map(|s| s.norm()).fold(f64::INFINITY, f64::min);
        let radius = 0.5f64.powi(round as i32 + 1) * rmin;
        let g = match lemma2_construct(&sigma, &[Disk::new(Complex64::new(0.0, 0.0), radius)], cfg.lemma2_budget) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("z[{zi}]: {e}"));
                continue;
            }
        };
        match targets.iter_mut().find(|t| t.0 == g) {
            Some(t) => {
                t.1 = t.1.min(radius);
                t.2.push(zi);
            }
            None => targets.push((g, radius, vec![zi])),
        }
    }
    let added = !targets.is_empty();
    for (g, radius, zs) in targets {
        let mut active = vec![false; n];
        for &zi in &zs {
            for j in atlas.z_grid.window(zi) {
                active[j] = true;
            }
        }
        let origin = SliceOrigin::GapTarget { round, z_indices: zs };
        match build_slice(f, curve, &g, origin, radius, active, &atlas.z_grid, &atlas.probes, cfg) {
            Ok(s) => atlas.slices.push(s),
            Err(e) => failures.push(format!("{g}: {e}")),
        }
    }
    if added {
        atlas.check_overlaps(cfg.overlap_tol)?;
    }
    Ok(added)
}

/// Expansion over the family, union of the convergence domains, singular
/// fibers, inversion and the analyticity fit of the fibers.
pub fn theorem_pipeline(input: &PipelineInput<'_>) -> Result<PipelineReport> {
    let cfg = &input.config;
    cfg.validate()?;
    let curve = input.curve;
    let f = input.f;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };
    let input_hash = input_hash(input);

    let irreducibility = match curve.irreducible {
        Irreducibility::Undetermined => monodromy_irreducible(curve),
        v => v,
    };
    lap("irreducibility", &mut timings);
    let empty = |verdict| PipelineReport {
        verdict,
        irreducibility,
        coverage: Coverage::default(),
        fibers_finite: false,
        atlas: None,
        singular: None,
        fibers: None,
        inverted: None,
        inversion_error: None,
        fit: None,
        fit_error: None,
        capacity: None,
        gap_slice_failures: Vec::new(),
        timings: Vec::new(),
        input_hash: input_hash.clone(),
    };
    if irreducibility != Irreducibility::Yes && !cfg.override_irreducibility {
        let mut r = empty(Verdict::HypothesesUnmet);
        r.timings = timings;
        return Ok(r);
    }

    let probes = place_probes(curve, &cfg.probes)?;
    if probes.is_empty() {
        return Err(Error::GridTooSmall("no probe points away from the critical values".into()));
    }
    let family = default_family(cfg);
    let mut atlas = build_atlas(f, curve, &family, &input.z_grid, probes, cfg)?;
    lap("atlas", &mut timings);
    let mut est = singular_set(&atlas, f, curve, cfg)?;
    lap("singular-set", &mut timings);
    let mut gap_slice_failures = Vec::new();
    for round in 0..cfg.gap_rounds {
        if est.gap_count() == 0 {
            break;
        }
        if !gap_round(&mut atlas, &est, f, curve, cfg, round, &mut gap_slice_failures)? {
            break;
        }
        est.refresh(&atlas);
    }
    lap("gap-rounds", &mut timings);

    let total = atlas.probes.len() * atlas.z_grid.len();
    let covered = atlas.covered_count();
    let gaps = est.gap_count();
    let singular = est
        .outcomes
        .iter()
        .flatten()
        .filter(|o| matches!(o, super::singular_set::ProbeOutcome::Singular))
        .count();
    let coverage = Coverage {
        probes: total,
        covered,
        singular,
        gaps,
        covered_fraction: covered as f64 / total as f64,
        gap_fraction: gaps as f64 / total as f64,
    };

    let fibers = match input.injected_fibers {
        Some(inject) => {
            let values = input.z_grid.points().iter().map(|z| inject(z)).collect();
            SingularFiberSet::from_values(input.z_grid.clone(), values, 1e-3 * atlas.probes.diameter)?
        }
        None => est.sfs.clone(),
    };
    let fibers_finite = fibers.max_fiber_size <= cfg.max_fiber_size;
    let (inverted, inversion_error) = match invert_chart(&fibers) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let capacity = (!fibers.is_empty()).then(|| capacity_field(&fibers, cfg.psh_slack));
    lap("invert-capacity", &mut timings);

    let (fit, fit_error, fit_verdict) = if fibers.is_empty() {
        (None, None, Verdict::ConsistentWithAnalytic)
    } else {
        match weierstrass_fit(&fibers, cfg.fit_degree) {
            Ok(fit) => {
                let v = match fit.verdict {
                    FitVerdict::ConsistentWithAnalytic => Verdict::ConsistentWithAnalytic,
                    FitVerdict::Negative => Verdict::Negative,
                };
                (Some(fit), None, v)
            }
            Err(e @ Error::RaggedFibers { .. }) => (None, Some(e.to_string()), Verdict::Negative),
            Err(e) => return Err(e),
        }
    };
    lap("fit", &mut timings);
    let verdict = if !fibers_finite {
        Verdict::Negative
    } else if coverage.gap_fraction > cfg.gap_threshold {
        Verdict::InsufficientCoverage
    } else {
        fit_verdict
    };

    Ok(PipelineReport {
        verdict,
        irreducibility,
        coverage,
        fibers_finite,
        atlas: Some(atlas),
        singular: Some(est),
        fibers: Some(fibers),
        inverted,
        inversion_error,
        fit,
        fit_error,
        capacity,
        gap_slice_failures,
        timings,
        input_hash,
    })
}

/// Run manifest: input hash, tolerances, coverage, fibers, fit and verdict.
pub fn manifest(input: &PipelineInput<'_>, report: &PipelineReport) -> Value {
    let fibers: Vec<Value> = report
        .fibers
        .as_ref()
        .map(|s| {
            s.fibers
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    json!({
                        "z": s.z_grid.point(i).iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        "points": f.iter().map(|p| json!({"re": p.value.re, "im": p.value.im, "sheet": p.sheet})).collect::<Vec<_>>(),
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    let fit = report.fit.as_ref().map(|fit| {
        json!({
            "degree": fit.degree,
            "model_degree": fit.model_degree,
            "residual": fit.residual,
            "relative_residual": fit.relative_residual,
            "condition": fit.condition,
            "center": fit.center.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            "scale": fit.scale,
            "monomials": fit.monomials,
            "coefficients": fit.model.iter().map(|m| m.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    });
    let slices: Vec<Value> = report
        .atlas
        .as_ref()
        .map(|a| {
            a.slices
                .iter()
                .map(|s| json!({"g": s.g, "label": s.label, "origin": s.origin, "base_level": s.base_level}))
                .collect()
        })
        .unwrap_or_default();
    let cfg = &input.config;
    json!({
        "software": {"name": "hartogs", "version": env!("CARGO_PKG_VERSION")},
        "input_sha256": report.input_hash,
        "function": input.function_id,
        "curve": input.curve.poly.to_text(),
        "config": cfg,
        "tolerances": {
            "coverage_margin": cfg.coverage_margin,
            "eval_margin": cfg.eval_margin,
            "overlap": cfg.overlap_tol,
            "gap_threshold": cfg.gap_threshold,
            "fit_threshold": crate::singular::FIT_THRESHOLD,
            "psh_slack": cfg.psh_slack,
            "laurent_noise_floor": crate::singular::LAURENT_NOISE_FLOOR,
        },
        "irreducibility": report.irreducibility,
        "hypotheses": {
            "nonpluripolar_parameter_set": "assumed: E is the full parameter grid (not tested numerically)",
            "holomorphic_on_base": format!("assumed on |zeta| <= {}", cfg.base_radius),
        },
        "slices": slices,
        "max_overlap": report.atlas.as_ref().map(|a| a.max_overlap),
        "coverage": report.coverage,
        "fibers_finite": report.fibers_finite,
        "injected_fibers": input.injected_fibers.is_some(),
        "fibers": fibers,
        "fit": fit,
        "fit_error": report.fit_error,
        "inversion_error": report.inversion_error,
        "gap_slice_failures": report.gap_slice_failures,
        "verdict": report.verdict,
        "timings_seconds": report.timings.iter().map(|(k, v)| json!({"stage": k, "seconds": v})).collect::<Vec<_>>(),
    })
}
