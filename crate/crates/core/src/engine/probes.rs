use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::config::ProbeConfig;
use crate::error::Result;
use crate::polycurve::{AlgebraicCurve, CurvePoint};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Probe {
    pub point: CurvePoint,
    /// Position of the point in the sorted fiber over its `xi`.
    pub sheet: usize,
    /// Distance to the neighbouring probes.
    pub spacing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSet {
    pub probes: Vec<Probe>,
    pub diameter: f64,
}

impl ProbeSet {
    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }
}

/// Probes on every sheet over the chart circles `|xi| = r`, away from the
/// critical values.
pub fn place_probes(curve: &AlgebraicCurve, cfg: &ProbeConfig) -> Result<ProbeSet> {
    let dr = (cfg.r_max - cfg.r_min) / (cfg.radii - 1) as f64;
    let mut probes = Vec::new();
    for i in 0..cfg.radii {
        let r = cfg.r_min + dr * i as f64;
        let spacing = dr.max(r * TAU / cfg.angles as f64);
        for k in 0..cfg.angles {
            let xi = Complex64::from_polar(r, TAU * (k as f64 + 0.5) / cfg.angles as f64);
            if curve.distance_to_critical(xi) < cfg.critical_tube {
                continue;
            }
            let Ok(chart) = curve.branches_at(xi) else { continue };
            for (sheet, eta) in chart.sheet_values.into_iter().enumerate() {
                probes.push(Probe { point: CurvePoint::new(xi, eta), sheet, spacing });
            }
        }
    }
    let mut diameter: f64 = 0.0;
    for (i, a) in probes.iter().enumerate() {
        for b in &probes[i + 1..] {
            diameter = diameter.max((a.point.xi - b.point.xi).norm());
        }
    }
    Ok(ProbeSet { probes, diameter })
}
