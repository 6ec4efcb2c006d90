use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concentric chart circles on which coverage is probed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    pub angles: usize,
    /// Probes closer than this to a critical value are dropped.
    pub critical_tube: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { r_min: 0.1, r_max: 3.5, radii: 16, angles: 64, critical_tube: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub k_max: usize,
    /// Truncation used by the expansions that evaluate the series.
    pub eval_k_max: usize,
    pub adaptive_rounds: usize,
    pub shrink: f64,
    /// Radius of the base disk on which `f` is known to be holomorphic.
    pub base_radius: f64,
    pub probes: ProbeConfig,
    /// A probe is covered when `|g| < (1 - coverage_margin) R_star`.
    pub coverage_margin: f64,
    /// Series are evaluated from the level `(1 - eval_margin) R_star`.
    pub eval_margin: f64,
    pub overlap_tol: f64,
    pub family_degree: usize,
    pub family_height: i64,
    pub family_size: usize,
    pub gap_rounds: usize,
    pub lemma2_budget: usize,
    /// Largest fraction of unexplained uncovered probes for a verdict.
    pub gap_threshold: f64,
    pub fit_degree: usize,
    pub laurent_nodes: usize,
    pub psh_slack: f64,
    /// Fibers larger than this are reported as not finite.
    pub max_fiber_size: usize,
    pub override_irreducibility: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k_max: 60,
            eval_k_max: 30,
            adaptive_rounds: 4,
            shrink: 0.85,
            base_radius: 1.0,
            probes: ProbeConfig::default(),
            coverage_margin: 0.05,
            eval_margin: 0.025,
            overlap_tol: 1e-6,
            family_degree: 1,
            family_height: 1,
            family_size: 1,
            gap_rounds: 1,
            lemma2_budget: 24,
            gap_threshold: 0.02,
            fit_degree: 8,
            laurent_nodes: 64,
            psh_slack: 1e-3,
            max_fiber_size: 32,
            override_irreducibility: false,
        }
    }
}

impl EngineConfig {
    /// Tighter overlap tolerance and larger expansions.
    pub fn strict() -> Self {
        EngineConfig { k_max: 80, overlap_tol: 1e-8, laurent_nodes: 128, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("shrink", self.shrink),
            ("base_radius", self.base_radius),
            ("probes.r_min", self.probes.r_min),
            ("probes.critical_tube", self.probes.critical_tube),
            ("coverage_margin", self.coverage_margin),
            ("eval_margin", self.eval_margin),
            ("overlap_tol", self.overlap_tol),
            ("gap_threshold", self.gap_threshold),
            ("psh_slack", self.psh_slack),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eval_margin >= self.coverage_margin || self.coverage_margin >= 1.0 {
            return Err(Error::Precondition("need 0 < eval_margin < coverage_margin < 1".into()));
        }
        if self.shrink >= 1.0 {
            return Err(Error::Precondition("shrink must be below 1".into()));
        }
        if self.probes.r_max <= self.probes.r_min || self.probes.radii < 2 || self.probes.angles < 4 {
            return Err(Error::Precondition("probe annulus needs r_min < r_max, 2+ radii, 4+ angles".into()));
        }
        if self.k_max < 8 || self.eval_k_max < 4 || self.laurent_nodes < 16 || !self.laurent_nodes.is_power_of_two() {
            return Err(Error::Precondition("k_max >= 8, eval_k_max >= 4, laurent_nodes a power of two >= 16".into()));
        }
        if self.family_size == 0 || self.family_degree == 0 || self.family_height < 1 {
            return Err(Error::Precondition("family must be nonempty".into()));
        }
        Ok(())
    }
}
