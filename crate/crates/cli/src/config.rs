use std::path::{Path, PathBuf};

use hartogs::corpus::{self, GridSpec, Scenario};
use hartogs::engine::EngineConfig;
use hartogs::expr::{parse_curve, ExprFunction};
use hartogs::hartogs::ZLattice;
use hartogs::lemniscate::{RationalFunction, RationalSpec};
use hartogs::singular::CompactSet;
use hartogs::{AlgebraicCurve, Error};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TolProfile {
    Default,
    Strict,
}

/// Run configuration as read from TOML. Every section is optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol_profile: Option<TolProfile>,
    /// Built-in scenario supplying curve, function and grid.
    pub scenario: Option<String>,
    /// Curve as an expression in `xi, eta` or as `i j re im` lines.
    pub curve: Option<String>,
    pub curve_file: Option<PathBuf>,
    /// Expression for `f(z, w)`.
    pub function: Option<String>,
    pub grid: Option<GridSpec>,
    /// Overrides on top of the tolerance profile.
    pub engine: Option<toml::Table>,
    pub lemniscate: LemniscateSection,
    pub expand: ExpandSection,
    pub capacity: CapacitySection,
    pub singular: SingularSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemniscateSection {
    pub sigma: Vec<[f64; 2]>,
    pub disks: Vec<[f64; 3]>,
    pub budget: usize,
    pub depth: u32,
}

impl Default for LemniscateSection {
    fn default() -> Self {
        LemniscateSection { sigma: Vec::new(), disks: Vec::new(), budget: 24, depth: hartogs::lemniscate::DEFAULT_DEPTH }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpandSection {
    /// Expansion function; the identity when absent.
    pub g: Option<RationalSpec>,
    pub level: Option<f64>,
    /// Parameter point, one `[re, im]` per coordinate.
    pub z: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySection {
    pub set: Option<CompactSet>,
    pub n_fekete: usize,
    pub restarts: usize,
}

impl Default for CapacitySection {
    fn default() -> Self {
        CapacitySection { set: None, n_fekete: 32, restarts: 3 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingularSection {
    /// Fiber table in the layout written by `continue`.
    pub fibers: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Precondition(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
    }

    pub fn scenario(&self) -> Result<Option<Scenario>, Error> {
        self.scenario.as_deref().map(corpus::scenario).transpose()
    }

    /// Profile defaults overlaid with the `[engine]` table.
    pub fn engine(&self, profile: TolProfile) -> Result<EngineConfig, Error> {
        let base = match profile {
            TolProfile::Default => EngineConfig::default(),
            TolProfile::Strict => EngineConfig::strict(),
        };
        let Some(overrides) = &self.engine else {
            base.validate()?;
            return Ok(base);
        };
        let mut table = toml::Table::try_from(&base).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut table, overrides);
        let cfg: EngineConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Parse(format!("[engine]: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn curve_text(&self) -> Result<String, Error> {
        if let Some(p) = &self.curve_file {
            return std::fs::read_to_string(p)
                .map_err(|e| Error::Precondition(format!("cannot read curve {}: {e}", p.display())));
        }
        if let Some(c) = &self.curve {
            return Ok(c.clone());
        }
        if let Some(s) = self.scenario()? {
            return Ok(s.curve.to_string());
        }
        Err(Error::Precondition("no curve given (use --curve, --curve-file or --scenario)".into()))
    }

    pub fn curve(&self) -> Result<AlgebraicCurve, Error> {
        AlgebraicCurve::new(parse_curve(&self.curve_text()?)?)
    }

    pub fn function(&self) -> Result<ExprFunction, Error> {
        if let Some(f) = &self.function {
            return ExprFunction::parse(f);
        }
        if let Some(s) = self.scenario()? {
            return s.function();
        }
        Err(Error::Precondition("no function given (use --function or --scenario)".into()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, Error> {
        if let Some(g) = &self.grid {
            return Ok(g.clone());
        }
        if let Some(s) = self.scenario()? {
            return Ok(s.grid);
        }
        Err(Error::Precondition("no parameter grid given (use [grid] or --scenario)".into()))
    }

    pub fn lattice(&self) -> Result<ZLattice, Error> {
        self.grid_spec()?.lattice()
    }

    pub fn expansion_g(&self) -> Result<RationalFunction, Error> {
        match &self.expand.g {
            Some(spec) => RationalFunction::from_spec(spec),
            None => Ok(RationalFunction::identity()),
        }
    }
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// `re,im` as typed on the command line.
pub fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => re.parse().map(|r| [r, 0.0]).map_err(|_| format!("invalid number `{s}`")),
        [re, im] => Ok([re.parse().map_err(|_| format!("invalid `{s}`"))?, im.parse().map_err(|_| format!("invalid `{s}`"))?]),
        _ => Err(format!("expected `re,im`, got `{s}`")),
    }
}

/// `re,im,radius`.
pub fn parse_disk(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| format!("invalid disk `{s}`"))?;
    match v.as_slice() {
        [re, im, r] => Ok([*re, *im, *r]),
        _ => Err(format!("expected `re,im,radius`, got `{s}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("seeed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[lemniscate]\nbudgte = 3").is_err());
        let cfg: RunConfig = toml::from_str("[engine]\nk_max_typo = 3").unwrap();
        assert!(cfg.engine(TolProfile::Default).is_err());
    }

    #[test]
    fn engine_overrides_layer_on_the_profile() {
        let cfg: RunConfig = toml::from_str("[engine]\nfit_degree = 4\n[engine.probes]\nangles = 32").unwrap();
        let e = cfg.engine(TolProfile::Strict).unwrap();
        assert_eq!(e.fit_degree, 4);
        assert_eq!(e.probes.angles, 32);
        assert_eq!(e.overlap_tol, EngineConfig::strict().overlap_tol);
        let bad: RunConfig = toml::from_str("[engine]\noverlap_tol = -1.0").unwrap();
        assert!(bad.engine(TolProfile::Default).is_err());
    }

    #[test]
    fn scenario_supplies_inputs() {
        let cfg = RunConfig { scenario: Some("pole-graph".into()), ..Default::default() };
        assert_eq!(cfg.lattice().unwrap().len(), 41);
        cfg.curve().unwrap();
        cfg.function().unwrap();
        assert!(RunConfig::default().curve().is_err());
    }

    #[test]
    fn command_line_numbers() {
        assert_eq!(parse_complex("2").unwrap(), [2.0, 0.0]);
        assert_eq!(parse_complex("1, -3").unwrap(), [1.0, -3.0]);
        assert!(parse_complex("1,2,3").is_err());
        assert_eq!(parse_disk("0,0,1.5").unwrap(), [0.0, 0.0, 1.5]);
        assert!(parse_disk("0,1").is_err());
    }
}
