//! Built-in scenarios and oracle functions. Names and parameters are
//! versioned: acceptance runs pin to `(id, version)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::Verdict;
use crate::error::{Error, Result};
use crate::expr::{parse_curve, ExprFunction};
use crate::hartogs::ZLattice;
use crate::polycurve::AlgebraicCurve;

pub const CORPUS_VERSION: u32 = 1;

/// Parameter grid description, as used in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    Line { start: f64, step: f64, n: usize },
    Square { center: [f64; 2], half: f64, n: usize },
}

impl GridSpec {
    pub fn lattice(&self) -> Result<ZLattice> {
        match *self {
            GridSpec::Line { start, step, n } => ZLattice::real_line(start, step, n),
            GridSpec::Square { center, half, n } => ZLattice::square(Complex64::new(center[0], center[1]), half, n),
        }
    }
}

/// Prescribed fibers replacing the computed ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    /// `S_z = {2 + |z|}`: continuous, not holomorphic in `z`.
    ModulusShift,
}

impl Injection {
    pub fn fibers(&self, z: &[Complex64]) -> Vec<Complex64> {
        match self {
            Injection::ModulusShift => vec![Complex64::new(2.0 + z[0].norm(), 0.0)],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub id: &'static str,
    pub version: u32,
    pub summary: &'static str,
    pub curve: &'static str,
    pub function: &'static str,
    pub grid: GridSpec,
    pub injection: Option<Injection>,
    /// The verdict the scenario is built to produce.
    pub expected: Verdict,
}

impl Scenario {
    pub fn curve(&self) -> Result<AlgebraicCurve> {
        AlgebraicCurve::new(parse_curve(self.curve)?)
    }

    pub fn function(&self) -> Result<ExprFunction> {
        ExprFunction::parse(self.function)
    }

    pub fn lattice(&self) -> Result<ZLattice> {
        self.grid.lattice()
    }
}

const POLE_GRID: GridSpec = GridSpec::Line { start: -0.5, step: 0.025, n: 41 };

pub fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            id: "pole-graph",
            version: 1,
            summary: "identity curve, pole sheet w = 2 + z",
            curve: "eta - xi",
            function: "1/(w - (2 + z))",
            grid: POLE_GRID,
            injection: None,
            expected: Verdict::ConsistentWithAnalytic,
        },
        Scenario {
            id: "entire",
            version: 1,
            summary: "entire in w, no singular set",
            curve: "eta - xi",
            function: "exp(w) * (1 + z)",
            grid: POLE_GRID,
            injection: None,
            expected: Verdict::ConsistentWithAnalytic,
        },
        Scenario {
            id: "reducible",
            version: 1,
            summary: "curve splitting into two lines",
            curve: "eta^2 - xi^2",
            function: "1/(eta - 2)",
            grid: POLE_GRID,
            injection: None,
            expected: Verdict::HypothesesUnmet,
        },
        Scenario {
            id: "synthetic-nonholomorphic",
            version: 1,
            summary: "fibers {2 + |z|} injected after continuation",
            curve: "eta - xi",
            function: "1/(w - 2)",
            grid: POLE_GRID,
            injection: Some(Injection::ModulusShift),
            expected: Verdict::Negative,
        },
        Scenario {
            id: "two-pole",
            version: 1,
            summary: "two fixed poles, fiber size 2; the gap lemniscate stops at its saddle level",
            curve: "eta - xi",
            function: "1/((w - 2)*(w - 3*i)) + z",
            grid: GridSpec::Line { start: -0.5, step: 0.05, n: 21 },
            injection: None,
            expected: Verdict::InsufficientCoverage,
        },
        Scenario {
            id: "sqrt-fiber",
            version: 1,
            summary: "two-sheeted curve, pole on one sheet over xi = (1.5 + z)^2",
            curve: "eta^2 - xi",
            function: "1/(eta - (1.5 + z))",
            grid: GridSpec::Line { start: -0.25, step: 0.025, n: 21 },
            injection: None,
            expected: Verdict::InsufficientCoverage,
        },
    ]
}

pub fn scenario(id: &str) -> Result<Scenario> {
    scenarios()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Precondition(format!("unknown scenario `{id}`")))
}

/// A one-variable function on the graph `eta = xi^2` whose expansion in
/// powers of `g = zeta` is its Taylor series.
#[derive(Clone, Debug, Serialize)]
pub struct TaylorCase {
    pub id: &'static str,
    pub version: u32,
    pub function: &'static str,
    /// Radius of convergence of the Taylor series (infinite for `exp`).
    pub radius: f64,
    /// Level of the expansion lemniscate `|zeta| < level`.
    pub level: f64,
}

impl TaylorCase {
    /// The oracle `k`-th Taylor coefficient.
    pub fn coefficient(&self, k: usize) -> f64 {
        if self.radius.is_infinite() {
            (1..=k).fold(1.0, |acc, j| acc / j as f64)
        } else {
            self.radius.powi(-(k as i32))
        }
    }
}

pub const TAYLOR_CURVE: &str = "eta - xi^2";

pub fn taylor_cases() -> Vec<TaylorCase> {
    vec![
        TaylorCase { id: "geometric", version: 1, function: "1/(1 - xi)", radius: 1.0, level: 0.9 },
        TaylorCase { id: "exp", version: 1, function: "exp(xi)", radius: f64::INFINITY, level: 1.0 },
        TaylorCase { id: "pole-0.8", version: 1, function: "1/(1 - xi/0.8)", radius: 0.8, level: 0.72 },
        TaylorCase { id: "pole-2", version: 1, function: "1/(1 - xi/2)", radius: 2.0, level: 1.8 },
        TaylorCase { id: "pole-5", version: 1, function: "1/(1 - xi/5)", radius: 5.0, level: 4.5 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::CurvePoint;
    use crate::FiberFunction;

    #[test]
    fn scenarios_parse() {
        let mut ids: Vec<_> = scenarios().iter().map(|s| s.id).collect();
        for s in scenarios() {
            s.curve().unwrap();
            s.lattice().unwrap();
            s.function().unwrap();
        }
        ids.dedup();
        assert_eq!(ids.len(), scenarios().len());
        assert!(scenario("nope").is_err());
    }

    #[test]
    fn taylor_functions_match_their_oracles_at_small_argument() {
        let x = Complex64::new(0.05, 0.02);
        let w = CurvePoint::new(x, x * x);
        for case in taylor_cases() {
            let f = ExprFunction::parse(case.function).unwrap();
            let series: Complex64 = (0..40).map(|k| case.coefficient(k) * x.powi(k as i32)).sum();
            assert!((f.eval(&[], &w) - series).norm() < 1e-14, "{}", case.id);
        }
    }

    #[test]
    fn grid_spec_round_trips() {
        let g = GridSpec::Square { center: [0.0, 1.0], half: 0.5, n: 5 };
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GridSpec>(&s).unwrap(), g);
        assert_eq!(g.lattice().unwrap().len(), 25);
    }
}
