//! Shared inputs for the benchmarks.

use hartogs::expr::{parse_curve, ExprFunction};
use hartogs::AlgebraicCurve;

pub fn curve(text: &str) -> AlgebraicCurve {
    AlgebraicCurve::new(parse_curve(text).expect("valid curve")).expect("nondegenerate curve")
}

pub fn function(text: &str) -> ExprFunction {
    ExprFunction::parse(text).expect("valid function")
}
