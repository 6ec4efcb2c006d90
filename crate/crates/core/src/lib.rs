//! Numerical analytic continuation of functions living on an algebraic curve.
//!
//! A function `f(z, w)`, holomorphic for `z` in a parameter domain and `w`
//! near a piece of a plane curve `P(xi, eta) = 0`, is expanded in powers of
//! `g(pi(w))` for rational functions `g` whose only zero sits at the origin.
//! The union of the convergence domains of these expansions gives the
//! continuation; whatever is never covered is the candidate singular set,
//! which is then examined fiber by fiber.
//!
//! The crate is organised bottom-up:
//!
//! * [`polycurve`]: curves, critical values, branch tracking, monodromy.
//! * [`lemniscate`]: rational functions, certified lemniscate components,
//!   boundary contours and the lemniscate constructor.
//! * [`hartogs`]: expansion coefficients, series evaluation, radii of
//!   convergence and the subharmonicity check.
//! * [`singular`]: capacity, Weierstrass fits and the Laurent probe.
//! * [`engine`]: atlas assembly and the end-to-end pipeline.

pub mod corpus;
pub mod engine;
pub mod error;
pub mod expr;
pub mod fiber;
pub mod hartogs;
pub mod io;
pub mod lemniscate;
pub mod polycurve;
pub mod singular;
pub mod upoly;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use fiber::FiberFunction;
pub use polycurve::{AlgebraicCurve, BivariatePolynomial, BranchChart, CurvePoint, Irreducibility};
pub use upoly::UPoly;
