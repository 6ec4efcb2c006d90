use num_complex::Complex64;

use crate::polycurve::CurvePoint;

/// A function `f(z, w)` of a parameter vector `z` and a point `w` on the curve.
pub trait FiberFunction: Sync {
    fn eval(&self, z: &[Complex64], w: &CurvePoint) -> Complex64;
}

impl<F> FiberFunction for F
where
    F: Fn(&[Complex64], &CurvePoint) -> Complex64 + Sync,
{
    fn eval(&self, z: &[Complex64], w: &CurvePoint) -> Complex64 {
        self(z, w)
    }
}
