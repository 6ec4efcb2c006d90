use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use super::curve::{AlgebraicCurve, BivariatePolynomial};
use crate::error::{Error, Result};
use crate::upoly::{cluster_points, UPoly};

/// Critical values are only resolved to about the square root of machine
/// precision when they are multiple roots of the discriminant, so they are
/// merged at this relative distance.
pub const CRITICAL_CLUSTER_TOL: f64 = 1e-6;

pub fn critical_points(curve: &AlgebraicCurve) -> Vec<Complex64> {
    curve.critical_xi.clone()
}

/// Roots of `Res_eta(P, dP/deta)` together with the zeros of the leading
/// eta-coefficient.
pub(crate) fn critical_points_of(poly: &BivariatePolynomial) -> Result<Vec<Complex64>> {
    let d = poly.deg_eta() as usize;
    if d == 0 {
        return Err(Error::DegeneratePolynomial("polynomial does not depend on eta".into()));
    }
    let mut points = poly.eta_row(d).roots()?;
    if d >= 2 {
        let res = discriminant_poly(poly)?;
        points.extend(res.roots()?);
    }
    let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut merged = cluster_points(&points, CRITICAL_CLUSTER_TOL * scale);
    merged.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(merged)
}

/// The resultant `Res_eta(P, dP/deta)` as a polynomial in xi, recovered from
/// Sylvester determinants on roots of unity.
fn discriminant_poly(poly: &BivariatePolynomial) -> Result<UPoly> {
    let d = poly.deg_eta() as usize;
    let n = (2 * d - 1) * poly.deg_xi() as usize + 1;
    let mut values = Vec::with_capacity(n);
    let mut hadamard: f64 = 0.0;
    for j in 0..n {
        let xi = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
        let a = poly.eta_coeffs(xi);
        let da: Vec<Complex64> = (1..=d).map(|k| a[k] * k as f64).collect();
        let m = sylvester(&a, &da);
        let bound: f64 = m
            .row_iter()
            .map(|r| r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .product();
        hadamard = hadamard.max(bound);
        values.push(m.determinant());
    }
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak <= 1e-13 * hadamard {
        return Err(Error::DegeneratePolynomial(
            "resultant vanishes identically (repeated factor)".into(),
        ));
    }
    let coeffs: Vec<Complex64> = (0..n)
        .map(|k| {
            let mut s = Complex64::zero();
            for (j, v) in values.iter().enumerate() {
                let angle = -std::f64::consts::TAU * ((j * k) % n) as f64 / n as f64;
                s += v * Complex64::from_polar(1.0, angle);
            }
            s / n as f64
        })
        .collect();
    Ok(UPoly::new(coeffs).trimmed(1e-11))
}

/// Sylvester matrix of two polynomials given by ascending coefficients.
fn sylvester(f: &[Complex64], g: &[Complex64]) -> DMatrix<Complex64> {
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    let mut s = DMatrix::from_element(size, size, Complex64::zero());
    for row in 0..n {
        for (k, &c) in f.iter().rev().enumerate() {
            s[(row, row + k)] = c;
        }
    }
    for row in 0..m {
        for (k, &c) in g.iter().rev().enumerate() {
            s[(n + row, row + k)] = c;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(terms: &[(u32, u32, f64)]) -> AlgebraicCurve {
        AlgebraicCurve::new(BivariatePolynomial::from_real_terms(terms).unwrap()).unwrap()
    }

    fn close(found: &[Complex64], expected: &[(f64, f64)]) -> bool {
        found.len() == expected.len()
            && found
                .iter()
                .zip(expected)
                .all(|(a, &(re, im))| (a - Complex64::new(re, im)).norm() < 1e-7)
    }

    #[test]
    fn sqrt_curve_has_one_branch_point() {
        let c = curve(&[(0, 2, 1.0), (1, 0, -1.0)]);
        assert!(close(&critical_points(&c), &[(0.0, 0.0)]));
    }

    #[test]
    fn graph_has_no_critical_points() {
        let c = curve(&[(0, 1, 1.0), (2, 0, -1.0)]);
        assert!(critical_points(&c).is_empty());
    }

    #[test]
    fn two_branch_points() {
        // eta^2 - xi^2 + xi
        let c = curve(&[(0, 2, 1.0), (2, 0, -1.0), (1, 0, 1.0)]);
        assert!(close(&critical_points(&c), &[(0.0, 0.0), (1.0, 0.0)]));
    }

    #[test]
    fn node_is_found_once() {
        // eta^2 - xi^2: the discriminant has a double root at 0
        let c = curve(&[(0, 2, 1.0), (2, 0, -1.0)]);
        assert!(close(&critical_points(&c), &[(0.0, 0.0)]));
    }

    #[test]
    fn vanishing_leading_coefficient_counts() {
        // xi*eta - 1: the sheet escapes to infinity over xi = 0
        let c = curve(&[(1, 1, 1.0), (0, 0, -1.0)]);
        assert!(close(&critical_points(&c), &[(0.0, 0.0)]));
    }

    #[test]
    fn cubic_fold_points() {
        // eta^3 - 3 eta - xi: folds where eta = +-1, i.e. xi = -+2
        let c = curve(&[(0, 3, 1.0), (0, 1, -3.0), (1, 0, -1.0)]);
        assert!(close(&critical_points(&c), &[(-2.0, 0.0), (2.0, 0.0)]));
    }

    #[test]
    fn squared_factor_is_degenerate() {
        // (eta - xi)^2
        let p = BivariatePolynomial::from_real_terms(&[(0, 2, 1.0), (1, 1, -2.0), (2, 0, 1.0)]).unwrap();
        assert!(matches!(AlgebraicCurve::new(p), Err(Error::DegeneratePolynomial(_))));
    }

    #[test]
    fn discriminant_vanishes_at_each_critical_point() {
        let p = BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (1, 1, -2.0), (3, 0, 1.0), (0, 0, 0.5)]).unwrap();
        let c = AlgebraicCurve::new(p.clone()).unwrap();
        assert_eq!(c.critical_xi.len(), 6);
        let disc = discriminant_poly(&p).unwrap();
        for &x in &c.critical_xi {
            let scale: f64 = disc.coeffs.iter().map(|a| a.norm()).sum::<f64>() * (1.0 + x.norm()).powi(6);
            assert!(disc.eval(x).norm() < 1e-9 * scale);
        }
    }
}
