use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::upoly::UPoly;

/// `P(xi, eta) = sum c_ij xi^i eta^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariatePolynomial {
    coeffs: BTreeMap<(u32, u32), Complex64>,
    deg_xi: u32,
    deg_eta: u32,
    // rows[j][i] = c_ij, dense copy for Horner evaluation
    rows: Vec<Vec<Complex64>>,
}

impl BivariatePolynomial {
    pub fn new<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((u32, u32), Complex64)>,
    {
        let mut coeffs = BTreeMap::new();
        for (key, c) in terms {
            *coeffs.entry(key).or_insert_with(Complex64::zero) += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        if coeffs.is_empty() {
            return Err(Error::DegeneratePolynomial("all coefficients vanish".into()));
        }
        for c in coeffs.values() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::DegeneratePolynomial("non-finite coefficient".into()));
            }
        }
        let deg_xi = coeffs.keys().map(|k| k.0).max().unwrap();
        let deg_eta = coeffs.keys().map(|k| k.1).max().unwrap();
        let mut rows = vec![vec![Complex64::zero(); deg_xi as usize + 1]; deg_eta as usize + 1];
        for (&(i, j), &c) in &coeffs {
            rows[j as usize][i as usize] = c;
        }
        Ok(BivariatePolynomial { coeffs, deg_xi, deg_eta, rows })
    }

    /// Convenience constructor from real coefficients.
    pub fn from_real_terms(terms: &[(u32, u32, f64)]) -> Result<Self> {
        Self::new(terms.iter().map(|&(i, j, c)| ((i, j), Complex64::new(c, 0.0))))
    }

    pub fn coeffs(&self) -> &BTreeMap<(u32, u32), Complex64> {
        &self.coeffs
    }

    pub fn deg_xi(&self) -> u32 {
        self.deg_xi
    }

    pub fn deg_eta(&self) -> u32 {
        self.deg_eta
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Coefficients of `P(xi, .)` as a polynomial in eta, ascending.
    pub fn eta_coeffs(&self, xi: Complex64) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().rev().fold(Complex64::zero(), |acc, &c| acc * xi + c))
            .collect()
    }

    /// Coefficients of `dP/dxi (xi, .)` as a polynomial in eta.
    pub fn eta_coeffs_dxi(&self, xi: Complex64) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| {
                let mut p = Complex64::zero();
                let mut dp = Complex64::zero();
                for &c in row.iter().rev() {
                    dp = dp * xi + p;
                    p = p * xi + c;
                }
                dp
            })
            .collect()
    }

    pub fn eta_poly(&self, xi: Complex64) -> UPoly {
        UPoly::new(self.eta_coeffs(xi))
    }

    /// Coefficient of `eta^j` as a polynomial in xi.
    pub fn eta_row(&self, j: usize) -> UPoly {
        UPoly::new(self.rows[j].clone())
    }

    pub fn eval(&self, xi: Complex64, eta: Complex64) -> Complex64 {
        self.eta_coeffs(xi)
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * eta + c)
    }

    /// `(P, dP/dxi, dP/deta)` at a point.
    pub fn eval_with_gradient(&self, xi: Complex64, eta: Complex64) -> (Complex64, Complex64, Complex64) {
        let a = self.eta_coeffs(xi);
        let da = self.eta_coeffs_dxi(xi);
        let mut p = Complex64::zero();
        let mut p_eta = Complex64::zero();
        let mut p_xi = Complex64::zero();
        for j in (0..a.len()).rev() {
            p_eta = p_eta * eta + p;
            p = p * eta + a[j];
            p_xi = p_xi * eta + da[j];
        }
        (p, p_xi, p_eta)
    }

    pub fn d_eta(&self) -> Option<BivariatePolynomial> {
        let terms: Vec<_> = self
            .coeffs
            .iter()
            .filter(|(&(_, j), _)| j > 0)
            .map(|(&(i, j), &c)| ((i, j - 1), c * j as f64))
            .collect();
        BivariatePolynomial::new(terms).ok()
    }

    /// Linear change of coordinates `P(xi + t*eta, eta)`, used when the
    /// leading eta-coefficient vanishes somewhere and a different projection
    /// direction is wanted.
    pub fn pre_rotate(&self, t: Complex64) -> Result<BivariatePolynomial> {
        let mut out: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        for (&(i, j), &c) in &self.coeffs {
            // (xi + t eta)^i eta^j = sum_l binom(i,l) xi^(i-l) t^l eta^(l+j)
            let mut binom = 1.0;
            for l in 0..=i {
                let term = c * binom * t.powu(l);
                *out.entry((i - l, j + l)).or_insert_with(Complex64::zero) += term;
                binom = binom * (i - l) as f64 / (l + 1) as f64;
            }
        }
        BivariatePolynomial::new(out)
    }

    /// Parses the line-oriented curve format: each non-comment line holds
    /// `i j re im`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected `i j re im`, found {} fields",
                    lineno + 1,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: invalid {what}", lineno + 1));
            let i: u32 = fields[0].parse().map_err(|_| bad("xi exponent"))?;
            let j: u32 = fields[1].parse().map_err(|_| bad("eta exponent"))?;
            let re: f64 = fields[2].parse().map_err(|_| bad("real part"))?;
            let im: f64 = fields[3].parse().map_err(|_| bad("imaginary part"))?;
            terms.push(((i, j), Complex64::new(re, im)));
        }
        if terms.is_empty() {
            return Err(Error::Parse("no monomials".into()));
        }
        Self::new(terms).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# i j re im\n");
        for (&(i, j), c) in &self.coeffs {
            writeln!(s, "{i} {j} {:.16e} {:.16e}", c.re, c.im).unwrap();
        }
        s
    }
}

/// A point `(xi, eta)` of the curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub xi: Complex64,
    pub eta: Complex64,
}

impl CurvePoint {
    pub fn new(xi: Complex64, eta: Complex64) -> Self {
        CurvePoint { xi, eta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Irreducibility {
    Yes,
    No,
    Undetermined,
}

impl std::fmt::Display for Irreducibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Irreducibility::Yes => "yes",
            Irreducibility::No => "no",
            Irreducibility::Undetermined => "undetermined",
        })
    }
}

/// The curve `{P = 0}` viewed as a ramified covering of the xi-line.
#[derive(Clone, Debug)]
pub struct AlgebraicCurve {
    pub poly: BivariatePolynomial,
    pub eta_degree: usize,
    pub critical_xi: Vec<Complex64>,
    pub irreducible: Irreducibility,
}

/// Local inverse of the projection near a regular base point.
#[derive(Clone, Debug)]
pub struct BranchChart {
    pub base_point: Complex64,
    pub sheet_values: Vec<Complex64>,
    pub radius_of_validity: f64,
}

impl AlgebraicCurve {
    /// Builds the curve and its critical values. Irreducibility is left
    /// undetermined until [`AlgebraicCurve::with_monodromy`] is called.
    pub fn new(poly: BivariatePolynomial) -> Result<Self> {
        if poly.deg_eta() == 0 {
            return Err(Error::DegeneratePolynomial("polynomial does not depend on eta".into()));
        }
        let critical_xi = super::critical::critical_points_of(&poly)?;
        Ok(AlgebraicCurve {
            eta_degree: poly.deg_eta() as usize,
            poly,
            critical_xi,
            irreducible: Irreducibility::Undetermined,
        })
    }

    pub fn with_monodromy(mut self) -> Self {
        self.irreducible = super::monodromy::monodromy_irreducible(&self);
        self
    }

    /// The graph `eta = xi`, the simplest single-sheeted curve.
    pub fn identity_graph() -> Self {
        let p = BivariatePolynomial::from_real_terms(&[(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        let mut c = AlgebraicCurve::new(p).unwrap();
        c.irreducible = Irreducibility::Yes;
        c
    }

    pub fn coefficient_scale(&self) -> f64 {
        1.0 + self.poly.max_norm()
    }

    /// Scale of the critical set used for relative tolerances.
    pub fn critical_scale(&self) -> f64 {
        self.critical_xi.iter().map(|c| c.norm()).fold(1.0, f64::max)
    }

    pub fn distance_to_critical(&self, xi: Complex64) -> f64 {
        self.critical_xi
            .iter()
            .map(|c| (c - xi).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Residual of `P` at a point, relative to the coefficient scale.
    pub fn relative_residual(&self, pt: &CurvePoint) -> f64 {
        self.poly.eval(pt.xi, pt.eta).norm() / self.coefficient_scale()
    }

    pub fn branches_at(&self, xi: Complex64) -> Result<BranchChart> {
        let dist = self.distance_to_critical(xi);
        if dist <= 1e-8 * self.critical_scale() {
            return Err(Error::AtCriticalPoint { xi });
        }
        let mut sheets = self.sheet_values(xi)?;
        sheets.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(BranchChart { base_point: xi, sheet_values: sheets, radius_of_validity: dist })
    }

    /// All eta-roots over `xi`, unsorted.
    pub(crate) fn sheet_values(&self, xi: Complex64) -> Result<Vec<Complex64>> {
        let p = UPoly { coeffs: self.poly.eta_coeffs(xi) };
        if p.coeffs.last().is_some_and(|c| c.is_zero()) {
            return Err(Error::AtCriticalPoint { xi });
        }
        if self.eta_degree == 1 {
            return Ok(vec![-p.coeffs[0] / p.coeffs[1]]);
        }
        let roots = p.roots()?;
        let tol = 1e-9 * self.coefficient_scale();
        for &r in &roots {
            if self.poly.eval(xi, r).norm() > tol * (1.0 + r.norm()).powi(self.eta_degree as i32) {
                return Err(Error::RootSolverDivergence { residual: self.poly.eval(xi, r).norm() });
            }
        }
        Ok(roots)
    }

    /// Points of the curve over `xi`, one per sheet, in sheet order.
    pub fn fiber(&self, xi: Complex64) -> Result<Vec<CurvePoint>> {
        Ok(self
            .branches_at(xi)?
            .sheet_values
            .into_iter()
            .map(|eta| CurvePoint::new(xi, eta))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sqrt_curve() -> BivariatePolynomial {
        BivariatePolynomial::from_real_terms(&[(0, 2, 1.0), (1, 0, -1.0)]).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let p = sqrt_curve();
        assert_eq!(p.eval(c(4.0, 0.0), c(2.0, 0.0)), c(0.0, 0.0));
        assert_eq!(p.eval(c(0.0, 0.0), c(1.0, 0.0)), c(1.0, 0.0));
        let hyperbola = BivariatePolynomial::from_real_terms(&[(1, 1, 1.0), (0, 0, -1.0)]).unwrap();
        assert_eq!(hyperbola.eval(c(2.0, 0.0), c(0.5, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = BivariatePolynomial::from_real_terms(&[(2, 3, 1.5), (1, 1, -2.0), (0, 2, 0.5), (3, 0, 1.0)]).unwrap();
        let (xi, eta) = (c(0.3, 0.2), c(-0.4, 0.9));
        let (_, px, pe) = p.eval_with_gradient(xi, eta);
        let h = 1e-6;
        let fx = (p.eval(xi + h, eta) - p.eval(xi - h, eta)) / (2.0 * h);
        let fe = (p.eval(xi, eta + h) - p.eval(xi, eta - h)) / (2.0 * h);
        assert!((px - fx).norm() < 1e-8);
        assert!((pe - fe).norm() < 1e-8);
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        assert!(matches!(
            BivariatePolynomial::from_real_terms(&[(1, 1, 0.0)]),
            Err(Error::DegeneratePolynomial(_))
        ));
        let flat = BivariatePolynomial::from_real_terms(&[(2, 0, 1.0)]).unwrap();
        assert!(matches!(AlgebraicCurve::new(flat), Err(Error::DegeneratePolynomial(_))));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = BivariatePolynomial::new(vec![
            ((0, 2), c(1.0 / 3.0, -0.1)),
            ((3, 1), c(std::f64::consts::PI, 1e-300)),
            ((1, 0), c(-7.0, 0.0)),
        ])
        .unwrap();
        let q = BivariatePolynomial::parse(&p.to_text()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(matches!(BivariatePolynomial::parse("0 2 1.0"), Err(Error::Parse(_))));
        assert!(matches!(BivariatePolynomial::parse("a 2 1.0 0"), Err(Error::Parse(_))));
        assert!(matches!(BivariatePolynomial::parse("# nothing\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn branch_examples() {
        let curve = AlgebraicCurve::new(sqrt_curve()).unwrap();
        let chart = curve.branches_at(c(4.0, 0.0)).unwrap();
        assert!((chart.sheet_values[0] - c(-2.0, 0.0)).norm() < 1e-14);
        assert!((chart.sheet_values[1] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((chart.radius_of_validity - 4.0).abs() < 1e-6);
        let chart = curve.branches_at(c(-1.0, 0.0)).unwrap();
        assert!((chart.sheet_values[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((chart.sheet_values[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(matches!(curve.branches_at(c(0.0, 0.0)), Err(Error::AtCriticalPoint { .. })));

        let graph = AlgebraicCurve::new(
            BivariatePolynomial::from_real_terms(&[(0, 1, 1.0), (2, 0, -1.0)]).unwrap(),
        )
        .unwrap();
        let chart = graph.branches_at(c(3.0, 0.0)).unwrap();
        assert_eq!(chart.sheet_values, vec![c(9.0, 0.0)]);
        assert!(chart.radius_of_validity.is_infinite());
    }

    #[test]
    fn pre_rotation_substitutes_linearly() {
        let p = BivariatePolynomial::from_real_terms(&[(1, 1, 1.0), (0, 0, -1.0)]).unwrap();
        let t = c(0.5, 0.25);
        let q = p.pre_rotate(t).unwrap();
        let (xi, eta) = (c(0.7, -0.2), c(1.1, 0.4));
        assert!((q.eval(xi, eta) - p.eval(xi + t * eta, eta)).norm() < 1e-14);
        // xi*eta - 1 has a vanishing leading eta-coefficient at xi = 0; the
        // rotated polynomial has a constant one.
        assert_eq!(q.deg_eta(), 2);
        assert_eq!(q.eta_row(2).degree(), 0);
    }
}
