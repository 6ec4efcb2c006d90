use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::upoly::UPoly;

/// Gaussian rational `re + im i` with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        GaussRational::new(BigRational::from_integer(re.into()), BigRational::from_integer(im.into()))
    }

    pub fn real(re: BigRational) -> Self {
        GaussRational::new(re, BigRational::zero())
    }

    pub fn zero() -> Self {
        Self::from_ints(0, 0)
    }

    pub fn one() -> Self {
        Self::from_ints(1, 0)
    }

    /// `2^exp` for any integer exponent.
    pub fn power_of_two(exp: i32) -> Self {
        let p = BigInt::one() << exp.unsigned_abs();
        let r = if exp >= 0 { BigRational::from_integer(p) } else { BigRational::new(BigInt::one(), p) };
        GaussRational::real(r)
    }

    /// Nearest Gaussian rational with denominator `2^bits` in each part.
    pub fn dyadic(z: Complex64, bits: u32) -> Self {
        let scale = (1u64 << bits) as f64;
        let den = BigInt::one() << bits;
        let part = |x: f64| BigRational::new(BigInt::from((x * scale).round() as i64), den.clone());
        GaussRational::new(part(z.re), part(z.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }

    pub fn add(&self, o: &Self) -> Self {
        GaussRational::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        GaussRational::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &Self) -> Self {
        GaussRational::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }

    pub fn div(&self, o: &Self) -> Self {
        let den = &o.re * &o.re + &o.im * &o.im;
        let re = (&self.re * &o.re + &self.im * &o.im) / &den;
        let im = (&self.im * &o.re - &self.re * &o.im) / &den;
        GaussRational::new(re, im)
    }

    pub fn neg(&self) -> Self {
        GaussRational::new(-&self.re, -&self.im)
    }

    /// Largest numerator or denominator modulus appearing in either part.
    pub fn height(&self) -> BigInt {
        let h = |r: &BigRational| r.numer().abs().max(r.denom().abs());
        h(&self.re).max(h(&self.im))
    }

    /// Deterministic total order: height first, then real before non-real,
    /// positive before negative, then magnitude.
    pub fn cmp_key(&self, o: &Self) -> Ordering {
        self.height()
            .cmp(&o.height())
            .then((!self.im.is_zero()).cmp(&!o.im.is_zero()))
            .then(self.re.is_negative().cmp(&o.re.is_negative()))
            .then(self.im.is_negative().cmp(&o.im.is_negative()))
            .then(self.re.abs().cmp(&o.re.abs()))
            .then(self.im.abs().cmp(&o.im.abs()))
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.im.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{} i", self.re, sign, self.im.abs())
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl FromStr for GaussRational {
    type Err = Error;

    /// Accepts `p/q`, `p/q+r/s i`, `p/q-r/s i` and `r/s i`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid Gaussian rational `{s}`"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(body) = t.strip_suffix('i') else {
            return Ok(GaussRational::real(parse_rational(&t).ok_or_else(bad)?));
        };
        // split at the last sign that is not the leading one
        let split = body
            .char_indices()
            .filter(|&(k, ch)| k > 0 && (ch == '+' || ch == '-'))
            .map(|(k, _)| k)
            .next_back();
        let (re, im) = match split {
            Some(k) => (parse_rational(&body[..k]).ok_or_else(bad)?, {
                let im_str = &body[k..];
                let im_str = im_str.strip_prefix('+').unwrap_or(im_str);
                match im_str {
                    "" | "-" => return Err(bad()),
                    _ => parse_rational(im_str).ok_or_else(bad)?,
                }
            }),
            None => (BigRational::zero(), parse_rational(body).ok_or_else(bad)?),
        };
        Ok(GaussRational::new(re, im))
    }
}

/// `g(zeta) = c zeta^m / D(zeta)` with `D(0) != 0` and exact Gaussian
/// rational coefficients, so `g(0) = 0` is the only zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    scale: GaussRational,
    zero_order: u32,
    denominator: Vec<GaussRational>,
    scale_f: Complex64,
    den_f: UPoly,
}

/// Exact-fraction serialization of a [`RationalFunction`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSpec {
    pub scale: String,
    pub zero_order: u32,
    pub denominator: Vec<String>,
}

impl RationalFunction {
    pub fn new(scale: GaussRational, zero_order: u32, denominator: Vec<GaussRational>) -> Result<Self> {
        if zero_order == 0 {
            return Err(Error::Precondition("zero order at the origin must be at least 1".into()));
        }
        if scale.is_zero() {
            return Err(Error::Precondition("scale constant must be nonzero".into()));
        }
        let mut denominator = denominator;
        while denominator.len() > 1 && denominator.last().unwrap().is_zero() {
            denominator.pop();
        }
        if denominator.first().is_none_or(|d| d.is_zero()) {
            return Err(Error::Precondition("denominator must not vanish at 0".into()));
        }
        let den_f = UPoly::new(denominator.iter().map(|d| d.to_c64()).collect());
        Ok(RationalFunction { scale_f: scale.to_c64(), scale, zero_order, denominator, den_f })
    }

    /// `g(zeta) = zeta`.
    pub fn identity() -> Self {
        Self::new(GaussRational::one(), 1, vec![GaussRational::one()]).unwrap()
    }

    /// `c zeta^m / prod (zeta - sigma_j)^{m_j}` with a monic denominator.
    pub fn from_poles(scale: GaussRational, zero_order: u32, poles: &[(GaussRational, u32)]) -> Result<Self> {
        let mut den = vec![GaussRational::one()];
        for (sigma, mult) in poles {
            for _ in 0..*mult {
                // multiply by (zeta - sigma)
                let mut next = vec![GaussRational::zero(); den.len() + 1];
                for (k, d) in den.iter().enumerate() {
                    next[k + 1] = next[k + 1].add(d);
                    next[k] = next[k].sub(&d.mul(sigma));
                }
                den = next;
            }
        }
        Self::new(scale, zero_order, den)
    }

    pub fn scale(&self) -> &GaussRational {
        &self.scale
    }

    pub fn zero_order(&self) -> u32 {
        self.zero_order
    }

    pub fn denominator(&self) -> &[GaussRational] {
        &self.denominator
    }

    /// Numerator coefficients `c zeta^m`, ascending.
    pub fn numerator(&self) -> Vec<GaussRational> {
        let mut v = vec![GaussRational::zero(); self.zero_order as usize + 1];
        v[self.zero_order as usize] = self.scale.clone();
        v
    }

    pub fn scale_f64(&self) -> Complex64 {
        self.scale_f
    }

    pub fn denominator_f64(&self) -> &UPoly {
        &self.den_f
    }

    pub fn degree(&self) -> usize {
        (self.zero_order as usize).max(self.den_f.degree())
    }

    /// Same function with `D(0) = 1`; equal functions get equal forms.
    pub fn normalized(&self) -> Self {
        let d0 = self.denominator[0].clone();
        let den = self.denominator.iter().map(|d| d.div(&d0)).collect();
        Self::new(self.scale.div(&d0), self.zero_order, den).unwrap()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den_f.roots().unwrap_or_default()
    }

    pub fn eval(&self, zeta: Complex64) -> Result<Complex64> {
        let d = self.den_f.eval(zeta);
        let r = zeta.norm();
        let mag: f64 = self.den_f.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
        if d.norm() <= 1e-14 * mag {
            return Err(Error::PoleHit(zeta));
        }
        Ok(self.scale_f * zeta.powu(self.zero_order) / d)
    }

    /// `g` without the pole check; infinite or NaN at poles.
    pub fn eval_unchecked(&self, zeta: Complex64) -> Complex64 {
        self.scale_f * zeta.powu(self.zero_order) / self.den_f.eval(zeta)
    }

    /// `(g, g')` at a point.
    pub fn eval_with_derivative(&self, zeta: Complex64) -> (Complex64, Complex64) {
        let (d, dd) = self.den_f.eval_with_derivative(zeta);
        let m = self.zero_order as i32;
        let num = self.scale_f * zeta.powi(m);
        let dnum = if m == 0 { Complex64::zero() } else { self.scale_f * zeta.powi(m - 1) * m as f64 };
        (num / d, (dnum * d - num * dd) / (d * d))
    }

    /// Zeros of `g'` away from the origin.
    pub fn critical_points(&self) -> Vec<Complex64> {
        // g' ~ zeta^{m-1} (m D - zeta D')
        let d = &self.den_f;
        let dd = d.derivative();
        let n = d.coeffs.len().max(dd.coeffs.len() + 1);
        let mut coeffs = vec![Complex64::zero(); n];
        for (k, c) in d.coeffs.iter().enumerate() {
            coeffs[k] += c * self.zero_order as f64;
        }
        for (k, c) in dd.coeffs.iter().enumerate() {
            coeffs[k + 1] -= c;
        }
        let p = UPoly::new(coeffs);
        if p.is_zero() {
            return Vec::new();
        }
        p.roots().unwrap_or_default()
    }

    pub fn to_spec(&self) -> RationalSpec {
        RationalSpec {
            scale: self.scale.to_string(),
            zero_order: self.zero_order,
            denominator: self.denominator.iter().map(|d| d.to_string()).collect(),
        }
    }

    pub fn from_spec(spec: &RationalSpec) -> Result<Self> {
        let scale = spec.scale.parse()?;
        let den = spec.denominator.iter().map(|d| d.parse()).collect::<Result<Vec<_>>>()?;
        Self::new(scale, spec.zero_order, den)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) z^{} / (", self.scale, self.zero_order)?;
        for (k, d) in self.denominator.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({d}) z^{k}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(s: &str) -> GaussRational {
        s.parse().unwrap()
    }

    #[test]
    fn gauss_rational_strings_round_trip() {
        for s in ["1/2+3/4 i", "-5/3-1/7 i", "0+1 i", "7+0 i", "-2/9+0 i"] {
            assert_eq!(q(s).to_string(), s);
            assert_eq!(q(&q(s).to_string()), q(s));
        }
        assert_eq!(q("3/4"), GaussRational::new(BigRational::new(3.into(), 4.into()), BigRational::zero()));
        assert_eq!(q("-2/3 i"), GaussRational::new(BigRational::zero(), BigRational::new((-2).into(), 3.into())));
        assert_eq!(q("1 - 1/2 i").to_c64(), c(1.0, -0.5));
        assert!("1/0".parse::<GaussRational>().is_err());
        assert!("abc".parse::<GaussRational>().is_err());
        assert!("1+ i".parse::<GaussRational>().is_err());
    }

    #[test]
    fn evaluation_examples() {
        let id = RationalFunction::identity();
        assert_eq!(id.eval(c(0.5, 0.0)).unwrap(), c(0.5, 0.0));
        let g = RationalFunction::from_poles(q("1/2"), 1, &[(q("2"), 1)]).unwrap();
        assert_eq!(g.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((g.eval(c(1.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        let h = RationalFunction::from_poles(q("1"), 2, &[(q("3"), 1)]).unwrap();
        assert!((h.eval(c(1.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(h.eval(c(3.0, 0.0)), Err(Error::PoleHit(_))));
    }

    #[test]
    fn denominator_from_poles_is_exact() {
        let g = RationalFunction::from_poles(q("1"), 1, &[(q("2"), 1), (q("-2"), 1)]).unwrap();
        assert_eq!(g.denominator(), &[q("-4"), q("0"), q("1")]);
        let g = RationalFunction::from_poles(q("1"), 1, &[(q("1/2+1/3 i"), 2)]).unwrap();
        let d = g.denominator_f64();
        let s = c(0.5, 1.0 / 3.0);
        assert!(d.eval(s).norm() < 1e-15);
        assert!(d.derivative().eval(s).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let g = RationalFunction::from_poles(q("3/4-1/2 i"), 2, &[(q("2"), 1), (q("1+1 i"), 2)]).unwrap();
        let z = c(0.3, -0.4);
        let (_, dg) = g.eval_with_derivative(z);
        let h = 1e-6;
        let fd = (g.eval(z + h).unwrap() - g.eval(z - h).unwrap()) / (2.0 * h);
        assert!((dg - fd).norm() < 1e-8);
    }

    #[test]
    fn critical_points_zero_the_derivative() {
        let g = RationalFunction::from_poles(q("1"), 1, &[(q("2"), 1), (q("-1+1 i"), 1)]).unwrap();
        let crit = g.critical_points();
        assert_eq!(crit.len(), 2);
        for z in crit {
            assert!(g.eval_with_derivative(z).1.norm() < 1e-12);
        }
    }

    #[test]
    fn normalization_identifies_scalar_multiples() {
        let a = RationalFunction::from_poles(q("1/2"), 1, &[(q("2"), 1)]).unwrap();
        let b = RationalFunction::new(q("-1/4"), 1, vec![q("1"), q("-1/2")]).unwrap();
        assert_eq!(a.normalized(), b.normalized());
    }

    #[test]
    fn spec_round_trip() {
        let g = RationalFunction::from_poles(q("1/8"), 2, &[(q("3/2-1/4 i"), 2)]).unwrap();
        assert_eq!(RationalFunction::from_spec(&g.to_spec()).unwrap(), g);
    }

    #[test]
    fn invalid_functions_are_rejected() {
        assert!(RationalFunction::new(q("1"), 0, vec![q("1")]).is_err());
        assert!(RationalFunction::new(q("0"), 1, vec![q("1")]).is_err());
        assert!(RationalFunction::new(q("1"), 1, vec![q("0"), q("1")]).is_err());
    }
}
