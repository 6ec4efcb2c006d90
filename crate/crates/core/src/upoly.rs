//! Dense univariate polynomials over `Complex64` and an Aberth–Ehrlich
//! simultaneous root finder.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Polynomial with ascending coefficients: `coeffs[k]` multiplies `x^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct UPoly {
    pub coeffs: Vec<Complex64>,
}

impl UPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = UPoly { coeffs };
        p.trim_exact();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `x - root`
    pub fn linear_factor(root: Complex64) -> Self {
        UPoly { coeffs: vec![-root, Complex64::new(1.0, 0.0)] }
    }

    fn trim_exact(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Complex64::zero());
        }
    }

    /// Drops leading coefficients below `rel_tol` times the largest modulus.
    pub fn trimmed(&self, rel_tol: f64) -> UPoly {
        let scale = self.max_norm();
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().is_some_and(|x| x.norm() <= rel_tol * scale) {
            c.pop();
        }
        UPoly::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::zero();
        let mut dp = Complex64::zero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> UPoly {
        if self.coeffs.len() <= 1 {
            return UPoly::constant(Complex64::zero());
        }
        UPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &UPoly) -> UPoly {
        let mut out = vec![Complex64::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UPoly::new(out)
    }

    /// Taylor coefficients about `center`: `p(center + t) = sum t_k t^k`.
    pub fn taylor_at(&self, center: Complex64) -> Vec<Complex64> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division
        for k in 0..n {
            for j in (k..n - 1).rev() {
                let next = c[j + 1];
                c[j] += center * next;
            }
        }
        c
    }

    /// Roots by Aberth–Ehrlich iteration, polished by Newton.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let p = self.trimmed(0.0);
        let n = p.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let guesses = initial_guesses(&p);
        aberth(&p, guesses)
    }

    /// Roots started from caller-supplied approximations (e.g. the previous
    /// step of a continuation).
    pub fn roots_from(&self, guesses: &[Complex64]) -> Result<Vec<Complex64>> {
        let p = self.trimmed(0.0);
        if p.degree() == 0 {
            return Ok(Vec::new());
        }
        if guesses.len() != p.degree() {
            return self.roots();
        }
        // break exact coincidences, Aberth needs distinct starts
        let mut g = guesses.to_vec();
        for i in 0..g.len() {
            for j in 0..i {
                if (g[i] - g[j]).norm() < 1e-12 * (1.0 + g[i].norm()) {
                    let bump = Complex64::new(1e-7, 1.3e-7) * (1.0 + g[i].norm());
                    g[i] += bump;
                }
            }
        }
        aberth(&p, g)
    }
}

fn initial_guesses(p: &UPoly) -> Vec<Complex64> {
    let n = p.degree();
    let lead = p.leading().norm();
    // Fujiwara-style bound on root moduli, geometric mean for the radius
    let a0 = p.coeffs[0].norm();
    let radius = if a0 > 0.0 {
        (a0 / lead).powf(1.0 / n as f64)
    } else {
        let upper = (0..n)
            .map(|k| (p.coeffs[k].norm() / lead).powf(1.0 / (n - k) as f64))
            .fold(0.0, f64::max);
        0.5 * upper.max(1e-3)
    };
    let radius = if radius.is_finite() && radius > 0.0 { radius } else { 1.0 };
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect()
}

fn aberth(p: &UPoly, mut z: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = z.len();
    let abs_coeffs: Vec<f64> = p.coeffs.iter().map(|c| c.norm()).collect();
    let residual_bound = |x: Complex64| -> f64 {
        let r = x.norm();
        abs_coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    };
    let mut converged = vec![false; n];
    for _ in 0..800 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (v, dv) = p.eval_with_derivative(z[i]);
            if v.norm() <= 4.0 * f64::EPSILON * residual_bound(z[i]) {
                converged[i] = true;
                continue;
            }
            let ratio = v / dv;
            let mut s = Complex64::zero();
            for j in 0..n {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            let rel = step.norm() / (1.0 + z[i].norm());
            max_step = max_step.max(rel);
            if rel < 1e-16 {
                converged[i] = true;
            }
        }
        if converged.iter().all(|&c| c) || max_step < 1e-16 {
            break;
        }
    }
    // Newton polish: helps simple roots, harmless for clusters
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (v, dv) = p.eval_with_derivative(*zi);
            if dv.norm() == 0.0 {
                break;
            }
            let next = *zi - v / dv;
            if p.eval(next).norm() < v.norm() {
                *zi = next;
            } else {
                break;
            }
        }
    }
    let worst = z
        .iter()
        .map(|&x| p.eval(x).norm() / residual_bound(x).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    if !worst.is_finite() || worst > 1e-6 {
        return Err(Error::RootSolverDivergence { residual: worst });
    }
    Ok(z)
}

/// Single-linkage clustering of points; each cluster is replaced by its
/// centroid. Output order follows first appearance.
pub fn cluster_points(points: &[Complex64], tol: f64) -> Vec<Complex64> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in 0..i {
            if (points[i] - points[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut sums: Vec<(Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match order.iter().position(|&o| o == r) {
            Some(k) => {
                sums[k].0 += points[i];
                sums[k].1 += 1;
            }
            None => {
                order.push(r);
                sums.push((points[i], 1));
            }
        }
    }
    sums.into_iter().map(|(s, c)| s / c as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn horner_and_derivative() {
        let p = UPoly::from_real(&[1.0, -3.0, 0.0, 2.0]);
        let x = c(0.5, -1.0);
        let direct = c(1.0, 0.0) - 3.0 * x + 2.0 * x * x * x;
        assert!((p.eval(x) - direct).norm() < 1e-14);
        let (_, d) = p.eval_with_derivative(x);
        assert!((d - (c(-3.0, 0.0) + 6.0 * x * x)).norm() < 1e-14);
        assert_eq!(p.derivative().coeffs, vec![c(-3.0, 0.0), c(0.0, 0.0), c(6.0, 0.0)]);
    }

    #[test]
    fn taylor_shift_matches_direct_expansion() {
        let p = UPoly::new(vec![c(1.0, 2.0), c(-1.0, 0.0), c(0.0, 3.0), c(2.0, -1.0)]);
        let center = c(0.3, -0.7);
        let t = p.taylor_at(center);
        let h = c(0.11, 0.05);
        let via_taylor = UPoly::new(t).eval(h);
        assert!((via_taylor - p.eval(center + h)).norm() < 1e-13);
    }

    #[test]
    fn roots_of_unity() {
        let mut coeffs = vec![c(0.0, 0.0); 6];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[5] = c(1.0, 0.0);
        let roots = UPoly::new(coeffs).roots().unwrap();
        assert_eq!(roots.len(), 5);
        for r in roots {
            assert!((r.powu(5) - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn roots_with_zero_root_and_spread_scales() {
        let p = UPoly::linear_factor(c(0.0, 0.0))
            .mul(&UPoly::linear_factor(c(1e3, 0.0)))
            .mul(&UPoly::linear_factor(c(0.0, -1e-2)));
        let mut roots = p.roots().unwrap();
        roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        assert!(roots[0].norm() < 1e-12);
        assert!((roots[1] - c(0.0, -1e-2)).norm() < 1e-12);
        assert!((roots[2] - c(1e3, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn double_root_is_clustered() {
        let p = UPoly::linear_factor(c(2.0, 1.0)).mul(&UPoly::linear_factor(c(2.0, 1.0)));
        let roots = p.roots().unwrap();
        let merged = cluster_points(&roots, 1e-6);
        assert_eq!(merged.len(), 1);
        assert!((merged[0] - c(2.0, 1.0)).norm() < 1e-7);
    }

    #[test]
    fn clustering_keeps_separated_points() {
        let pts = [c(0.0, 0.0), c(1e-9, 0.0), c(1.0, 0.0), c(1.0, 5e-10), c(3.0, 0.0)];
        let merged = cluster_points(&pts, 1e-8);
        assert_eq!(merged.len(), 3);
    }
}
