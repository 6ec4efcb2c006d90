use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::fibers::SingularFiberSet;
use crate::error::{Error, Result};

pub const DEFAULT_MODEL_DEGREE: usize = 8;
pub const FIT_THRESHOLD: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitVerdict {
    ConsistentWithAnalytic,
    Negative,
}

impl std::fmt::Display for FitVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitVerdict::ConsistentWithAnalytic => "consistent-with-analytic",
            FitVerdict::Negative => "negative",
        })
    }
}

/// Fit of the symmetric functions of every fiber by polynomials in `z`.
#[derive(Clone, Debug, Serialize)]
pub struct WeierstrassFit {
    pub degree: usize,
    pub model_degree: usize,
    /// `sym_coeffs[i][j] = sigma_{j+1}` of the fiber over the `i`-th node.
    pub sym_coeffs: Vec<Vec<Complex64>>,
    /// Exponent tuples of the monomials in the scaled variable
    /// `t = (z - center) / scale`.
    pub monomials: Vec<Vec<u32>>,
    pub center: Vec<Complex64>,
    pub scale: f64,
    /// `model[j]` holds the monomial coefficients of `sigma_{j+1}`.
    pub model: Vec<Vec<Complex64>>,
    pub residual: f64,
    /// Residual divided by `max(1, max |sigma|)`.
    pub relative_residual: f64,
    pub condition: f64,
    pub verdict: FitVerdict,
}

impl WeierstrassFit {
    /// The fitted `sigma_{j+1}` at `z`.
    pub fn model_value(&self, j: usize, z: &[Complex64]) -> Complex64 {
        let t: Vec<Complex64> = z.iter().zip(&self.center).map(|(z, c)| (z - c) / self.scale).collect();
        self.monomials
            .iter()
            .zip(&self.model[j])
            .map(|(e, c)| c * monomial(&t, e))
            .sum()
    }
}

/// `sigma_1..sigma_m` with `prod (w - p_i) = w^m - sigma_1 w^(m-1) + ... + (-1)^m sigma_m`.
pub fn elementary_symmetric(points: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); points.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (k, &p) in points.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            let prev = e[j - 1];
            e[j] += prev * p;
        }
    }
    e.remove(0);
    e
}

fn monomial(t: &[Complex64], e: &[u32]) -> Complex64 {
    t.iter().zip(e).map(|(t, &k)| t.powu(k)).product()
}

fn exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        let mut cur = vec![0u32; dim];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(out, cur, pos + 1, left - k);
    }
}

/// Fibers whose size differs from the most common one.
fn ragged(sfs: &SingularFiberSet) -> Option<(usize, Vec<usize>)> {
    let mut counts = std::collections::BTreeMap::new();
    for f in &sfs.fibers {
        *counts.entry(f.len()).or_insert(0usize) += 1;
    }
    let mode = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0))).map(|(&k, _)| k)?;
    let bad: Vec<usize> = (0..sfs.fibers.len()).filter(|&i| sfs.fibers[i].len() != mode).collect();
    if bad.is_empty() {
        None
    } else {
        Some((mode, bad))
    }
}

pub fn weierstrass_fit(sfs: &SingularFiberSet, model_degree: usize) -> Result<WeierstrassFit> {
    if let Some((_, bad)) = ragged(sfs) {
        return Err(Error::RaggedFibers { count: bad.len(), z_indices: bad });
    }
    let nodes = sfs.z_grid.len();
    if nodes < 2 * (model_degree + 1) {
        return Err(Error::GridTooSmall(format!(
            "{nodes} parameter nodes for a model of degree {model_degree} (need {})",
            2 * (model_degree + 1)
        )));
    }
    let zs = sfs.z_grid.points();
    let dim = sfs.z_grid.dim();
    let center: Vec<Complex64> = (0..dim)
        .map(|m| zs.iter().map(|z| z[m]).sum::<Complex64>() / nodes as f64)
        .collect();
    let scale = zs
        .iter()
        .flat_map(|z| z.iter().zip(&center).map(|(z, c)| (z - c).norm()))
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let monomials = exponents(dim, model_degree);
    let sym_coeffs: Vec<Vec<Complex64>> = (0..nodes).map(|i| elementary_symmetric(&sfs.values(i))).collect();
    let m = sfs.fibers.first().map_or(0, |f| f.len());

    let a = DMatrix::from_fn(nodes, monomials.len(), |i, k| {
        let t: Vec<Complex64> = zs[i].iter().zip(&center).map(|(z, c)| (z - c) / scale).collect();
        monomial(&t, &monomials[k])
    });
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditionedFit(condition));
    }
    let mut model = Vec::with_capacity(m);
    let mut residual: f64 = 0.0;
    let mut sym_scale: f64 = 1.0;
    for j in 0..m {
        let b = DVector::from_fn(nodes, |i, _| sym_coeffs[i][j]);
        let x = svd.solve(&b, 0.0).map_err(|e| Error::Precondition(e.to_string()))?;
        let r = &a * &x - &b;
        residual = residual.max(r.iter().map(|v| v.norm()).fold(0.0, f64::max));
        sym_scale = sym_scale.max(b.iter().map(|v| v.norm()).fold(0.0, f64::max));
        model.push(x.iter().copied().collect());
    }
    let relative_residual = residual / sym_scale;
    let verdict = if relative_residual < FIT_THRESHOLD {
        FitVerdict::ConsistentWithAnalytic
    } else {
        FitVerdict::Negative
    };
    Ok(WeierstrassFit {
        degree: m,
        model_degree,
        sym_coeffs,
        monomials,
        center,
        scale,
        model,
        residual,
        relative_residual,
        condition,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hartogs::ZLattice;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fiber_set(grid: ZLattice, f: impl Fn(Complex64) -> Vec<Complex64>) -> SingularFiberSet {
        let fibers = grid.points().iter().map(|z| f(z[0])).collect();
        SingularFiberSet::from_values(grid, fibers, 1e-12).unwrap()
    }

    #[test]
    fn symmetric_functions() {
        let e = elementary_symmetric(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(e, vec![c(6.0, 0.0), c(11.0, 0.0), c(6.0, 0.0)]);
    }

    #[test]
    fn square_root_fibers() {
        let grid = ZLattice::square(c(1.0, 0.5), 0.4, 9).unwrap();
        let fit = weierstrass_fit(&fiber_set(grid, |z| vec![z.sqrt(), -z.sqrt()]), 8).unwrap();
        assert_eq!(fit.degree, 2);
        assert!(fit.residual < 1e-10);
        assert_eq!(fit.verdict, FitVerdict::ConsistentWithAnalytic);
        // sigma_2 = -z
        let z = [c(1.1, 0.6)];
        assert!((fit.model_value(1, &z) + z[0]).norm() < 1e-9);
    }

    #[test]
    fn linear_motion_and_non_holomorphic_motion() {
        let grid = ZLattice::real_line(-0.5, 0.025, 41).unwrap();
        let fit = weierstrass_fit(&fiber_set(grid.clone(), |z| vec![2.0 + z]), 8).unwrap();
        assert!(fit.residual < 1e-12);
        let fit = weierstrass_fit(&fiber_set(grid, |z| vec![c(2.0 + z.norm(), 0.0)]), 8).unwrap();
        assert!(fit.residual > 1e-2, "{}", fit.residual);
        assert_eq!(fit.verdict, FitVerdict::Negative);
    }

    #[test]
    fn permutation_invariance() {
        let grid = ZLattice::square(c(0.0, 0.0), 0.5, 6).unwrap();
        let roots = |z: Complex64| vec![z + 2.0, z * z - 2.0, c(0.0, 3.0) * z];
        let plain = weierstrass_fit(&fiber_set(grid.clone(), roots), 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let fibers: Vec<Vec<Complex64>> = grid
            .points()
            .iter()
            .map(|z| {
                let mut r = roots(z[0]);
                r.shuffle(&mut rng);
                r
            })
            .collect();
        let shuffled = weierstrass_fit(&SingularFiberSet::from_values(grid, fibers, 1e-12).unwrap(), 4).unwrap();
        assert_eq!(plain.verdict, shuffled.verdict);
        assert!(plain.residual < 1e-8 && shuffled.residual < 1e-8);
    }

    #[test]
    fn errors() {
        let grid = ZLattice::real_line(0.0, 0.1, 20).unwrap();
        let sfs = fiber_set(grid, |z| if z.re > 1.55 { vec![z] } else { vec![z, z + 1.0] });
        match weierstrass_fit(&sfs, 3) {
            Err(Error::RaggedFibers { count, z_indices }) => {
                assert_eq!(count, 4);
                assert_eq!(z_indices, vec![16, 17, 18, 19]);
            }
            other => panic!("{other:?}"),
        }
        let small = fiber_set(ZLattice::real_line(0.0, 0.1, 5).unwrap(), |z| vec![z]);
        assert!(matches!(weierstrass_fit(&small, 8), Err(Error::GridTooSmall(_))));
    }
}
