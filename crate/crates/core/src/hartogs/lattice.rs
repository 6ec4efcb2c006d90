use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular lattice in `C^n`: coordinate `m` takes the values
/// `origin[m] + step * (a + i b)` with `a < shape[m].0`, `b < shape[m].1`.
///
/// Points are indexed row-major over `(a_0, b_0, a_1, b_1, ...)`, last
/// index fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZLattice {
    pub origin: Vec<Complex64>,
    pub step: f64,
    pub shape: Vec<(usize, usize)>,
}

impl ZLattice {
    pub fn new(origin: Vec<Complex64>, step: f64, shape: Vec<(usize, usize)>) -> Result<Self> {
        if origin.len() != shape.len() || origin.is_empty() {
            return Err(Error::Precondition("lattice origin and shape differ in dimension".into()));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Precondition(format!("lattice step must be positive, got {step}")));
        }
        if shape.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(Error::GridTooSmall("empty lattice axis".into()));
        }
        Ok(ZLattice { origin, step, shape })
    }

    /// `n` points on the real segment starting at `start`.
    pub fn real_line(start: f64, step: f64, n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(start, 0.0)], step, vec![(n, 1)])
    }

    /// `n x n` square in one variable centred at `center` with the given half side.
    pub fn square(center: Complex64, half: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall("square lattice needs at least two points per side".into()));
        }
        let step = 2.0 * half / (n - 1) as f64;
        Self::new(vec![center - Complex64::new(half, half)], step, vec![(n, n)])
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    fn extents(&self) -> Vec<usize> {
        self.shape.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let ext = self.extents();
        let mut t = vec![0; ext.len()];
        for (slot, &e) in t.iter_mut().zip(&ext).rev() {
            *slot = idx % e;
            idx /= e;
        }
        t
    }

    pub fn flat_index(&self, t: &[isize]) -> Option<usize> {
        let ext = self.extents();
        let mut idx = 0usize;
        for (&v, &e) in t.iter().zip(&ext) {
            if v < 0 || v as usize >= e {
                return None;
            }
            idx = idx * e + v as usize;
        }
        Some(idx)
    }

    pub fn point(&self, idx: usize) -> Vec<Complex64> {
        let t = self.multi_index(idx);
        self.origin
            .iter()
            .enumerate()
            .map(|(m, &o)| o + Complex64::new(t[2 * m] as f64, t[2 * m + 1] as f64) * self.step)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<Complex64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Indices within Chebyshev distance one of `idx`, itself included.
    pub fn window(&self, idx: usize) -> Vec<usize> {
        let base: Vec<isize> = self.multi_index(idx).into_iter().map(|v| v as isize).collect();
        let dims = base.len();
        let mut out = Vec::new();
        for code in 0..3usize.pow(dims as u32) {
            let mut t = base.clone();
            let mut c = code;
            for v in t.iter_mut() {
                *v += (c % 3) as isize - 1;
                c /= 3;
            }
            if let Some(i) = self.flat_index(&t) {
                out.push(i);
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let l = ZLattice::new(vec![Complex64::new(0.0, 0.0); 2], 0.5, vec![(3, 2), (2, 4)]).unwrap();
        assert_eq!(l.len(), 48);
        for i in 0..l.len() {
            let t: Vec<isize> = l.multi_index(i).into_iter().map(|v| v as isize).collect();
            assert_eq!(l.flat_index(&t), Some(i));
        }
        let p = l.point(l.flat_index(&[2, 1, 1, 3]).unwrap());
        assert_eq!(p, vec![Complex64::new(1.0, 0.5), Complex64::new(0.5, 1.5)]);
    }

    #[test]
    fn windows() {
        let l = ZLattice::square(Complex64::new(0.0, 0.0), 1.0, 5).unwrap();
        assert_eq!(l.window(0).len(), 4);
        assert_eq!(l.window(12).len(), 9);
        let line = ZLattice::real_line(0.0, 0.1, 4).unwrap();
        assert_eq!(line.window(0), vec![0, 1]);
    }
}
