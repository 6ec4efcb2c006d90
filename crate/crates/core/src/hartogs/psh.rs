use serde::Serialize;

use super::lattice::ZLattice;
use crate::error::{Error, Result};

/// Radii of the discrete circles, in lattice steps.
pub const PSH_RADII: [usize; 3] = [1, 2, 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PshViolation {
    pub index: usize,
    /// Which complex line: coordinate `m < n`, or `n` for the diagonal.
    pub line: usize,
    pub radius: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PshReport {
    pub checked: usize,
    pub max_violation: f64,
    pub violations: Vec<PshViolation>,
}

impl PshReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Directions in multi-index space spanning one complex line: the real
/// and imaginary unit steps.
fn lines(lattice: &ZLattice) -> Vec<(Vec<isize>, Vec<isize>)> {
    let n = lattice.dim();
    let unit = |slots: &[usize]| {
        let mut v = vec![0isize; 2 * n];
        for &s in slots {
            v[s] = 1;
        }
        v
    };
    let mut out: Vec<_> = (0..n).map(|m| (unit(&[2 * m]), unit(&[2 * m + 1]))).collect();
    if n > 1 {
        let re: Vec<usize> = (0..n).map(|m| 2 * m).collect();
        let im: Vec<usize> = (0..n).map(|m| 2 * m + 1).collect();
        out.push((unit(&re), unit(&im)));
    }
    out
}

/// Checks the sub-mean value inequality `u(z) <= mean of u on circles`
/// along every coordinate line (and the diagonal), using the four lattice
/// points at distance `r` steps. Non-finite and masked values are skipped.
pub fn psh_check(lattice: &ZLattice, u: &[Option<f64>], slack: f64) -> Result<PshReport> {
    if u.len() != lattice.len() {
        return Err(Error::Precondition("field and lattice sizes differ".into()));
    }
    let dirs = lines(lattice);
    let mut report = PshReport { checked: 0, max_violation: f64::NEG_INFINITY, violations: Vec::new() };
    let value = |t: &[isize]| lattice.flat_index(t).and_then(|j| u[j]).filter(|v| v.is_finite());
    for idx in 0..lattice.len() {
        let Some(center) = u[idx].filter(|v| v.is_finite()) else { continue };
        let base: Vec<isize> = lattice.multi_index(idx).into_iter().map(|v| v as isize).collect();
        for (line, (dre, dim)) in dirs.iter().enumerate() {
            for &r in &PSH_RADII {
                let r = r as isize;
                let shifted = |d: &[isize], s: isize| -> Vec<isize> {
                    base.iter().zip(d).map(|(b, d)| b + s * d).collect()
                };
                let ring = [shifted(dre, r), shifted(dre, -r), shifted(dim, r), shifted(dim, -r)];
                let vals: Option<Vec<f64>> = ring.iter().map(|t| value(t)).collect();
                let Some(vals) = vals else { continue };
                let mean = vals.iter().sum::<f64>() / 4.0;
                let excess = center - mean;
                report.checked += 1;
                report.max_violation = report.max_violation.max(excess);
                if excess > slack {
                    report.violations.push(PshViolation { index: idx, line, radius: r as usize, amount: excess });
                }
            }
        }
    }
    if report.checked == 0 {
        return Err(Error::GridTooSmall("no lattice node has a complete circle of neighbours".into()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn harmonic_passes_and_superharmonic_fails() {
        let l = ZLattice::square(Complex64::new(2.0, 0.0), 0.5, 17).unwrap();
        let log: Vec<Option<f64>> = l.points().iter().map(|z| Some(z[0].norm().ln())).collect();
        assert!(psh_check(&l, &log, 1e-3).unwrap().passed());
        let neg: Vec<Option<f64>> = l.points().iter().map(|z| Some(-z[0].norm_sqr())).collect();
        let rep = psh_check(&l, &neg, 1e-6).unwrap();
        assert!(!rep.passed());
        assert!(rep.max_violation > 0.0);
    }

    #[test]
    fn two_variables_check_the_diagonal() {
        let o = Complex64::new(-0.5, -0.5);
        let l = ZLattice::new(vec![o, o], 0.25, vec![(5, 5), (5, 5)]).unwrap();
        // harmonic along each coordinate line, -|t|^2 along the diagonal
        let u: Vec<Option<f64>> = l
            .points()
            .iter()
            .map(|z| Some(-(z[0] * z[1].conj()).re))
            .collect();
        let rep = psh_check(&l, &u, 1e-9).unwrap();
        assert!(rep.violations.iter().all(|v| v.line == 2));
        assert!(!rep.passed());
    }

    #[test]
    fn line_is_too_small() {
        let l = ZLattice::real_line(0.0, 0.1, 10).unwrap();
        let u = vec![Some(0.0); 10];
        assert!(matches!(psh_check(&l, &u, 1e-3), Err(Error::GridTooSmall(_))));
    }
}
