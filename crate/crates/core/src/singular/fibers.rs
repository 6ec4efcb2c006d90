use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hartogs::ZLattice;
use crate::upoly::cluster_points;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberPoint {
    pub value: Complex64,
    pub sheet: usize,
}

/// Per-`z` finite sets of points in the chart coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct SingularFiberSet {
    pub z_grid: ZLattice,
    pub fibers: Vec<Vec<FiberPoint>>,
    pub max_fiber_size: usize,
}

impl SingularFiberSet {
    /// Merges points of the same sheet closer than `tol` and orders each
    /// fiber by sheet, then real part, then imaginary part.
    pub fn new(z_grid: ZLattice, fibers: Vec<Vec<FiberPoint>>, tol: f64) -> Result<Self> {
        if fibers.len() != z_grid.len() {
            return Err(Error::Precondition(format!(
                "{} fibers for a lattice of {} points",
                fibers.len(),
                z_grid.len()
            )));
        }
        let fibers: Vec<Vec<FiberPoint>> = fibers.into_iter().map(|f| dedup(f, tol)).collect();
        let max_fiber_size = fibers.iter().map(|f| f.len()).max().unwrap_or(0);
        Ok(SingularFiberSet { z_grid, fibers, max_fiber_size })
    }

    /// Fibers given as plain values on sheet 0.
    pub fn from_values(z_grid: ZLattice, values: Vec<Vec<Complex64>>, tol: f64) -> Result<Self> {
        let fibers = values
            .into_iter()
            .map(|f| f.into_iter().map(|value| FiberPoint { value, sheet: 0 }).collect())
            .collect();
        Self::new(z_grid, fibers, tol)
    }

    pub fn values(&self, idx: usize) -> Vec<Complex64> {
        self.fibers[idx].iter().map(|p| p.value).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.max_fiber_size == 0
    }
}

fn dedup(points: Vec<FiberPoint>, tol: f64) -> Vec<FiberPoint> {
    let mut sheets: Vec<usize> = points.iter().map(|p| p.sheet).collect();
    sheets.sort_unstable();
    sheets.dedup();
    let mut out = Vec::new();
    for s in sheets {
        let vals: Vec<Complex64> = points.iter().filter(|p| p.sheet == s).map(|p| p.value).collect();
        out.extend(cluster_points(&vals, tol).into_iter().map(|value| FiberPoint { value, sheet: s }));
    }
    out.sort_by(|a, b| {
        a.sheet
            .cmp(&b.sheet)
            .then(a.value.re.total_cmp(&b.value.re))
            .then(a.value.im.total_cmp(&b.value.im))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedups_within_tolerance() {
        let grid = ZLattice::real_line(0.0, 1.0, 1).unwrap();
        let c = |x: f64| Complex64::new(x, 0.0);
        let sfs = SingularFiberSet::from_values(grid, vec![vec![c(2.0), c(2.0 + 1e-9), c(1.0)]], 1e-6).unwrap();
        assert_eq!(sfs.max_fiber_size, 2);
        assert!((sfs.fibers[0][0].value - c(1.0)).norm() < 1e-12);
    }
}
