use num_complex::Complex64;
use serde::Serialize;

use super::curve::{AlgebraicCurve, CurvePoint, Irreducibility};
use crate::error::{Error, Result};

const LOOP_SEGMENTS: usize = 64;

/// Sheet permutations induced by small loops around each critical value,
/// all based at one regular point. `permutations[k][i] = j` means the loop
/// around `critical[k]` carries sheet `i` to sheet `j`.
#[derive(Clone, Debug, Serialize)]
pub struct MonodromyReport {
    pub base_point: Complex64,
    pub sheets: Vec<Complex64>,
    pub critical: Vec<Complex64>,
    pub permutations: Vec<Vec<usize>>,
}

impl MonodromyReport {
    /// Product of all loop permutations, traversing loops in the given order
    /// of critical-value indices.
    pub fn product(&self, order: &[usize]) -> Vec<usize> {
        let n = self.sheets.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for &k in order {
            perm = perm.iter().map(|&i| self.permutations[k][i]).collect();
        }
        perm
    }

    /// Loop indices sorted by the direction of their tail as seen from the
    /// base point, counterclockwise.
    pub fn angular_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.critical.len()).collect();
        let angle = |k: usize| (self.critical[k] - self.base_point).arg();
        idx.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
        idx
    }

    pub fn is_transitive(&self) -> bool {
        let n = self.sheets.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for perm in &self.permutations {
            for (i, &j) in perm.iter().enumerate() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        (0..n).all(|i| find(&mut parent, i) == root)
    }
}

fn base_candidates(curve: &AlgebraicCurve) -> Vec<Complex64> {
    let crit = &curve.critical_xi;
    let (min_re, max_re) = crit.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.re), hi.max(c.re)));
    let (min_im, max_im) = crit.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.im), hi.max(c.im)));
    let spread = (max_re - min_re).max(max_im - min_im).max(1.0);
    let mid = 0.5 * (min_re + max_re);
    // slightly irrational offsets keep tails from lining up with critical values
    [0.0, 0.1732, -0.2718, 0.4142, -0.5772, 0.3137, -0.6823]
        .iter()
        .map(|&dx| Complex64::new(mid + dx * spread, min_im - (1.0 + 0.123 * dx.abs()) * spread))
        .collect()
}

/// The lollipop loop from `base` around `c`: straight tail, counterclockwise
/// circle, straight tail back.
fn lollipop(curve: &AlgebraicCurve, base: Complex64, c: Complex64) -> Vec<Complex64> {
    let others = curve
        .critical_xi
        .iter()
        .filter(|&&o| o != c)
        .map(|o| (o - c).norm())
        .fold(f64::INFINITY, f64::min);
    let r = (0.5 * others).min(0.5 * (base - c).norm());
    let alpha = (base - c).arg();
    let mut path = Vec::with_capacity(LOOP_SEGMENTS + 2);
    for k in 0..=LOOP_SEGMENTS {
        let theta = alpha + std::f64::consts::TAU * k as f64 / LOOP_SEGMENTS as f64;
        path.push(c + Complex64::from_polar(r, theta));
    }
    path.push(base);
    path
}

/// Minimal-total-distance assignment of tracked endpoints to sheets.
fn match_sheets(ends: &[Complex64], sheets: &[Complex64]) -> Vec<usize> {
    let n = sheets.len();
    if n > 8 {
        // greedy is enough once the brute force gets expensive
        let mut used = vec![false; n];
        return ends
            .iter()
            .map(|e| {
                let j = (0..n)
                    .filter(|&j| !used[j])
                    .min_by(|&a, &b| (sheets[a] - e).norm().total_cmp(&(sheets[b] - e).norm()))
                    .unwrap();
                used[j] = true;
                j
            })
            .collect();
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = p.iter().enumerate().map(|(i, &j)| (ends[i] - sheets[j]).norm()).sum();
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, p.to_vec()));
        }
    });
    best.unwrap().1
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

pub fn monodromy(curve: &AlgebraicCurve) -> Result<MonodromyReport> {
    if curve.critical_xi.is_empty() {
        let base = Complex64::new(0.0, 0.0);
        let chart = curve.branches_at(base)?;
        return Ok(MonodromyReport {
            base_point: base,
            sheets: chart.sheet_values,
            critical: Vec::new(),
            permutations: Vec::new(),
        });
    }
    let mut last_err = None;
    for base in base_candidates(curve) {
        match monodromy_from(curve, base) {
            Ok(r) => return Ok(r),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

fn monodromy_from(curve: &AlgebraicCurve, base: Complex64) -> Result<MonodromyReport> {
    let chart = curve.branches_at(base)?;
    let sheets = chart.sheet_values;
    let scale = sheets.iter().map(|s| s.norm()).fold(1.0, f64::max);
    let mut permutations = Vec::with_capacity(curve.critical_xi.len());
    for &c in &curve.critical_xi {
        let path = lollipop(curve, base, c);
        let mut ends = Vec::with_capacity(sheets.len());
        for &s in &sheets {
            ends.push(curve.continue_branch(CurvePoint::new(base, s), &path)?.eta);
        }
        let perm = match_sheets(&ends, &sheets);
        let worst = perm.iter().enumerate().map(|(i, &j)| (ends[i] - sheets[j]).norm()).fold(0.0, f64::max);
        if worst > 1e-6 * scale {
            return Err(Error::TrackingLost { xi: base });
        }
        let mut seen = vec![false; sheets.len()];
        for &j in &perm {
            if seen[j] {
                return Err(Error::TrackingLost { xi: base });
            }
            seen[j] = true;
        }
        permutations.push(perm);
    }
    Ok(MonodromyReport { base_point: base, sheets, critical: curve.critical_xi.clone(), permutations })
}

/// Transitive monodromy implies irreducibility; an intransitive group
/// proves reducibility. Tracking failures give `Undetermined`.
pub fn monodromy_irreducible(curve: &AlgebraicCurve) -> Irreducibility {
    if curve.eta_degree == 1 {
        return Irreducibility::Yes;
    }
    match monodromy(curve) {
        Ok(report) if report.is_transitive() => Irreducibility::Yes,
        Ok(_) => Irreducibility::No,
        Err(_) => Irreducibility::Undetermined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycurve::BivariatePolynomial;

    fn curve(terms: &[(u32, u32, f64)]) -> AlgebraicCurve {
        AlgebraicCurve::new(BivariatePolynomial::from_real_terms(terms).unwrap()).unwrap()
    }

    #[test]
    fn verdicts() {
        assert_eq!(monodromy_irreducible(&curve(&[(0, 2, 1.0), (1, 0, -1.0)])), Irreducibility::Yes);
        assert_eq!(monodromy_irreducible(&curve(&[(0, 2, 1.0), (2, 0, -1.0)])), Irreducibility::No);
        assert_eq!(monodromy_irreducible(&curve(&[(0, 1, 1.0), (2, 0, -1.0)])), Irreducibility::Yes);
        assert_eq!(monodromy_irreducible(&curve(&[(0, 3, 1.0), (1, 0, -1.0)])), Irreducibility::Yes);
        // eta^2 - 1: two horizontal lines
        assert_eq!(monodromy_irreducible(&curve(&[(0, 2, 1.0), (0, 0, -1.0)])), Irreducibility::No);
    }

    #[test]
    fn cube_root_gives_three_cycle() {
        let report = monodromy(&curve(&[(0, 3, 1.0), (1, 0, -1.0)])).unwrap();
        let p = &report.permutations[0];
        assert!((0..3).all(|i| p[i] != i));
        assert_eq!(p[p[p[0]]], 0);
    }

    fn loop_at_infinity(curve: &AlgebraicCurve, report: &MonodromyReport) -> Vec<usize> {
        // big counterclockwise circle through the base point, centered above it
        let base = report.base_point;
        let radius = curve.critical_xi.iter().map(|c| (c - base).norm()).fold(0.0, f64::max) * 1.5 + 1.0;
        let center = base + Complex64::new(0.0, radius);
        let path: Vec<Complex64> = (1..=256)
            .map(|k| center + Complex64::from_polar(radius, -std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * k as f64 / 256.0))
            .collect();
        let ends: Vec<Complex64> = report
            .sheets
            .iter()
            .map(|&s| curve.continue_branch(CurvePoint::new(base, s), &path).unwrap().eta)
            .collect();
        match_sheets(&ends, &report.sheets)
    }

    #[test]
    fn finite_loops_compose_to_loop_at_infinity() {
        for terms in [
            vec![(0, 2, 1.0), (3, 0, -1.0), (1, 0, 1.0)],
            vec![(0, 3, 1.0), (0, 1, -3.0), (1, 0, -1.0)],
            vec![(0, 3, 1.0), (1, 1, -2.0), (3, 0, 1.0), (0, 0, 0.5)],
        ] {
            let c = curve(&terms);
            let report = monodromy(&c).unwrap();
            let product = report.product(&report.angular_order());
            assert_eq!(product, loop_at_infinity(&c, &report), "curve {terms:?}");
        }
    }
}
