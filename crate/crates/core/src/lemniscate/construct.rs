use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rational::{GaussRational, RationalFunction};
use super::region::{auto_half_width, component_region, component_region_with, BoundingBox, Lemniscate, Membership, RegionOptions};
use crate::error::{Error, Result};

/// Closed disk `|zeta - center| <= radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }
}

pub const DEFAULT_DEPTH: u32 = 12;
const MAX_POLE_MULTIPLICITY: u32 = 3;
const SAMPLES_PER_CIRCLE: usize = 2048;
/// Pole locations are rounded to this many binary digits.
const POLE_BITS: u32 = 24;

/// An accepted lemniscate constructor together with its certificate.
#[derive(Clone, Debug)]
pub struct Construction {
    pub g: RationalFunction,
    pub lemniscate: Lemniscate,
    pub candidates_tried: usize,
}

/// Independent check of a construction's three conclusions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub contains_k: bool,
    pub avoids_sigma: bool,
    pub connected: bool,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.contains_k && self.avoids_sigma && self.connected
    }
}

fn extent(sigma: &[Complex64], k: &[Disk]) -> f64 {
    let s = sigma.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let kk = k.iter().map(|d| d.center.norm() + d.radius).fold(0.0, f64::max);
    s.max(kk)
}

fn check_inputs(sigma: &[Complex64], k: &[Disk]) -> Result<()> {
    let origin = Complex64::new(0.0, 0.0);
    if sigma.iter().any(|s| s.norm() == 0.0) {
        return Err(Error::Precondition("0 must not belong to the polar set".into()));
    }
    if !k.iter().any(|d| d.contains(origin)) {
        return Err(Error::Precondition("the compact must contain 0".into()));
    }
    if k.iter().any(|d| !(d.radius >= 0.0 && d.radius.is_finite())) {
        return Err(Error::Precondition("disk radii must be finite and nonnegative".into()));
    }
    for s in sigma {
        if k.iter().any(|d| d.contains(*s)) {
            return Err(Error::Precondition(format!("polar point {s} lies in the compact")));
        }
    }
    Ok(())
}

/// `sup |zeta^m / D(zeta)|` over the disks, sampled on the boundary circles
/// (maximum principle) and refined around the best sample.
fn sampled_sup(m: u32, den: &crate::upoly::UPoly, k: &[Disk]) -> f64 {
    let h = |z: Complex64| z.powu(m).norm() / den.eval(z).norm();
    let mut sup: f64 = 0.0;
    for d in k {
        if d.radius == 0.0 {
            sup = sup.max(h(d.center));
            continue;
        }
        let at = |t: f64| h(d.center + Complex64::from_polar(d.radius, t));
        let n = SAMPLES_PER_CIRCLE;
        let dt = std::f64::consts::TAU / n as f64;
        let (mut best_t, mut best) = (0.0, at(0.0));
        for j in 1..n {
            let v = at(j as f64 * dt);
            if v > best {
                best = v;
                best_t = j as f64 * dt;
            }
        }
        // golden-section search in the bracketing interval
        let (mut a, mut b) = (best_t - dt, best_t + dt);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if at(x1) > at(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        sup = sup.max(best.max(at(0.5 * (a + b))));
    }
    sup
}

/// Candidate sequence: pole multiplicities grow before the zero order.
fn candidate_shapes(has_poles: bool) -> impl Iterator<Item = (u32, u32)> {
    (1u32..).flat_map(move |m| {
        let mults = if has_poles { 1..=MAX_POLE_MULTIPLICITY } else { 0..=0 };
        mults.map(move |p| (m, p))
    })
}

fn certify(lem: &Lemniscate, sigma: &[Complex64], k: &[Disk]) -> (bool, f64) {
    let mut covered = 0usize;
    let mut total = 0usize;
    let mut k_ok = true;
    for d in k {
        if !lem.covers_disk(d.center, d.radius) {
            k_ok = false;
        }
        for j in 0..64 {
            let z = d.center + Complex64::from_polar(d.radius, std::f64::consts::TAU * j as f64 / 64.0);
            total += 1;
            if lem.membership(z) == Membership::Inner {
                covered += 1;
            }
        }
    }
    let violations = sigma.iter().filter(|&&s| lem.membership(s) != Membership::Excluded).count();
    let score = covered as f64 / total.max(1) as f64 - violations as f64 / sigma.len().max(1) as f64;
    (k_ok && violations == 0, score)
}

/// Finds `g = c zeta^m / prod (zeta - sigma_j)^p` in the rational family whose
/// lemniscate component `{|g| < 1}` containing 0 holds `K` and avoids `Sigma`.
pub fn lemma2_construct(sigma: &[Complex64], k: &[Disk], budget: usize) -> Result<RationalFunction> {
    Ok(lemma2_construct_certified(sigma, k, budget, DEFAULT_DEPTH)?.g)
}

pub fn lemma2_construct_certified(sigma: &[Complex64], k: &[Disk], budget: usize, depth: u32) -> Result<Construction> {
    check_inputs(sigma, k)?;
    let mut poles: Vec<GaussRational> = Vec::new();
    for s in sigma {
        let q = GaussRational::dyadic(*s, POLE_BITS);
        if !poles.contains(&q) {
            poles.push(q);
        }
    }
    let bbox = BoundingBox::new(Complex64::new(0.0, 0.0), auto_half_width(extent(sigma, k)));
    let mut best: Option<(f64, RationalFunction)> = None;
    for (tried, (m, p)) in candidate_shapes(!poles.is_empty()).take(budget).enumerate() {
        let shape: Vec<(GaussRational, u32)> = poles.iter().map(|q| (q.clone(), p)).collect();
        let unit = RationalFunction::from_poles(GaussRational::one(), m, &shape)?;
        let sup = sampled_sup(m, unit.denominator_f64(), k);
        if !(sup.is_finite() && sup > 0.0) {
            continue;
        }
        // largest power of 1/2 keeping sup_K |g| <= 1/2
        let exp = (0.5 * (1.0 + 1e-12) / sup).log2().floor() as i32;
        let g = RationalFunction::from_poles(GaussRational::power_of_two(exp), m, &shape)?;
        let lem = match component_region(&g, 1.0, bbox, depth) {
            Ok(l) => l,
            Err(Error::ComponentEscapesBox { .. } | Error::DepthExhausted { .. }) => continue,
            Err(e) => return Err(e),
        };
        let (ok, score) = certify(&lem, sigma, k);
        if ok {
            return Ok(Construction { g, lemniscate: lem, candidates_tried: tried + 1 });
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, g));
        }
    }
    let (best_score, best) = match best {
        Some((s, g)) => (s, Some(Box::new(g))),
        None => (f64::NEG_INFINITY, None),
    };
    Err(Error::BudgetExhausted { budget, best, best_score })
}

/// Re-checks a constructed `g` with a fresh subdivision at `depth`,
/// refining past the base depth only where `K` or `Sigma` sit.
pub fn verify_construction(g: &RationalFunction, sigma: &[Complex64], k: &[Disk], depth: u32) -> Result<Verification> {
    let bbox = BoundingBox::new(Complex64::new(0.0, 0.0), auto_half_width(extent(sigma, k)));
    let refine = |b: &BoundingBox, c| {
        k.iter().any(|d| b.cell_meets_disk(c, d.center, d.radius)) || sigma.iter().any(|s| b.cell_meets_disk(c, *s, 0.0))
    };
    let opts = RegionOptions { max_depth: depth, base_depth: depth.min(8), refine: Some(&refine) };
    let lem = component_region_with(g, 1.0, bbox, opts)?;
    let contains_k = k.iter().all(|d| lem.covers_disk(d.center, d.radius));
    let avoids_sigma = sigma.iter().all(|s| lem.membership(*s) == Membership::Excluded);
    // the inner cover is grown from 0 through edge-adjacent inside cells,
    // so covering K by it places K in the component of 0
    let connected = contains_k && lem.membership(Complex64::new(0.0, 0.0)) == Membership::Inner;
    Ok(Verification { contains_k, avoids_sigma, connected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(s: &str) -> GaussRational {
        s.parse().unwrap()
    }

    #[test]
    fn single_pole() {
        let k = [Disk::new(c(0.0, 0.0), 1.0)];
        let g = lemma2_construct(&[c(2.0, 0.0)], &k, 10).unwrap();
        let expected = RationalFunction::from_poles(q("1/2"), 1, &[(q("2"), 1)]).unwrap();
        assert_eq!(g, expected);
        assert!(verify_construction(&g, &[c(2.0, 0.0)], &k, 24).unwrap().passed());
    }

    #[test]
    fn no_poles_gives_scaled_identity() {
        let g = lemma2_construct(&[], &[Disk::new(c(0.0, 0.0), 2.0)], 10).unwrap();
        assert_eq!(g, RationalFunction::new(q("1/4"), 1, vec![q("1")]).unwrap());
        let g = lemma2_construct(&[], &[Disk::new(c(0.0, 0.0), 1.0)], 10).unwrap();
        assert_eq!(g, RationalFunction::new(q("1/2"), 1, vec![q("1")]).unwrap());
    }

    #[test]
    fn symmetric_pair_of_poles() {
        let sigma = [c(2.0, 0.0), c(-2.0, 0.0)];
        let k = [Disk::new(c(0.0, 0.0), 1.0)];
        let g = lemma2_construct(&sigma, &k, 10).unwrap();
        assert_eq!(g.zero_order(), 1);
        assert!(g.denominator_f64().eval(c(2.0, 0.0)).norm() < 1e-15);
        assert!(g.denominator_f64().eval(c(-2.0, 0.0)).norm() < 1e-15);
        let sup = (0..1000)
            .map(|j| g.eval(Complex64::from_polar(1.0, j as f64 * 0.00628)).unwrap().norm())
            .fold(0.0, f64::max);
        assert!(sup < 1.0);
        assert!(verify_construction(&g, &sigma, &k, 24).unwrap().passed());
    }

    #[test]
    fn two_disk_compact() {
        // both disks must end up in the one component of 0
        let sigma = [c(0.0, 2.0), c(0.0, -2.0)];
        let k = [Disk::new(c(0.0, 0.0), 0.5), Disk::new(c(3.0, 0.0), 0.5)];
        let g = lemma2_construct(&sigma, &k, 30).unwrap();
        assert!(verify_construction(&g, &sigma, &k, 24).unwrap().passed());
    }

    #[test]
    fn preconditions() {
        let k = [Disk::new(c(0.0, 0.0), 1.0)];
        assert!(matches!(lemma2_construct(&[c(0.5, 0.0)], &k, 5), Err(Error::Precondition(_))));
        assert!(matches!(lemma2_construct(&[c(0.0, 0.0)], &k, 5), Err(Error::Precondition(_))));
        assert!(matches!(
            lemma2_construct(&[], &[Disk::new(c(3.0, 0.0), 1.0)], 5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn random_instances_mostly_succeed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = [Disk::new(c(0.0, 0.0), 0.8)];
        for _ in 0..5 {
            let n = rng.random_range(1..=5);
            let sigma: Vec<Complex64> = (0..n)
                .map(|_| Complex64::from_polar(rng.random_range(1.0..5.0), rng.random_range(0.0..std::f64::consts::TAU)))
                .collect();
            let g = match lemma2_construct(&sigma, &k, 12) {
                Ok(g) => g,
                Err(e) => panic!("{sigma:?}: {e:?}"),
            };
            assert!(verify_construction(&g, &sigma, &k, 24).unwrap().passed());
        }
    }
}
