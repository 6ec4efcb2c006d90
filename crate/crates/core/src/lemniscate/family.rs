use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

use super::rational::{GaussRational, RationalFunction};

/// Rationals `p/q` in lowest terms with `|p| <= h` and `1 <= q <= h`.
fn rationals_of_height(h: i64) -> Vec<BigRational> {
    let mut out = Vec::new();
    for q in 1..=h {
        for p in -h..=h {
            if p.gcd(&q) == 1 || (p == 0 && q == 1) {
                out.push(BigRational::new(BigInt::from(p), BigInt::from(q)));
            }
        }
    }
    out
}

fn gaussian_of_height(h: i64) -> Vec<GaussRational> {
    let rs = rationals_of_height(h);
    let mut out: Vec<GaussRational> = rs
        .iter()
        .flat_map(|re| rs.iter().map(move |im| GaussRational::new(re.clone(), im.clone())))
        .collect();
    out.sort_by(|a, b| a.cmp_key(b));
    out
}

fn cmp_seq(a: &[GaussRational], b: &[GaussRational]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.cmp_key(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn height_of(g: &RationalFunction) -> BigInt {
    g.denominator().iter().map(|d| d.height()).fold(g.scale().height(), |a, b| a.max(b))
}

/// Members of the rational family with `max(m, deg D) <= max_degree`,
/// coefficient heights `<= max_height`, normalized by `D(0) = 1`.
///
/// Ordered by degree, then height, then denominator, zero order and scale.
pub fn enumerate_family(max_degree: usize, max_height: i64) -> Vec<RationalFunction> {
    if max_degree == 0 || max_height < 1 {
        return Vec::new();
    }
    let values = gaussian_of_height(max_height);
    let nonzero: Vec<GaussRational> = values.iter().filter(|v| !v.is_zero()).cloned().collect();

    // denominators 1 + d_1 z + ... + d_k z^k with d_k != 0
    let mut dens: Vec<Vec<GaussRational>> = vec![vec![GaussRational::one()]];
    for k in 1..=max_degree {
        let mut tuples: Vec<Vec<GaussRational>> = vec![vec![GaussRational::one()]];
        for pos in 1..=k {
            let choices = if pos == k { &nonzero } else { &values };
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    choices.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        dens.extend(tuples);
    }

    let mut out = Vec::new();
    for d in &dens {
        for m in 1..=max_degree as u32 {
            if (m as usize).max(d.len() - 1) > max_degree {
                continue;
            }
            for c in &nonzero {
                if let Ok(g) = RationalFunction::new(c.clone(), m, d.clone()) {
                    out.push(g);
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| height_of(a).cmp(&height_of(b)))
            .then_with(|| cmp_seq(a.denominator(), b.denominator()))
            .then_with(|| a.zero_order().cmp(&b.zero_order()))
            .then_with(|| a.scale().cmp_key(b.scale()))
    });
    out.dedup();
    out
}

/// Canonical `(m, D)` key ignoring the scale: functions sharing it differ by
/// a constant factor and have the same family of lemniscates.
pub fn shape_key(g: &RationalFunction) -> (u32, Vec<GaussRational>) {
    let n = g.normalized();
    (n.zero_order(), n.denominator().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn starts_with_identity() {
        let fam = enumerate_family(1, 1);
        assert_eq!(fam[0], RationalFunction::identity());
        // scales: 8 nonzero values; denominators: 1 and 1 + d z with d in 8 values
        assert_eq!(fam.len(), 8 * 9);
    }

    #[test]
    fn family_invariant() {
        for g in enumerate_family(2, 1) {
            assert_eq!(g.eval(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
            let num = g.numerator();
            assert!(num[..num.len() - 1].iter().all(|c| c.is_zero()));
            assert!(!g.denominator()[0].is_zero());
        }
    }

    #[test]
    fn enumeration_is_stable_and_unique() {
        let a = enumerate_family(2, 1);
        let b = enumerate_family(2, 1);
        assert_eq!(a, b);
        let mut keys: Vec<String> = a.iter().map(|g| format!("{:?}", g.normalized().to_spec())).collect();
        let n = keys.len();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), n);
    }

    #[test]
    fn heights() {
        assert_eq!(rationals_of_height(1).len(), 3);
        // 0, +-1, +-2, +-1/2
        assert_eq!(rationals_of_height(2).len(), 7);
    }
}
