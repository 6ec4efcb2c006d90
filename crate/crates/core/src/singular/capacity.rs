use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fibers::SingularFiberSet;
use crate::error::{Error, Result};
use crate::hartogs::{psh_check, PshReport};
use crate::lemniscate::Disk;
use crate::upoly::cluster_points;

/// A planar compact given by finitely many points or by sampled boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CompactSet {
    Points { points: Vec<Complex64> },
    Disks { disks: Vec<Disk> },
    Segment { a: Complex64, b: Complex64 },
    /// Dense samples of a continuum (for instance its outer boundary).
    Samples { points: Vec<Complex64> },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CapacityOptions {
    pub n_fekete: usize,
    pub restarts: usize,
    pub boundary_samples: usize,
    pub seed: u64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions { n_fekete: 32, restarts: 3, boundary_samples: 1024, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    /// Discrete transfinite diameter of the witnesses.
    pub diameter: f64,
    pub fekete_points: Vec<Complex64>,
}

/// Discrete transfinite diameter `prod_{i<j} |p_i - p_j|^(2/(n(n-1)))`.
pub fn transfinite_diameter(points: &[Complex64]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    (log_energy(points) * 2.0 / (n * (n - 1)) as f64).exp()
}

fn log_energy(points: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            s += (points[i] - points[j]).norm().ln();
        }
    }
    s
}

fn candidates(set: &CompactSet, m: usize) -> Vec<Complex64> {
    match set {
        CompactSet::Points { points } | CompactSet::Samples { points } => points.clone(),
        CompactSet::Segment { a, b } => (0..m)
            .map(|k| a + (b - a) * (0.5 * (1.0 - (PI * k as f64 / (m - 1) as f64).cos())))
            .collect(),
        CompactSet::Disks { disks } => {
            let mut out = Vec::new();
            for (i, d) in disks.iter().enumerate() {
                if d.radius == 0.0 {
                    out.push(d.center);
                    continue;
                }
                for k in 0..m {
                    let z = d.center + Complex64::from_polar(d.radius, 2.0 * PI * k as f64 / m as f64);
                    let hidden = disks
                        .iter()
                        .enumerate()
                        .any(|(j, e)| j != i && (z - e.center).norm() < e.radius * (1.0 - 1e-12));
                    if !hidden {
                        out.push(z);
                    }
                }
            }
            out
        }
    }
}

/// Greedy Fekete selection followed by single-point exchanges.
fn fekete(cands: &[Complex64], n: usize, start: usize) -> Vec<usize> {
    let m = cands.len();
    let mut score = vec![0.0f64; m];
    let mut chosen = vec![start];
    let add = |score: &mut [f64], p: Complex64, sign: f64| {
        for (s, c) in score.iter_mut().zip(cands) {
            *s += sign * (c - p).norm().ln();
        }
    };
    add(&mut score, cands[start], 1.0);
    while chosen.len() < n {
        let best = (0..m)
            .filter(|c| !chosen.contains(c))
            .max_by(|&a, &b| score[a].total_cmp(&score[b]).then(b.cmp(&a)))
            .unwrap();
        chosen.push(best);
        add(&mut score, cands[best], 1.0);
    }
    for _ in 0..100 {
        let mut improved = false;
        for i in 0..n {
            let old = cands[chosen[i]];
            // score without point i
            let without = |c: usize| score[c] - (cands[c] - old).norm().ln();
            let current: f64 = chosen
                .iter()
                .filter(|&&c| c != chosen[i])
                .map(|&c| (cands[c] - old).norm().ln())
                .sum();
            let (best, val) = (0..m)
                .filter(|c| !chosen.contains(c))
                .map(|c| (c, without(c)))
                .fold((chosen[i], current), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best != chosen[i] && val > current + 1e-12 * current.abs().max(1.0) {
                add(&mut score, old, -1.0);
                add(&mut score, cands[best], 1.0);
                chosen[i] = best;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    chosen
}

/// `(sup over the candidates of |prod (c - p_i)|)^(1/n)`.
fn chebyshev_estimate(cands: &[Complex64], pts: &[Complex64]) -> f64 {
    let n = pts.len() as f64;
    let sup = cands
        .iter()
        .map(|c| pts.iter().map(|p| (c - p).norm().ln()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (sup / n).exp()
}

/// Logarithmic capacity. A finite set of `n` points gets its `n`-point
/// transfinite diameter (0 for a single point); a continuum gets the
/// Chebyshev norm estimate at `n_fekete` Fekete points, the best of several
/// seeded restarts.
pub fn capacity(set: &CompactSet, opts: &CapacityOptions) -> Result<CapacityEstimate> {
    if let CompactSet::Points { points } = set {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
        let pts = cluster_points(points, 1e-12 * scale);
        let d = transfinite_diameter(&pts);
        return Ok(CapacityEstimate { value: d, diameter: d, fekete_points: pts });
    }
    let cands = candidates(set, opts.boundary_samples.max(8));
    if cands.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = opts.n_fekete.clamp(2, cands.len());
    if cands.len() < 2 {
        return Ok(CapacityEstimate { value: 0.0, diameter: 0.0, fekete_points: cands });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<usize> = (0..opts.restarts.max(1)).map(|_| rng.random_range(0..cands.len())).collect();
    let best = starts
        .iter()
        .map(|&s| {
            let idx = fekete(&cands, n, s);
            let pts: Vec<Complex64> = idx.iter().map(|&i| cands[i]).collect();
            (log_energy(&pts), pts)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
        .1;
    Ok(CapacityEstimate {
        value: chebyshev_estimate(&cands, &best),
        diameter: transfinite_diameter(&best),
        fekete_points: best,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityReport {
    pub capacities: Vec<f64>,
    /// `ln cap S_z`, masked where the fiber is empty or of capacity 0.
    pub log_capacity: Vec<Option<f64>>,
    pub fekete_points: Vec<Vec<Complex64>>,
    pub subharmonicity: Option<PshReport>,
    pub subharmonicity_error: Option<String>,
}

/// Capacity of every fiber and the subharmonicity check of its logarithm.
pub fn capacity_field(sfs: &SingularFiberSet, slack: f64) -> CapacityReport {
    let per: Vec<(f64, Vec<Complex64>)> = (0..sfs.fibers.len())
        .into_par_iter()
        .map(|i| {
            let pts = sfs.values(i);
            if pts.is_empty() {
                return (0.0, Vec::new());
            }
            let est = capacity(&CompactSet::Points { points: pts }, &CapacityOptions::default())
                .expect("nonempty point set");
            (est.value, est.fekete_points)
        })
        .collect();
    let capacities: Vec<f64> = per.iter().map(|p| p.0).collect();
    let log_capacity: Vec<Option<f64>> = capacities.iter().map(|&c| (c > 0.0).then(|| c.ln())).collect();
    let (subharmonicity, subharmonicity_error) = match psh_check(&sfs.z_grid, &log_capacity, slack) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CapacityReport {
        capacities,
        log_capacity,
        fekete_points: per.into_iter().map(|p| p.1).collect(),
        subharmonicity,
        subharmonicity_error,
    }
}
