use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use num_complex::Complex64;

use super::rational::RationalFunction;
use crate::error::{Error, Result};

/// Square `[center - h, center + h]^2` in the zeta-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub center: Complex64,
    pub half_width: f64,
}

/// Quadtree cell: column `i`, row `j` of the `2^depth x 2^depth` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub depth: u8,
    pub i: u32,
    pub j: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellClass {
    Inside,
    Outside,
    Boundary,
}

impl BoundingBox {
    pub fn new(center: Complex64, half_width: f64) -> Self {
        BoundingBox { center, half_width }
    }

    pub fn cell_half_width(&self, c: Cell) -> f64 {
        self.half_width / (1u64 << c.depth) as f64
    }

    pub fn cell_center(&self, c: Cell) -> Complex64 {
        let h = self.cell_half_width(c);
        let x0 = self.center.re - self.half_width;
        let y0 = self.center.im - self.half_width;
        Complex64::new(x0 + (2 * c.i + 1) as f64 * h, y0 + (2 * c.j + 1) as f64 * h)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z.re - self.center.re).abs() <= self.half_width && (z.im - self.center.im).abs() <= self.half_width
    }

    /// Does the closed cell meet the closed disk?
    pub fn cell_meets_disk(&self, c: Cell, center: Complex64, radius: f64) -> bool {
        let m = self.cell_center(c);
        let h = self.cell_half_width(c);
        // slack for rounding in the cell coordinates
        let h = h * (1.0 + 1e-12);
        let dx = ((center.re - m.re).abs() - h).max(0.0);
        let dy = ((center.im - m.im).abs() - h).max(0.0);
        dx * dx + dy * dy <= radius * radius
    }

    /// Is the closed cell contained in the closed disk?
    pub fn cell_inside_disk(&self, c: Cell, center: Complex64, radius: f64) -> bool {
        let m = self.cell_center(c);
        let h = self.cell_half_width(c);
        let dx = (center.re - m.re).abs() + h;
        let dy = (center.im - m.im).abs() + h;
        dx * dx + dy * dy <= radius * radius
    }

    fn touches_edge(c: Cell) -> bool {
        let n = 1u32 << c.depth;
        c.i == 0 || c.j == 0 || c.i == n - 1 || c.j == n - 1
    }
}

fn children(c: Cell) -> [Cell; 4] {
    let d = c.depth + 1;
    [
        Cell { depth: d, i: 2 * c.i, j: 2 * c.j },
        Cell { depth: d, i: 2 * c.i + 1, j: 2 * c.j },
        Cell { depth: d, i: 2 * c.i, j: 2 * c.j + 1 },
        Cell { depth: d, i: 2 * c.i + 1, j: 2 * c.j + 1 },
    ]
}

/// Certified enclosure `[lo, hi]` of `|g|` on the disk `|zeta - center| <= r`.
pub fn modulus_bounds(g: &RationalFunction, center: Complex64, r: f64) -> (f64, f64) {
    let m = g.zero_order() as i32;
    let c = g.scale_f64().norm();
    let a = center.norm();
    let n_lo = c * (a - r).max(0.0).powi(m);
    let n_hi = c * (a + r).powi(m);
    let t = g.denominator_f64().taylor_at(center);
    let mut err = 0.0;
    let mut rk = 1.0;
    for tk in &t[1..] {
        rk *= r;
        err += tk.norm() * rk;
    }
    let d0 = t[0].norm();
    let d_lo = d0 - err;
    let d_hi = d0 + err;
    let inflate = 1e-12;
    let lo = n_lo / d_hi * (1.0 - inflate);
    let hi = if d_lo > 0.0 { n_hi / d_lo * (1.0 + inflate) } else { f64::INFINITY };
    (lo.max(0.0), hi)
}

/// Upper bound for `|g|` on `|zeta| >= radius`, or infinity when `g` grows
/// at infinity or the denominator bound is not yet effective.
pub fn exterior_bound(g: &RationalFunction, radius: f64) -> f64 {
    let d = &g.denominator_f64().coeffs;
    let big_m = d.len() - 1;
    let m = g.zero_order() as usize;
    if m > big_m {
        return f64::INFINITY;
    }
    let lead = d[big_m].norm();
    let tail: f64 = d[..big_m]
        .iter()
        .enumerate()
        .map(|(i, di)| di.norm() * radius.powi(i as i32 - big_m as i32))
        .sum();
    let margin = lead - tail;
    if margin <= 0.0 {
        return f64::INFINITY;
    }
    g.scale_f64().norm() * radius.powi(m as i32 - big_m as i32) / margin * (1.0 + 1e-12)
}

pub type RefinePredicate<'a> = &'a (dyn Fn(&BoundingBox, Cell) -> bool + Sync);

#[derive(Clone, Copy)]
pub struct RegionOptions<'a> {
    pub max_depth: u32,
    /// Boundary cells are always split up to this depth; beyond it only
    /// when `refine` says so.
    pub base_depth: u32,
    pub refine: Option<RefinePredicate<'a>>,
}

impl RegionOptions<'_> {
    pub fn uniform(max_depth: u32) -> Self {
        RegionOptions { max_depth, base_depth: max_depth, refine: None }
    }
}

/// Certified cover of the component of `{|g| < rho}` containing 0.
#[derive(Clone, Debug)]
pub struct Lemniscate {
    pub g: RationalFunction,
    pub level: f64,
    pub inner_cover: Vec<Cell>,
    pub outer_cover: Vec<Cell>,
    pub bounding_box: BoundingBox,
    /// The component continues outside the box (certified `|g| < rho` there).
    pub unbounded: bool,
    leaves: HashMap<Cell, CellClass>,
    internal: HashSet<Cell>,
    component: HashSet<Cell>,
    inner: HashSet<Cell>,
}

/// Where a point sits relative to the certified covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    /// In an inner-cover cell: certified in the component.
    Inner,
    /// In an outer-cover cell: undecided at this resolution.
    Undecided,
    /// Certified not in the component.
    Excluded,
}

/// Default bounding box half-width for a set of relevant points: four
/// times `extent + 1`, rounded up to a power of two so that cell
/// coordinates are exact.
pub fn auto_half_width(extent: f64) -> f64 {
    let w = 4.0 * (extent + 1.0);
    2f64.powi(w.log2().ceil() as i32)
}

pub fn component_region(g: &RationalFunction, rho: f64, bbox: BoundingBox, max_depth: u32) -> Result<Lemniscate> {
    component_region_with(g, rho, bbox, RegionOptions::uniform(max_depth))
}

pub fn component_region_with(
    g: &RationalFunction,
    rho: f64,
    bbox: BoundingBox,
    opts: RegionOptions<'_>,
) -> Result<Lemniscate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Precondition(format!("level must be positive, got {rho}")));
    }
    if !bbox.contains(Complex64::new(0.0, 0.0)) {
        return Err(Error::Precondition("bounding box must contain 0".into()));
    }
    if opts.max_depth > 30 {
        return Err(Error::Precondition("subdivision depth above 30".into()));
    }
    let mut leaves = HashMap::new();
    let mut internal = HashSet::new();
    let mut stack = vec![Cell { depth: 0, i: 0, j: 0 }];
    while let Some(cell) = stack.pop() {
        let h = bbox.cell_half_width(cell);
        let (lo, hi) = modulus_bounds(g, bbox.cell_center(cell), h * std::f64::consts::SQRT_2);
        let class = if hi < rho {
            CellClass::Inside
        } else if lo >= rho {
            CellClass::Outside
        } else {
            CellClass::Boundary
        };
        let d = cell.depth as u32;
        let split = class == CellClass::Boundary
            && d < opts.max_depth
            && (d < opts.base_depth || opts.refine.is_some_and(|f| f(&bbox, cell)));
        if split {
            internal.insert(cell);
            stack.extend(children(cell));
        } else {
            leaves.insert(cell, class);
        }
    }
    let mut lem = Lemniscate {
        g: g.clone(),
        level: rho,
        inner_cover: Vec::new(),
        outer_cover: Vec::new(),
        bounding_box: bbox,
        unbounded: false,
        leaves,
        internal,
        component: HashSet::new(),
        inner: HashSet::new(),
    };
    let origin = Complex64::new(0.0, 0.0);
    let seeds = lem.leaves_meeting_disk(origin, 0.0);

    // flood fill through everything not certified outside
    let mut queue: VecDeque<Cell> = seeds.iter().copied().filter(|c| lem.leaves[c] != CellClass::Outside).collect();
    let mut component: HashSet<Cell> = queue.iter().copied().collect();
    let mut escapes = false;
    while let Some(cell) = queue.pop_front() {
        if BoundingBox::touches_edge(cell) {
            escapes = true;
        }
        for n in lem.neighbors(cell) {
            if lem.leaves[&n] != CellClass::Outside && component.insert(n) {
                queue.push_back(n);
            }
        }
    }
    if escapes {
        if exterior_bound(g, bbox.half_width - bbox.center.norm()) < rho {
            lem.unbounded = true;
        } else {
            return Err(Error::ComponentEscapesBox { half_width: bbox.half_width });
        }
    }

    let mut queue: VecDeque<Cell> = seeds.iter().copied().filter(|c| lem.leaves[c] == CellClass::Inside).collect();
    if queue.is_empty() {
        return Err(Error::DepthExhausted { depth: opts.max_depth });
    }
    let mut inner: HashSet<Cell> = queue.iter().copied().collect();
    while let Some(cell) = queue.pop_front() {
        for n in lem.neighbors(cell) {
            if lem.leaves[&n] == CellClass::Inside && inner.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let inner_sorted: BTreeSet<Cell> = inner.iter().copied().collect();
    let outer_sorted: BTreeSet<Cell> = component.difference(&inner).copied().collect();
    lem.inner_cover = inner_sorted.into_iter().collect();
    lem.outer_cover = outer_sorted.into_iter().collect();
    lem.component = component;
    lem.inner = inner;
    Ok(lem)
}

impl Lemniscate {
    pub fn class_of(&self, cell: Cell) -> Option<CellClass> {
        self.leaves.get(&cell).copied()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// All leaves as `(cell, class)` in cell order.
    pub fn leaves(&self) -> Vec<(Cell, CellClass)> {
        let mut v: Vec<_> = self.leaves.iter().map(|(c, k)| (*c, *k)).collect();
        v.sort_by_key(|(c, _)| *c);
        v
    }

    pub fn in_component_cover(&self, cell: Cell) -> bool {
        self.component.contains(&cell)
    }

    pub fn is_inner(&self, cell: Cell) -> bool {
        self.inner.contains(&cell)
    }

    pub fn inner_area(&self) -> f64 {
        self.inner_cover
            .iter()
            .map(|&c| (2.0 * self.bounding_box.cell_half_width(c)).powi(2))
            .sum()
    }

    /// Leaves whose closed cell meets the closed disk.
    pub fn leaves_meeting_disk(&self, center: Complex64, radius: f64) -> Vec<Cell> {
        let mut out = Vec::new();
        let mut stack = vec![Cell { depth: 0, i: 0, j: 0 }];
        while let Some(c) = stack.pop() {
            if !self.bounding_box.cell_meets_disk(c, center, radius) {
                continue;
            }
            if self.leaves.contains_key(&c) {
                out.push(c);
            } else if self.internal.contains(&c) {
                stack.extend(children(c));
            }
        }
        out.sort();
        out
    }

    /// Membership of a point; points on cell edges take the weakest
    /// classification among the cells containing them.
    pub fn membership(&self, z: Complex64) -> Membership {
        if !self.bounding_box.contains(z) {
            return if self.unbounded { Membership::Undecided } else { Membership::Excluded };
        }
        let cells = self.leaves_meeting_disk(z, 0.0);
        if cells.iter().all(|c| self.inner.contains(c)) {
            Membership::Inner
        } else if cells.iter().any(|c| self.component.contains(c)) {
            Membership::Undecided
        } else {
            Membership::Excluded
        }
    }

    /// Is every point of the closed disk in the inner cover?
    pub fn covers_disk(&self, center: Complex64, radius: f64) -> bool {
        let cells = self.leaves_meeting_disk(center, radius);
        !cells.is_empty() && cells.iter().all(|c| self.inner.contains(c))
    }

    /// Edge-adjacent leaves of a leaf.
    pub fn neighbors(&self, cell: Cell) -> Vec<Cell> {
        let n = 1i64 << cell.depth;
        let mut out = Vec::new();
        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let ni = cell.i as i64 + di;
            let nj = cell.j as i64 + dj;
            if ni < 0 || nj < 0 || ni >= n || nj >= n {
                continue;
            }
            let same = Cell { depth: cell.depth, i: ni as u32, j: nj as u32 };
            if self.internal.contains(&same) {
                self.collect_facing(same, (-di, -dj), &mut out);
                continue;
            }
            let mut probe = same;
            loop {
                if self.leaves.contains_key(&probe) {
                    out.push(probe);
                    break;
                }
                if probe.depth == 0 {
                    break;
                }
                probe = Cell { depth: probe.depth - 1, i: probe.i / 2, j: probe.j / 2 };
            }
        }
        out
    }

    /// Leaves in the subtree of `cell` touching its side in direction `side`.
    fn collect_facing(&self, cell: Cell, side: (i64, i64), out: &mut Vec<Cell>) {
        if self.leaves.contains_key(&cell) {
            out.push(cell);
            return;
        }
        if !self.internal.contains(&cell) {
            return;
        }
        for ch in children(cell) {
            let on_side = match side {
                (-1, 0) => ch.i % 2 == 0,
                (1, 0) => ch.i % 2 == 1,
                (0, -1) => ch.j % 2 == 0,
                _ => ch.j % 2 == 1,
            };
            if on_side {
                self.collect_facing(ch, side, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemniscate::GaussRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(s: &str) -> GaussRational {
        s.parse().unwrap()
    }

    fn circle_g() -> RationalFunction {
        RationalFunction::from_poles(q("1/2"), 1, &[(q("2"), 1)]).unwrap()
    }

    #[test]
    fn unit_disk() {
        let g = RationalFunction::identity();
        let lem = component_region(&g, 1.0, BoundingBox::new(c(0.0, 0.0), 2.0), 12).unwrap();
        let area = lem.inner_area();
        let pi = std::f64::consts::PI;
        assert!(area <= pi && area >= pi - 0.1, "area {area}");
        assert!(!lem.unbounded);
        assert_eq!(lem.membership(c(0.0, 0.0)), Membership::Inner);
        assert_eq!(lem.membership(c(1.5, 0.0)), Membership::Excluded);
    }

    #[test]
    fn exterior_of_a_disk() {
        // |zeta / (2 (zeta - 2))| < 1  <=>  |zeta - 8/3| > 4/3
        let lem = component_region(&circle_g(), 1.0, BoundingBox::new(c(0.0, 0.0), 8.0), 12).unwrap();
        assert!(lem.unbounded);
        assert_eq!(lem.membership(c(0.0, 0.0)), Membership::Inner);
        assert_eq!(lem.membership(c(2.0, 0.0)), Membership::Excluded);
        assert_eq!(lem.membership(c(8.0 / 3.0, 0.0)), Membership::Excluded);
        assert_eq!(lem.membership(c(8.0 / 3.0, 1.5)), Membership::Inner);
        assert_eq!(lem.membership(c(6.0, 6.0)), Membership::Inner);
    }

    #[test]
    fn pole_is_separated_from_small_component() {
        let g = RationalFunction::from_poles(q("1"), 2, &[(q("3"), 1)]).unwrap();
        let lem = component_region(&g, 0.1, BoundingBox::new(c(0.0, 0.0), 8.0), 12).unwrap();
        assert_eq!(lem.membership(c(3.0, 0.0)), Membership::Excluded);
        assert!(!lem.unbounded);
        // the component is roughly |zeta| < sqrt(0.3)
        assert_eq!(lem.membership(c(0.4, 0.0)), Membership::Inner);
        assert_eq!(lem.membership(c(-0.5, 0.0)), Membership::Inner);
        assert_eq!(lem.membership(c(0.6, 0.0)), Membership::Excluded);
    }

    #[test]
    fn bounded_component_touching_box_is_an_error() {
        let g = RationalFunction::identity();
        assert!(matches!(
            component_region(&g, 3.0, BoundingBox::new(c(0.0, 0.0), 2.0), 6),
            Err(Error::ComponentEscapesBox { .. })
        ));
    }

    #[test]
    fn certification_is_sound_on_random_points() {
        let g = RationalFunction::from_poles(q("1/4"), 2, &[(q("2"), 1), (q("-1+3/2 i"), 1)]).unwrap();
        let lem = component_region(&g, 1.0, BoundingBox::new(c(0.0, 0.0), 12.0), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inner: Vec<Cell> = lem.inner_cover.clone();
        for _ in 0..10_000 {
            let cell = inner[rng.random_range(0..inner.len())];
            let h = lem.bounding_box.cell_half_width(cell);
            let z = lem.bounding_box.cell_center(cell) + c(rng.random_range(-h..h), rng.random_range(-h..h));
            assert!(g.eval(z).unwrap().norm() < 1.0);
        }
        // pixel flood fill of {|g| < 1} from the origin: no pixel of that
        // component may be certified excluded
        let n = 600usize;
        let w = lem.bounding_box.half_width;
        let px = |k: usize| -w + (k as f64 + 0.5) * 2.0 * w / n as f64;
        let below: Vec<bool> = (0..n * n)
            .map(|k| g.eval(c(px(k % n), px(k / n))).map(|v| v.norm() < 1.0).unwrap_or(false))
            .collect();
        let start = (n / 2) * n + n / 2;
        assert!(below[start]);
        let mut seen = vec![false; n * n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            assert_ne!(lem.membership(c(px(k % n), px(k / n))), Membership::Excluded);
            let (x, y) = (k % n, k / n);
            let mut push = |kk: usize| {
                if below[kk] && !seen[kk] {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if x > 0 { push(k - 1); }
            if x + 1 < n { push(k + 1); }
            if y > 0 { push(k - n); }
            if y + 1 < n { push(k + n); }
        }
    }

    #[test]
    fn neighbors_are_symmetric() {
        let lem = component_region(&circle_g(), 1.0, BoundingBox::new(c(0.0, 0.0), 8.0), 8).unwrap();
        for (cell, _) in lem.leaves() {
            for n in lem.neighbors(cell) {
                assert!(lem.neighbors(n).contains(&cell), "{cell:?} -> {n:?}");
            }
        }
    }

    #[test]
    fn exterior_bound_examples() {
        // zeta / (2 (zeta - 2)) tends to 1/2 at infinity
        let b = exterior_bound(&circle_g(), 100.0);
        assert!(b > 0.5 && b < 0.52);
        assert!(exterior_bound(&RationalFunction::identity(), 10.0).is_infinite());
    }
}
