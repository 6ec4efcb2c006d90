//! CSV tables and static SVG plots. Floats are written in scientific
//! notation with 17 significant digits so tables round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::engine::{ContinuationAtlas, ProbeOutcome, SingularSetEstimate};
use crate::error::{Error, Result};
use crate::hartogs::{HartogsExpansion, RadiusField, ZLattice};
use crate::lemniscate::{CellClass, Lemniscate};
use crate::polycurve::MonodromyReport;
use crate::singular::{CapacityReport, FiberPoint, SingularFiberSet, WeierstrassFit};

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Precondition(format!("cannot write {}: {e}", path.display())))
}

fn z_header(grid: &ZLattice) -> Vec<String> {
    let mut h = vec!["z_index".to_string()];
    for m in 1..=grid.dim() {
        h.push(format!("z{m}_re"));
        h.push(format!("z{m}_im"));
    }
    h
}

fn z_cells(grid: &ZLattice, idx: usize) -> Vec<String> {
    let mut v = vec![idx.to_string()];
    for c in grid.point(idx) {
        v.push(fmt_float(c.re));
        v.push(fmt_float(c.im));
    }
    v
}

pub fn critical_points_table(critical: &[Complex64]) -> Table {
    let mut t = Table::new(["index", "re", "im"]);
    for (i, c) in critical.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_float(c.re), fmt_float(c.im)]);
    }
    t
}

/// One row per (critical value, sheet): the sheet the loop around it ends on.
pub fn monodromy_table(report: &MonodromyReport) -> Table {
    let mut t = Table::new(["critical_index", "critical_re", "critical_im", "sheet", "image"]);
    for (i, (c, perm)) in report.critical.iter().zip(&report.permutations).enumerate() {
        for (s, img) in perm.iter().enumerate() {
            t.push(vec![i.to_string(), fmt_float(c.re), fmt_float(c.im), s.to_string(), img.to_string()]);
        }
    }
    t
}

fn class_name(c: CellClass) -> &'static str {
    match c {
        CellClass::Inside => "inside",
        CellClass::Outside => "outside",
        CellClass::Boundary => "boundary",
    }
}

/// Quadtree leaves of a certified lemniscate: center, half-width, class and
/// whether the leaf belongs to the cover of the component through 0.
pub fn cover_table(lem: &Lemniscate) -> Table {
    let mut t = Table::new(["center_re", "center_im", "half_width", "class", "component"]);
    for (cell, class) in lem.leaves() {
        let c = lem.bounding_box.cell_center(cell);
        t.push(vec![
            fmt_float(c.re),
            fmt_float(c.im),
            fmt_float(lem.bounding_box.cell_half_width(cell)),
            class_name(class).to_string(),
            (lem.in_component_cover(cell) as u8).to_string(),
        ]);
    }
    t
}

pub fn expansion_table(exp: &HartogsExpansion) -> Table {
    let mut t = Table::new(["k", "sample_index", "re", "im", "norm_k"]);
    for k in 0..exp.scaled.len() {
        let norm = fmt_float(exp.norm(k));
        for s in 0..exp.scaled[k].len() {
            let c = exp.coefficient(k, s);
            t.push(vec![k.to_string(), s.to_string(), fmt_float(c.re), fmt_float(c.im), norm.clone()]);
        }
    }
    t
}

pub fn radius_table(field: &RadiusField) -> Table {
    let mut h = z_header(&field.lattice);
    h.extend(["R", "R_star", "R_fit", "infinite", "failure"].map(String::from));
    let mut t = Table::new(h);
    for i in 0..field.lattice.len() {
        let mut row = z_cells(&field.lattice, i);
        let e = field.estimates[i].as_ref();
        row.push(fmt_opt(e.map(|e| e.radius)));
        row.push(fmt_opt(field.r_star[i]));
        row.push(fmt_opt(e.map(|e| e.fit_radius)));
        row.push(e.map_or(String::new(), |e| (e.infinite as u8).to_string()));
        row.push(field.failures[i].clone().unwrap_or_default());
        t.push(row);
    }
    t
}

/// Radius data of every atlas slice, one row per (slice, active z).
pub fn atlas_radius_table(atlas: &ContinuationAtlas) -> Table {
    let mut h = vec!["slice".to_string()];
    h.extend(z_header(&atlas.z_grid));
    h.extend(["R", "R_star", "eval_level", "covered", "failure"].map(String::from));
    let mut t = Table::new(h);
    for (si, s) in atlas.slices.iter().enumerate() {
        for zi in 0..atlas.z_grid.len() {
            if !s.active[zi] {
                continue;
            }
            let mut row = vec![si.to_string()];
            row.extend(z_cells(&atlas.z_grid, zi));
            row.push(fmt_opt(s.estimates[zi].as_ref().map(|e| e.radius)));
            row.push(fmt_opt(s.r_star[zi]));
            row.push(fmt_opt(s.eval_level[zi]));
            row.push(s.values[zi].len().to_string());
            row.push(s.failures[zi].clone().unwrap_or_default());
            t.push(row);
        }
    }
    t
}

pub fn fiber_table(sfs: &SingularFiberSet) -> Table {
    let mut h = z_header(&sfs.z_grid);
    h.extend(["point_index", "re", "im", "sheet"].map(String::from));
    let mut t = Table::new(h);
    for (i, fiber) in sfs.fibers.iter().enumerate() {
        for (j, p) in fiber.iter().enumerate() {
            let mut row = z_cells(&sfs.z_grid, i);
            row.extend([j.to_string(), fmt_float(p.value.re), fmt_float(p.value.im), p.sheet.to_string()]);
            t.push(row);
        }
    }
    t
}

/// Reads a table in the layout of [`fiber_table`]; rows are matched to the
/// grid by `z_index`.
pub fn read_fiber_table(text: &str, grid: &ZLattice, merge_tol: f64) -> Result<SingularFiberSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("fiber table lacks column `{name}`")))
    };
    let (zi, re, im, sheet) = (col("z_index")?, col("re")?, col("im")?, col("sheet")?);
    let mut fibers = vec![Vec::new(); grid.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| Error::Parse(format!("fiber table row {}: invalid {what}", line + 2));
        let z: usize = field(zi).parse().map_err(|_| bad("z_index"))?;
        if z >= grid.len() {
            return Err(Error::Parse(format!("fiber table row {}: z_index {z} outside the grid", line + 2)));
        }
        let value = Complex64::new(field(re).parse().map_err(|_| bad("re"))?, field(im).parse().map_err(|_| bad("im"))?);
        fibers[z].push(FiberPoint { value, sheet: field(sheet).parse().map_err(|_| bad("sheet"))? });
    }
    SingularFiberSet::new(grid.clone(), fibers, merge_tol)
}

pub fn capacity_table(sfs: &SingularFiberSet, report: &CapacityReport) -> Table {
    let mut h = z_header(&sfs.z_grid);
    h.extend(["fiber_size", "capacity", "log_capacity"].map(String::from));
    let mut t = Table::new(h);
    for i in 0..sfs.z_grid.len() {
        let mut row = z_cells(&sfs.z_grid, i);
        row.push(sfs.fibers[i].len().to_string());
        row.push(fmt_float(report.capacities[i]));
        row.push(fmt_opt(report.log_capacity[i]));
        t.push(row);
    }
    t
}

/// Per probe: counts over the grid of covered, singular and gap outcomes.
/// Twin of [`coverage_svg`].
pub fn coverage_table(atlas: &ContinuationAtlas, est: &SingularSetEstimate) -> Table {
    let mut t = Table::new(["probe", "xi_re", "xi_im", "sheet", "covered", "singular", "gap"]);
    for (p, probe) in atlas.probes.probes.iter().enumerate() {
        let mut counts = [0usize; 3];
        for o in &est.outcomes {
            counts[match o[p] {
                ProbeOutcome::Covered => 0,
                ProbeOutcome::Singular => 1,
                ProbeOutcome::Regular | ProbeOutcome::Failed => 2,
            }] += 1;
        }
        t.push(vec![
            p.to_string(),
            fmt_float(probe.point.xi.re),
            fmt_float(probe.point.xi.im),
            probe.sheet.to_string(),
            counts[0].to_string(),
            counts[1].to_string(),
            counts[2].to_string(),
        ]);
    }
    t
}

#[derive(Clone, Debug)]
enum Mark {
    Dots { points: Vec<(f64, f64)>, radius: f64, colors: Vec<String> },
    Line { points: Vec<(f64, f64)>, color: String },
    Rects { rects: Vec<(f64, f64, f64)>, color: String },
}

/// A static plot in data coordinates with equal aspect ratio.
#[derive(Clone, Debug)]
pub struct SvgPlot {
    title: String,
    marks: Vec<Mark>,
    legend: Vec<(String, String)>,
}

const SIZE: f64 = 640.0;
const PAD: f64 = 40.0;

impl SvgPlot {
    pub fn new(title: &str) -> Self {
        SvgPlot { title: title.to_string(), marks: Vec::new(), legend: Vec::new() }
    }

    pub fn dots(mut self, label: &str, points: Vec<(f64, f64)>, radius: f64, color: &str) -> Self {
        let colors = vec![color.to_string(); points.len()];
        self.legend.push((label.to_string(), color.to_string()));
        self.marks.push(Mark::Dots { points, radius, colors });
        self
    }

    /// Dots colored individually.
    pub fn shaded(mut self, points: Vec<(f64, f64)>, radius: f64, colors: Vec<String>) -> Self {
        self.marks.push(Mark::Dots { points, radius, colors });
        self
    }

    pub fn line(mut self, label: &str, points: Vec<(f64, f64)>, color: &str) -> Self {
        self.legend.push((label.to_string(), color.to_string()));
        self.marks.push(Mark::Line { points, color: color.to_string() });
        self
    }

    /// Axis-aligned squares given as `(center x, center y, half width)`.
    pub fn squares(mut self, label: &str, rects: Vec<(f64, f64, f64)>, color: &str) -> Self {
        self.legend.push((label.to_string(), color.to_string()));
        self.marks.push(Mark::Rects { rects, color: color.to_string() });
        self
    }

    fn bounds(&self) -> (f64, f64, f64) {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut add = |x: f64, y: f64, h: f64| {
            if x.is_finite() && y.is_finite() {
                lo = (lo.0.min(x - h), lo.1.min(y - h));
                hi = (hi.0.max(x + h), hi.1.max(y + h));
            }
        };
        for m in &self.marks {
            match m {
                Mark::Dots { points, .. } | Mark::Line { points, .. } => points.iter().for_each(|&(x, y)| add(x, y, 0.0)),
                Mark::Rects { rects, .. } => rects.iter().for_each(|&(x, y, h)| add(x, y, h)),
            }
        }
        if !lo.0.is_finite() {
            return (-1.0, -1.0, 2.0);
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-12);
        let cx = 0.5 * (lo.0 + hi.0);
        let cy = 0.5 * (lo.1 + hi.1);
        (cx - 0.5 * span, cy - 0.5 * span, span)
    }

    pub fn render(&self) -> String {
        let (x0, y0, span) = self.bounds();
        let k = (SIZE - 2.0 * PAD) / span;
        let px = |x: f64| PAD + (x - x0) * k;
        let py = |y: f64| SIZE - PAD - (y - y0) * k;
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#).unwrap();
        writeln!(s, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(&self.title))
            .unwrap();
        writeln!(
            s,
            r##"<rect x="{PAD}" y="{PAD}" width="{w}" height="{w}" fill="none" stroke="#999"/>"##,
            w = SIZE - 2.0 * PAD
        )
        .unwrap();
        for m in &self.marks {
            match m {
                Mark::Dots { points, radius, colors } => {
                    for (&(x, y), c) in points.iter().zip(colors) {
                        if x.is_finite() && y.is_finite() {
                            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{c}"/>"#, px(x), py(y)).unwrap();
                        }
                    }
                }
                Mark::Line { points, color } => {
                    let pts: Vec<String> = points
                        .iter()
                        .filter(|p| p.0.is_finite() && p.1.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                        .collect();
                    writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, pts.join(" ")).unwrap();
                }
                Mark::Rects { rects, color } => {
                    for &(x, y, h) in rects {
                        writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35"/>"#,
                            px(x - h),
                            py(y + h),
                            2.0 * h * k,
                            2.0 * h * k
                        )
                        .unwrap();
                    }
                }
            }
        }
        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = SIZE - 12.0 - 14.0 * (self.legend.len() - 1 - i) as f64;
            writeln!(s, r#"<rect x="{PAD}" y="{:.1}" width="10" height="10" fill="{color}"/>"#, y - 9.0).unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
                PAD + 14.0,
                escape(label)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grey-to-blue ramp for a fraction in `[0, 1]`.
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (220.0 * (1.0 - t)) as u8;
    let g = (220.0 * (1.0 - t) + 60.0 * t) as u8;
    let b = (220.0 * (1.0 - t) + 200.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Probe positions shaded by the fraction of the grid on which they are
/// covered; singular probes in red.
pub fn coverage_svg(table: &Table, grid_len: usize) -> String {
    let mut pts = Vec::new();
    let mut colors = Vec::new();
    let mut singular = Vec::new();
    for r in &table.rows {
        let x: f64 = r[1].parse().unwrap_or(f64::NAN);
        let y: f64 = r[2].parse().unwrap_or(f64::NAN);
        let covered: usize = r[4].parse().unwrap_or(0);
        let sing: usize = r[5].parse().unwrap_or(0);
        if sing > 0 {
            singular.push((x, y));
        }
        pts.push((x, y));
        colors.push(ramp(covered as f64 / grid_len.max(1) as f64));
    }
    SvgPlot::new("atlas coverage (fraction of grid covered per probe)")
        .shaded(pts, 1.5, colors)
        .dots("singular", singular, 2.5, "#d62728")
        .render()
}

/// Layers of a lemniscate plot: component cells, the disks of `K` and the
/// avoided points. Twin of [`overlay_svg`].
pub fn overlay_table(lem: &Lemniscate, disks: &[(Complex64, f64)], sigma: &[Complex64]) -> Table {
    let mut t = Table::new(["layer", "re", "im", "size"]);
    for (cell, class) in lem.leaves() {
        if !lem.in_component_cover(cell) || class == CellClass::Outside {
            continue;
        }
        let c = lem.bounding_box.cell_center(cell);
        let layer = if class == CellClass::Inside { "inner-cell" } else { "boundary-cell" };
        t.push(vec![layer.into(), fmt_float(c.re), fmt_float(c.im), fmt_float(lem.bounding_box.cell_half_width(cell))]);
    }
    for &(c, r) in disks {
        t.push(vec!["k-disk".into(), fmt_float(c.re), fmt_float(c.im), fmt_float(r)]);
    }
    for s in sigma {
        t.push(vec!["avoided".into(), fmt_float(s.re), fmt_float(s.im), fmt_float(0.0)]);
    }
    t
}

pub fn overlay_svg(title: &str, table: &Table) -> String {
    let mut inner = Vec::new();
    let mut boundary = Vec::new();
    let mut circles = Vec::new();
    let mut sigma = Vec::new();
    for r in &table.rows {
        let x: f64 = r[1].parse().unwrap_or(f64::NAN);
        let y: f64 = r[2].parse().unwrap_or(f64::NAN);
        let h: f64 = r[3].parse().unwrap_or(0.0);
        match r[0].as_str() {
            "inner-cell" => inner.push((x, y, h)),
            "boundary-cell" => boundary.push((x, y, h)),
            "k-disk" => circles.push((x, y, h)),
            _ => sigma.push((x, y)),
        }
    }
    let mut plot = SvgPlot::new(title).squares("inner cover", inner, "#1f77b4").squares("boundary cells", boundary, "#ff7f0e");
    for (i, &(x, y, r)) in circles.iter().enumerate() {
        let circle = (0..=128)
            .map(|j| {
                let p = Complex64::new(x, y) + Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / 128.0);
                (p.re, p.im)
            })
            .collect();
        plot = plot.line(if i == 0 { "K" } else { "" }, circle, "#2ca02c");
    }
    plot.dots("avoided points", sigma, 4.0, "#d62728").render()
}

/// Verdict, residuals and fitted symmetric-function coefficients as text.
pub fn fit_report(fit: &WeierstrassFit) -> String {
    let mut s = String::new();
    writeln!(s, "verdict: {}", fit.verdict).unwrap();
    writeln!(s, "residual: {}", fmt_float(fit.residual)).unwrap();
    writeln!(s, "relative_residual: {}", fmt_float(fit.relative_residual)).unwrap();
    writeln!(s, "condition: {}", fmt_float(fit.condition)).unwrap();
    writeln!(s, "fiber_degree: {}", fit.degree).unwrap();
    writeln!(s, "model_degree: {}", fit.model_degree).unwrap();
    let center: Vec<String> = fit.center.iter().map(|c| format!("{} {}", fmt_float(c.re), fmt_float(c.im))).collect();
    writeln!(s, "center: {}", center.join(", ")).unwrap();
    writeln!(s, "scale: {}", fmt_float(fit.scale)).unwrap();
    writeln!(s, "coefficients: sigma_j monomial re im").unwrap();
    for (j, coeffs) in fit.model.iter().enumerate() {
        for (m, c) in fit.monomials.iter().zip(coeffs) {
            let exps: Vec<String> = m.iter().map(|e| e.to_string()).collect();
            writeln!(s, "  {} t^({}) {} {}", j + 1, exps.join(","), fmt_float(c.re), fmt_float(c.im)).unwrap();
        }
    }
    s
}

/// `x, y` series on one plot; `series` pairs a label with its points.
pub fn series_svg(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];
    let mut plot = SvgPlot::new(title);
    for (i, (label, pts)) in series.iter().enumerate() {
        plot = plot.line(label, pts.clone(), COLORS[i % COLORS.len()]);
    }
    plot.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.5), "-2.5000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, 6.02214076e23, -0.0] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn fiber_table_round_trips() {
        let grid = ZLattice::real_line(0.0, 0.5, 3).unwrap();
        let values = vec![vec![Complex64::new(2.0, 0.1)], vec![], vec![Complex64::new(0.1, -3.0), Complex64::new(1.0 / 3.0, 0.0)]];
        let sfs = SingularFiberSet::from_values(grid.clone(), values, 1e-12).unwrap();
        let back = read_fiber_table(&fiber_table(&sfs).to_csv(), &grid, 1e-12).unwrap();
        assert_eq!(back.fibers, sfs.fibers);
        assert!(read_fiber_table("z_index,re\n0,1\n", &grid, 0.0).is_err());
        assert!(read_fiber_table("z_index,re,im,sheet\n7,1,0,0\n", &grid, 0.0).is_err());
    }

    #[test]
    fn svg_is_self_contained() {
        let svg = SvgPlot::new("t <1>").dots("p", vec![(0.0, 0.0), (1.0, 2.0)], 2.0, "#000").render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert!(!svg.contains("href"));
    }
}
