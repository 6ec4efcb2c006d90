use std::path::PathBuf;
use std::time::Instant;

use hartogs::engine::{base_level, manifest, theorem_pipeline, PipelineInput, Verdict};
use hartogs::hartogs::{coefficients, psh_check, radius_estimate, radius_field, ExpansionConfig, RadiusFieldConfig};
use hartogs::io::{self, fmt_float, Table};
use hartogs::lemniscate::{
    auto_half_width, component_region, lemma2_construct_certified, verify_construction, BoundingBox, Disk, Lemniscate,
};
use hartogs::polycurve::{monodromy, Irreducibility};
use hartogs::singular::{capacity as capacity_of, capacity_field, weierstrass_fit, CapacityOptions, SingularFiberSet};
use hartogs::{Error, C64};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, TolProfile};

pub enum Outcome {
    Done,
    HypothesesUnmet,
}

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub profile: TolProfile,
    pub workers: usize,
    pub command: &'static str,
}

type Res = Result<Outcome, Error>;

impl Context {
    fn write_table(&self, name: &str, t: &Table, files: &mut Vec<String>) -> Result<(), Error> {
        t.write(&self.out.join(name))?;
        files.push(name.to_string());
        Ok(())
    }

    fn write_text(&self, name: &str, text: &str, files: &mut Vec<String>) -> Result<(), Error> {
        io::write_text(&self.out.join(name), text)?;
        files.push(name.to_string());
        Ok(())
    }

    fn input_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(serde_json::to_vec(&self.cfg).expect("config serializes"));
        for p in [&self.cfg.curve_file, &self.cfg.singular.fibers].into_iter().flatten() {
            if let Ok(bytes) = std::fs::read(p) {
                h.update(bytes);
            }
        }
        hex::encode(h.finalize())
    }

    /// Writes `manifest.json`: config echo, version, input hash, timings,
    /// verdicts and the list of emitted files.
    fn finish(&self, started: Instant, verdicts: Value, mut files: Vec<String>, extra: Value) -> Result<(), Error> {
        files.push("manifest.json".into());
        let m = json!({
            "software": {"name": "hartogs", "version": env!("CARGO_PKG_VERSION")},
            "command": self.command,
            "config": self.cfg,
            "tol_profile": self.profile,
            "seed": self.cfg.seed,
            "workers": self.workers,
            "input_sha256": self.input_hash(),
            "verdicts": verdicts,
            "outputs": files,
            "timings_seconds": {"total": started.elapsed().as_secs_f64()},
            "details": extra,
        });
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        io::write_text(&self.out.join("manifest.json"), &(text + "\n"))
    }
}

fn c(p: &[f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

pub fn curve(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let curve = ctx.cfg.curve()?;
    let mut files = Vec::new();
    ctx.write_table("critical.csv", &io::critical_points_table(&curve.critical_xi), &mut files)?;
    let (irreducible, perms) = if curve.eta_degree == 1 {
        (Irreducibility::Yes, Value::Null)
    } else {
        let rep = monodromy(&curve)?;
        ctx.write_table("monodromy.csv", &io::monodromy_table(&rep), &mut files)?;
        let v = if rep.is_transitive() { Irreducibility::Yes } else { Irreducibility::No };
        (v, json!(rep.permutations))
    };
    let crit: Vec<String> = curve.critical_xi.iter().map(|z| format!("{:.6}{:+.6}i", clean(z.re), clean(z.im))).collect();
    println!("critical = {{{}}}", crit.join(", "));
    println!("irreducible = {irreducible}");
    ctx.write_text("irreducibility.txt", &format!("irreducible = {irreducible}\n"), &mut files)?;
    ctx.finish(
        t0,
        json!({"irreducible": irreducible}),
        files,
        json!({"curve": curve.poly.to_text(), "sheets": curve.eta_degree, "monodromy": perms}),
    )?;
    Ok(Outcome::Done)
}

fn write_lemniscate(ctx: &Context, lem: &Lemniscate, disks: &[Disk], sigma: &[C64], files: &mut Vec<String>) -> Result<(), Error> {
    ctx.write_table("cover.csv", &io::cover_table(lem), files)?;
    let overlay = io::overlay_table(lem, &disks.iter().map(|d| (d.center, d.radius)).collect::<Vec<_>>(), sigma);
    ctx.write_table("overlay.csv", &overlay, files)?;
    ctx.write_text("lemniscate.svg", &io::overlay_svg(&format!("|g| < {}", lem.level), &overlay), files)
}

pub fn lemniscate(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let sec = &ctx.cfg.lemniscate;
    let sigma: Vec<C64> = sec.sigma.iter().map(c).collect();
    let disks: Vec<Disk> = sec.disks.iter().map(|d| Disk::new(C64::new(d[0], d[1]), d[2])).collect();
    if disks.is_empty() {
        return Err(Error::Precondition("K needs at least one disk (--disk re,im,radius)".into()));
    }
    let mut files = Vec::new();
    match lemma2_construct_certified(&sigma, &disks, sec.budget, sec.depth) {
        Ok(cons) => {
            let spec = cons.g.to_spec();
            ctx.write_text("g.json", &(serde_json::to_string_pretty(&spec).expect("spec serializes") + "\n"), &mut files)?;
            println!("g = {}", cons.g);
            write_lemniscate(ctx, &cons.lemniscate, &disks, &sigma, &mut files)?;
            let check = verify_construction(&cons.g, &sigma, &disks, 2 * sec.depth)?;
            ctx.finish(
                t0,
                json!({"accepted": true, "verification": check, "verified": check.passed()}),
                files,
                json!({"g": spec, "g_display": cons.g.to_string(), "candidates_tried": cons.candidates_tried}),
            )?;
            if !check.passed() {
                return Err(Error::Precondition(format!("re-verification failed: {check:?}")));
            }
            Ok(Outcome::Done)
        }
        Err(Error::BudgetExhausted { budget, best, best_score }) => {
            let mut details = json!({"budget": budget, "best_score": best_score});
            if let Some(g) = &best {
                let spec = g.to_spec();
                ctx.write_text("g.json", &(serde_json::to_string_pretty(&spec).expect("spec serializes") + "\n"), &mut files)?;
                let extent = sigma.iter().map(|s| s.norm()).chain(disks.iter().map(|d| d.center.norm() + d.radius)).fold(0.0, f64::max);
                let bbox = BoundingBox::new(C64::new(0.0, 0.0), auto_half_width(extent));
                if let Ok(lem) = component_region(g, 1.0, bbox, sec.depth) {
                    write_lemniscate(ctx, &lem, &disks, &sigma, &mut files)?;
                }
                details["best"] = json!(spec);
                eprintln!("best candidate: {g}");
            }
            ctx.finish(t0, json!({"accepted": false}), files, details)?;
            Err(Error::BudgetExhausted { budget, best, best_score })
        }
        Err(e) => Err(e),
    }
}

fn parameter_point(ctx: &Context, dim: usize) -> Result<Vec<C64>, Error> {
    if let Some(z) = &ctx.cfg.expand.z {
        return Ok(z.iter().map(c).collect());
    }
    if let Ok(lat) = ctx.cfg.lattice() {
        return Ok(lat.point(lat.len() / 2));
    }
    Ok(vec![C64::new(0.0, 0.0); dim.max(1)])
}

pub fn expand(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let engine = ctx.cfg.engine(ctx.profile)?;
    let curve = ctx.cfg.curve()?;
    let f = ctx.cfg.function()?;
    let g = ctx.cfg.expansion_g()?;
    let level = ctx.cfg.expand.level.unwrap_or_else(|| base_level(&g, engine.base_radius));
    let z = parameter_point(ctx, f.expr.parameter_count())?;
    if z.len() < f.expr.parameter_count() {
        return Err(Error::Precondition(format!("function uses {} parameters, got {}", f.expr.parameter_count(), z.len())));
    }
    let exp = coefficients(&f, &curve, &g, level, &z, ExpansionConfig { k_max: engine.k_max, ..ExpansionConfig::default() })?;
    let mut files = Vec::new();
    ctx.write_table("coefficients.csv", &io::expansion_table(&exp), &mut files)?;
    let mut norms = Table::new(["k", "norm_k", "log10_norm_k"]);
    let mut pts = Vec::new();
    for k in 0..exp.scaled.len() {
        let n = exp.norm(k);
        norms.push(vec![k.to_string(), fmt_float(n), fmt_float(n.log10())]);
        pts.push((k as f64, n.log10()));
    }
    ctx.write_table("norms.csv", &norms, &mut files)?;
    ctx.write_text("norms.svg", &io::series_svg("log10 ||c_k|| against k", &[("log10 norm", pts)]), &mut files)?;
    let est = radius_estimate(&exp);
    let (r, err) = match &est {
        Ok(e) => (Some(e.radius), None),
        Err(e) => (None, Some(e.to_string())),
    };
    println!("level = {level}, nodes = {}, R = {}", exp.nodes_per_loop, r.map_or("n/a".into(), |r| r.to_string()));
    ctx.finish(
        t0,
        json!({"radius": r, "radius_error": err}),
        files,
        json!({"g": g.to_spec(), "level": level, "z": z.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(), "nodes": exp.nodes_per_loop, "estimate": est.ok()}),
    )?;
    Ok(Outcome::Done)
}

pub fn radius(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let engine = ctx.cfg.engine(ctx.profile)?;
    let curve = ctx.cfg.curve()?;
    let f = ctx.cfg.function()?;
    let g = ctx.cfg.expansion_g()?;
    let lattice = ctx.cfg.lattice()?;
    let level = ctx.cfg.expand.level.unwrap_or_else(|| base_level(&g, engine.base_radius));
    let rcfg = RadiusFieldConfig {
        expansion: ExpansionConfig { k_max: engine.k_max, ..ExpansionConfig::default() },
        adaptive_rounds: engine.adaptive_rounds,
        shrink: engine.shrink,
    };
    let field = radius_field(&f, &curve, &g, level, &lattice, rcfg)?;
    let mut files = Vec::new();
    let table = io::radius_table(&field);
    ctx.write_table("radius.csv", &table, &mut files)?;
    let series = |col: usize| -> Vec<(f64, f64)> {
        table.rows.iter().filter_map(|r| Some((r[0].parse().ok()?, r[col].parse().ok()?))).collect()
    };
    let rc = table.header.iter().position(|h| h == "R").expect("R column");
    let svg = io::series_svg("R and R_star by grid index", &[("R", series(rc)), ("R_star", series(rc + 1))]);
    ctx.write_text("radius.svg", &svg, &mut files)?;
    let u: Vec<Option<f64>> = field.r_star.iter().map(|r| r.filter(|r| r.is_finite()).map(|r| -r.ln())).collect();
    let psh = psh_check(&lattice, &u, engine.psh_slack);
    let failures = field.failures.iter().filter(|f| f.is_some()).count();
    println!("{} grid points, {failures} failures", lattice.len());
    ctx.finish(
        t0,
        json!({
            "failures": failures,
            "subharmonic_minus_log_r_star": psh.as_ref().map(|p| p.passed()).ok(),
            "psh_error": psh.as_ref().err().map(|e| e.to_string()),
        }),
        files,
        json!({"g": g.to_spec(), "level": level, "psh": psh.ok()}),
    )?;
    Ok(Outcome::Done)
}

pub fn continue_(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let config = ctx.cfg.engine(ctx.profile)?;
    let curve = ctx.cfg.curve()?;
    let f = ctx.cfg.function()?;
    let z_grid = ctx.cfg.lattice()?;
    let scenario = ctx.cfg.scenario()?;
    let injection = scenario.as_ref().and_then(|s| s.injection).filter(|_| ctx.cfg.function.is_none());
    let inject = move |z: &[C64]| injection.map(|i| i.fibers(z)).unwrap_or_default();
    let function_id = match (&scenario, &ctx.cfg.function) {
        (Some(s), None) => format!("{} v{}: {}", s.id, s.version, s.function),
        _ => f.source.clone(),
    };
    let input = PipelineInput {
        f: &f,
        function_id,
        curve: &curve,
        z_grid,
        config,
        injected_fibers: if injection.is_some() { Some(&inject) } else { None },
    };
    let report = theorem_pipeline(&input)?;
    let mut files = Vec::new();
    if let (Some(atlas), Some(est)) = (&report.atlas, &report.singular) {
        ctx.write_table("atlas_radius.csv", &io::atlas_radius_table(atlas), &mut files)?;
        let cov = io::coverage_table(atlas, est);
        ctx.write_table("coverage.csv", &cov, &mut files)?;
        ctx.write_text("coverage.svg", &io::coverage_svg(&cov, atlas.z_grid.len()), &mut files)?;
    }
    if let Some(fib) = &report.fibers {
        ctx.write_table("fibers.csv", &io::fiber_table(fib), &mut files)?;
    }
    if let Some(inv) = &report.inverted {
        ctx.write_table("inverted_fibers.csv", &io::fiber_table(inv), &mut files)?;
    }
    if let (Some(fib), Some(cap)) = (&report.fibers, &report.capacity) {
        ctx.write_table("capacity.csv", &io::capacity_table(fib, cap), &mut files)?;
    }
    let mut fit_text = match (&report.fit, &report.fit_error) {
        (Some(fit), _) => io::fit_report(fit),
        (None, Some(e)) => format!("fit: not available\nerror: {e}\n"),
        (None, None) => "fit: not needed (empty singular set)\n".into(),
    };
    fit_text.insert_str(0, &format!("pipeline_verdict: {}\n", report.verdict));
    ctx.write_text("fit.txt", &fit_text, &mut files)?;
    println!("verdict = {}", report.verdict);
    println!(
        "coverage = {:.6}, gaps = {:.6}, fibers = {}",
        report.coverage.covered_fraction,
        report.coverage.gap_fraction,
        report.fibers.as_ref().map_or(0, |f| f.fibers.iter().map(Vec::len).sum::<usize>())
    );
    ctx.finish(t0, json!({"verdict": report.verdict}), files, manifest(&input, &report))?;
    Ok(if report.verdict == Verdict::HypothesesUnmet { Outcome::HypothesesUnmet } else { Outcome::Done })
}

pub fn singular(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let engine = ctx.cfg.engine(ctx.profile)?;
    let grid = ctx.cfg.lattice()?;
    let sfs = match (&ctx.cfg.singular.fibers, ctx.cfg.scenario()?.and_then(|s| s.injection)) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Precondition(format!("cannot read fibers {}: {e}", p.display())))?;
            io::read_fiber_table(&text, &grid, 0.0)?
        }
        (None, Some(inj)) => {
            SingularFiberSet::from_values(grid.clone(), grid.points().iter().map(|z| inj.fibers(z)).collect(), 0.0)?
        }
        (None, None) => {
            return Err(Error::Precondition("no fibers given (use --fibers or a scenario with injected fibers)".into()))
        }
    };
    let mut files = Vec::new();
    ctx.write_table("fibers.csv", &io::fiber_table(&sfs), &mut files)?;
    let (verdict, fit_text) = if sfs.is_empty() {
        (Verdict::ConsistentWithAnalytic, "verdict: consistent-with-analytic\nfit: not needed (empty set)\n".to_string())
    } else {
        match weierstrass_fit(&sfs, engine.fit_degree) {
            Ok(fit) => {
                let v = if fit.verdict == hartogs::singular::FitVerdict::Negative {
                    Verdict::Negative
                } else {
                    Verdict::ConsistentWithAnalytic
                };
                (v, io::fit_report(&fit))
            }
            Err(e @ Error::RaggedFibers { .. }) => (Verdict::Negative, format!("verdict: negative\nerror: {e}\n")),
            Err(e) => return Err(e),
        }
    };
    ctx.write_text("fit.txt", &fit_text, &mut files)?;
    let mut details = json!({});
    if !sfs.is_empty() {
        let cap = capacity_field(&sfs, engine.psh_slack);
        ctx.write_table("capacity.csv", &io::capacity_table(&sfs, &cap), &mut files)?;
        details["subharmonicity"] = json!(cap.subharmonicity);
        details["subharmonicity_error"] = json!(cap.subharmonicity_error);
    }
    match hartogs::engine::invert_chart(&sfs) {
        Ok(inv) => ctx.write_table("inverted_fibers.csv", &io::fiber_table(&inv), &mut files)?,
        Err(e) => details["inversion_error"] = json!(e.to_string()),
    }
    println!("verdict = {verdict}");
    ctx.finish(t0, json!({"verdict": verdict}), files, details)?;
    Ok(Outcome::Done)
}

pub fn capacity(ctx: &Context) -> Res {
    let t0 = Instant::now();
    let set = ctx
        .cfg
        .capacity
        .set
        .clone()
        .ok_or_else(|| Error::Precondition("no compact given (use --point, --disk or --segment)".into()))?;
    let opts = CapacityOptions {
        n_fekete: ctx.cfg.capacity.n_fekete,
        restarts: ctx.cfg.capacity.restarts,
        seed: ctx.cfg.seed,
        ..CapacityOptions::default()
    };
    let est = capacity_of(&set, &opts)?;
    let mut files = Vec::new();
    let mut t = Table::new(["capacity", "transfinite_diameter", "points"]);
    t.push(vec![fmt_float(est.value), fmt_float(est.diameter), est.fekete_points.len().to_string()]);
    ctx.write_table("capacity.csv", &t, &mut files)?;
    let mut pts = Table::new(["index", "re", "im"]);
    for (i, p) in est.fekete_points.iter().enumerate() {
        pts.push(vec![i.to_string(), fmt_float(p.re), fmt_float(p.im)]);
    }
    ctx.write_table("fekete.csv", &pts, &mut files)?;
    let dots: Vec<(f64, f64)> = est.fekete_points.iter().map(|p| (p.re, p.im)).collect();
    let svg = io::SvgPlot::new(&format!("Fekete points, capacity {:.6}", est.value)).dots("Fekete points", dots, 3.0, "#1f77b4");
    ctx.write_text("fekete.svg", &svg.render(), &mut files)?;
    println!("capacity = {}", est.value);
    ctx.finish(t0, json!({"capacity": est.value}), files, json!({"set": set, "options": opts}))?;
    Ok(Outcome::Done)
}
