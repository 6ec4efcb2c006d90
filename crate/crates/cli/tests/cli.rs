use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hartogs(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hartogs")).args(args).arg("--out").arg(out).output().expect("run hartogs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn curve_sqrt_is_irreducible_with_critical_value_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["curve", "--curve", "eta^2 - xi"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("critical = {0.000000+0.000000i}"), "{s}");
    assert!(s.contains("irreducible = yes"));
    let crit = fs::read_to_string(dir.path().join("critical.csv")).unwrap();
    assert_eq!(crit.lines().count(), 2);
    assert!(dir.path().join("monodromy.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "curve");
}

#[test]
fn curve_product_of_lines_is_reducible() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["curve", "--curve", "eta^2 - xi^2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("irreducible = no"));
}

#[test]
fn malformed_curve_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hartogs(dir.path(), &["curve", "--curve", "eta^^2"])), 2);
    assert_eq!(code(&hartogs(dir.path(), &["curve", "--curve", "eta * (xi"])), 2);
    assert_eq!(code(&hartogs(dir.path(), &["curve"])), 2);
}

#[test]
fn lemniscate_avoiding_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["lemniscate", "--sigma", "2", "--disk", "0,0,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["g.json", "cover.csv", "overlay.csv", "lemniscate.svg", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let svg = fs::read_to_string(dir.path().join("lemniscate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("href"));
}

#[test]
fn lemniscate_without_points_and_with_a_point_in_k() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hartogs(dir.path(), &["lemniscate", "--disk", "0,0,2"])), 0);
    let o = hartogs(dir.path(), &["lemniscate", "--sigma", "0.5", "--disk", "0,0,1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn capacity_of_simple_sets() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["capacity", "--segment", "-1", "1"]);
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o).trim().trim_start_matches("capacity = ").parse().unwrap();
    assert!((v - 0.5).abs() < 0.025, "{v}");
    let o = hartogs(dir.path(), &["capacity", "--point", "0.5,-1"]);
    assert_eq!(stdout(&o).trim(), "capacity = 0");
}

#[test]
fn continue_entire_has_no_singular_fibers() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["continue", "--scenario", "entire"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict = consistent-with-analytic"));
    let fibers = fs::read_to_string(dir.path().join("fibers.csv")).unwrap();
    assert_eq!(fibers.lines().count(), 1);
}

#[test]
fn continue_reducible_stops_with_hypotheses_unmet() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["continue", "--scenario", "reducible"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("hypotheses-unmet"));
}

#[test]
fn continue_pole_graph_then_singular_on_its_fibers() {
    let dir = tempfile::tempdir().unwrap();
    let o = hartogs(dir.path(), &["continue", "--scenario", "pole-graph"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict = consistent-with-analytic"));
    let fibers = dir.path().join("fibers.csv");
    assert_eq!(fs::read_to_string(&fibers).unwrap().lines().count(), 42);

    let sub = dir.path().join("singular");
    let o = hartogs(&sub, &["singular", "--scenario", "pole-graph", "--fibers", fibers.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("consistent-with-analytic"));
    assert!(sub.join("fit.txt").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seeed = 3\n").unwrap();
    let o = hartogs(dir.path(), &["curve", "--curve", "xi", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    fs::write(&cfg, "[engine]\nk_maxx = 3\n").unwrap();
    let o = hartogs(dir.path(), &["continue", "--scenario", "entire", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
