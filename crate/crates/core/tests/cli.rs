use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arakelian")).args(args).output().expect("spawn")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn annulus_has_one_hole_and_fails_check_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["check-set", "--scenario", &scenario("annulus.toml"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("holes: 1"), "{}", stdout(&o));
    for f in ["set.pgm", "hull.pgm", "components.csv", "checks.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn strip_disc_passes_check_set() {
    let o = bin(&["check-set", "--scenario", &scenario("strip_disc.toml")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("holes: 0"));
}

#[test]
fn epsilon_at_the_gluing_radius_is_a_config_error() {
    let o = bin(&["run", "--scenario", &scenario("pole_on_disc.toml"), "--set", "run.epsilon=0.7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
}

#[test]
fn missing_scenario_is_a_config_error() {
    let o = bin(&["run", "--scenario", "/nonexistent/none.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

fn run_into(dir: &Path) -> Output {
    bin(&["run", "--scenario", &scenario("pole_on_disc.toml"), "--out", dir.to_str().unwrap()])
}

#[test]
fn run_writes_identical_artifacts_twice() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = run_into(a.path());
    assert_eq!(oa.status.code(), Some(0), "{}", stdout(&oa));
    assert_eq!(run_into(b.path()).status.code(), Some(0));
    for f in ["map.txt", "steps.csv", "checks.csv", "set.pgm", "error.pgm"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    assert!(stdout(&oa).contains("final sup chordal error"));
}

#[test]
fn transform_of_an_indicator_writes_a_field() {
    let dir = tempfile::tempdir().unwrap();
    // indicator of the disc of radius 0.5 on the pole_on_disc grid (spacing 0.1, window 3)
    let mut csv = String::from("x,y,re,im\n");
    for iy in 0..60 {
        for ix in 0..60 {
            let (x, y) = (-3.0 + 0.1 * (ix as f64 + 0.5), -3.0 + 0.1 * (iy as f64 + 0.5));
            if x * x + y * y <= 0.25 {
                csv += &format!("{x},{y},1,0\n");
            }
        }
    }
    let field = dir.path().join("field.csv");
    std::fs::write(&field, csv).unwrap();
    let out = dir.path().join("out");
    let o = bin(&[
        "transform",
        field.to_str().unwrap(),
        "--scenario",
        &scenario("pole_on_disc.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = std::fs::read_to_string(out.join("transform.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 60 * 60);
    // far from the disc T 1 is about r^2 / z
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let row = rows.iter().find(|r| (r[0] - 2.95).abs() < 1e-9 && (r[1] - 0.05).abs() < 1e-9).unwrap();
    let expect = 0.25 * row[0] / (row[0] * row[0] + row[1] * row[1]);
    assert!((row[2] - expect).abs() < 5e-3, "{row:?}");
}

#[test]
fn selftest_subset_passes() {
    let o = bin(&["selftest", "--only", "9", "--only", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("criterion 9 [PASS]"));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}
