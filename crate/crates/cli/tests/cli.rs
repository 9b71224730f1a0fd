use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trapnoise"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sidecar(dir: &Path, prefix: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{prefix}.json"))).unwrap()).unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match std::fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_SWEEP: &str = r#"
[geometry]
preset = "plane_surrogate"
[ions]
axes = ["x", "z"]
[grid]
resolution = 6.0
[sweep]
range = [0.2, 5.0]
points = 9
[output]
prefix = "small"
"#;

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for (i, text) in ["[ions]\nheigth = 1.0\n", "[sweep]\nrange = [5.0, 1.0]\n", "not toml at all ["].iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.toml"), text);
        let o = run(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.starts_with("error kind=config exit=2 message="), "{err}");
        assert_eq!(err.lines().count(), 1);
        assert!(files_in(&out).is_empty());
    }
    let o = run(&["sweep", "--config", s(&tmp.path().join("missing.toml")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["sweep", "--preset", "nope", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(files_in(&out).is_empty());
}

#[test]
fn sweep_writes_csv_per_axis_and_a_sidecar() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_SWEEP);
    let out = tmp.path().join("out");
    let o = run(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out), ["small.json", "small_x_muy.csv", "small_z_muy.csv"]);
    let csv = std::fs::read_to_string(out.join("small_x_muy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("variable,S_self,S_cross,ratio"));
    assert_eq!(lines.count(), 9);
    let meta = sidecar(&out, "small");
    assert_eq!(meta["command"], "sweep");
    assert_eq!(meta["version"], trapnoise::VERSION);
    assert_eq!(meta["config"]["grid"]["resolution"], 6.0);
    assert!(meta["grid"]["nodes"].as_u64().unwrap() > 0);
    let curves = meta["results"]["curves"].as_array().unwrap();
    assert_eq!(curves[0]["crossover"]["found"], true);
    assert_eq!(curves[1]["crossover"]["found"], false);
}

#[test]
fn rerun_from_sidecar_is_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_SWEEP);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["sweep", "--config", s(&cfg), "--out", s(&a)]).status.success());
    let side = a.join("small.json");
    assert!(run(&["--threads", "1", "sweep", "--config", s(&side), "--out", s(&b)]).status.success());
    for f in ["small_x_muy.csv", "small_z_muy.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn axes_crossover_preset_gives_three_curves() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["sweep", "--preset", "axes_crossover", "--out", s(&out), "--resolution", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csvs: Vec<String> = files_in(&out).into_iter().filter(|f| f.ends_with(".csv")).collect();
    assert_eq!(csvs.len(), 3);
    let meta = sidecar(&out, "axes_crossover");
    let found: Vec<bool> =
        meta["results"]["curves"].as_array().unwrap().iter().map(|c| c["crossover"]["found"].as_bool().unwrap()).collect();
    assert_eq!(found, [true, true, false]);
}

#[test]
fn orientation_table_preset_classifies_all_three() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["sweep", "--preset", "orientation_table", "--out", s(&out), "--resolution", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out).iter().filter(|f| f.ends_with(".csv")).count(), 6);
    let meta = sidecar(&out, "orientation_table");
    let classes: Vec<&str> = meta["results"]["classification"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["class"].as_str().unwrap())
        .collect();
    assert_eq!(classes, ["mu_x", "mu_y", "mu_z"]);
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("{name} not in {header:?}"));
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn scaling_slopes() {
    let tmp = TempDir::new().unwrap();
    let plain = write_config(
        tmp.path(),
        "plain.toml",
        "[dipoles]\norientations = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n\
         [scaling]\nrange = [0.1, 10.0]\npoints = 9\nnodes_per_height = 6.0\n[output]\nprefix = \"p\"\n",
    );
    let out = tmp.path().join("out");
    assert!(run(&["scaling", "--config", s(&plain), "--out", s(&out)]).status.success());
    let f = out.join("p_x.csv");
    for label in ["x", "y", "z"] {
        for v in csv_column(&f, &format!("slope_mu{label}")) {
            assert!((v + 4.0).abs() < 1e-6, "{label}: {v}");
        }
    }
    let sx = csv_column(&f, "S_mux");
    let sy = csv_column(&f, "S_muy");
    for (a, b) in sx.iter().zip(&sy) {
        assert!((b / a - sy[0] / sx[0]).abs() < 1e-9);
    }

    let corr = write_config(
        tmp.path(),
        "corr.toml",
        "[kernel]\nkind = \"exponential\"\nxi = 0.1\n\
         [scaling]\nrange = [0.01, 1.0]\npoints = 11\nwindow = 3\nnodes_per_height = 6.0\n[output]\nprefix = \"c\"\n",
    );
    assert!(run(&["scaling", "--config", s(&corr), "--out", s(&out)]).status.success());
    let slopes = csv_column(&out.join("c_x.csv"), "slope_muy");
    assert!(slopes[0] > -1.6, "{slopes:?}");
    assert!(*slopes.last().unwrap() < -3.0, "{slopes:?}");
}

#[test]
fn chain_writes_mode_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "chain.toml",
        "[geometry]\npreset = \"segmented_trap\"\n[dipoles]\norientations = [[1.0, 0.0, 0.0]]\n\
         [grid]\nresolution = 4.0\n[chain]\nions = 4\npoints = 5\n[output]\nprefix = \"ch\"\n",
    );
    let out = tmp.path().join("out");
    assert!(run(&["chain", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(out.join("ch_x_mux.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("spacing,S_m0_even,S_m1_odd,S_m2_even,S_m3_odd"));
    let meta = sidecar(&out, "ch");
    assert_eq!(meta["results"]["modes"]["parity"].as_array().unwrap().len(), 4);
}

const SMALL_ORACLE: &str = r#"
[geometry]
regions = [{ kind = "rectangle", x_min = -1.0, x_max = 1.0, z_min = -1.0, z_max = 1.0 }]
[kernel]
kind = "exponential"
xi = 0.3
[grid]
resolution = 5.0
[oracle]
samples = 4000
seed = 9
[output]
prefix = "o"
"#;

#[test]
fn oracle_check_passes_and_repeats_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "o.toml", SMALL_ORACLE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["oracle-check", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(run(&["oracle-check", "--config", s(&cfg), "--out", s(&b)]).status.success());
    let ja = std::fs::read(a.join("o_oracle.json")).unwrap();
    assert_eq!(ja, std::fs::read(b.join("o_oracle.json")).unwrap());
    let v: Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["runs"][0]["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn oracle_check_catches_injected_sign_fault() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL_ORACLE.replace("seed = 9", "seed = 9\ninject_sign_fault = true");
    let cfg = write_config(tmp.path(), "o.toml", &text);
    let out = tmp.path().join("out");
    let o = run(&["oracle-check", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("o_oracle.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    let z = v["runs"][0]["entries"][1]["z"].as_f64().unwrap();
    assert!(z.abs() > 10.0, "{z}");
}

#[test]
fn presets_listing_and_show() {
    let o = run(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), trapnoise_cli::presets::SHIPPED.len());
    let o = run(&["presets", "--show", "oracle"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("[oracle]"));
    assert_eq!(run(&["presets", "--show", "missing"]).status.code(), Some(2));
}
