use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_duffing-qsim");

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.json"), config).unwrap();
        Self { dir }
    }

    fn exec(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .arg("--config")
            .arg(self.dir.path().join("config.json"))
            .arg("--out")
            .arg(self.out())
            .output()
            .unwrap()
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap()
    }
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const FIG1: &str = r#"{
  "scaled": {"lambda": 0.027, "beta": 0.0341, "eta": 0.0, "nbar": 0},
  "grids": {"phase_space": {"q_min": -1.6, "q_max": 1.6, "p_min": -1.6, "p_max": 1.6, "nq": 101, "np": 101}}
}"#;

#[test]
fn landscape_grid_and_extrema() {
    let run = Run::new(FIG1);
    let out = run.exec(&["landscape"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = run.read("landscape.csv");
    assert!(text.starts_with("# duffing-qsim v"));
    assert_eq!(text.lines().nth(1), Some("kind,Q,P,g"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 10201 + 3);
    assert_eq!(rows.iter().filter(|r| r[0] == "grid").count(), 10201);
    let kinds: Vec<&str> = rows[10201..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(kinds, ["max", "saddle", "min"]);
}

#[test]
fn landscape_adds_damped_fixed_points() {
    let run = Run::new(&FIG1.replace("\"eta\": 0.0", "\"eta\": 0.03"));
    assert_eq!(code(&run.exec(&["landscape"])), 0);
    let rows = data_rows(&run.read("landscape.csv"));
    let fp: Vec<&str> = rows.iter().filter(|r| r[0].starts_with("fixed-point")).map(|r| r[0].as_str()).collect();
    assert_eq!(fp, ["fixed-point-low", "fixed-point-unstable", "fixed-point-high"]);
}

#[test]
fn landscape_undriven_limit() {
    let run = Run::new(&FIG1.replace("\"beta\": 0.0341", "\"beta\": 0"));
    let out = run.exec(&["landscape"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&run.read("landscape.csv"));
    assert!(rows.len() > 10201);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn malformed_grid_is_a_config_error() {
    let bad = FIG1.replace("\"nq\": 101", "\"nq\": 1");
    let run = Run::new(&bad);
    let out = run.exec(&["landscape"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config.json:3:"), "{err}");
}

#[test]
fn unknown_key_and_syntax_errors_carry_line_numbers() {
    let run = Run::new(&FIG1.replace("\"nbar\"", "\"n_bar\""));
    let out = run.exec(&["landscape"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json:2:"));

    let run = Run::new("{\n \"scaled\": {\"lambda\": 0.027,,}\n}");
    let out = run.exec(&["landscape"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json:2:"));
}

#[test]
fn missing_phase_space_grid() {
    let run = Run::new(r#"{"scaled": {"lambda": 0.027, "beta": 0.0341, "eta": 0.0, "nbar": 0}}"#);
    assert_eq!(code(&run.exec(&["landscape"])), 2);
}

#[test]
fn spectrum_writes_featured_densities() {
    let run = Run::new(&FIG1.replace(
        "\"grids\"",
        "\"degeneracy_scan\": {\"beta_lo\": 0.029, \"beta_hi\": 0.039, \"points\": 41}, \"grids\"",
    ));
    let out = run.exec(&["spectrum", "--truncation", "112"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["near_max", "near_min", "near_saddle", "outer_torus"] {
        let rows = data_rows(&run.read(&format!("density_{name}.csv")));
        assert_eq!(rows.len(), 800);
    }
    let levels = run.read("levels.csv");
    assert_eq!(levels.lines().nth(1), Some("index,g_n,region"));
    assert_eq!(data_rows(&levels).len(), 112);
    assert_eq!(data_rows(&run.read("potential_cut.csv")).len(), 800);
    assert!(!data_rows(&run.read("anticrossings.csv")).is_empty());
}

#[test]
fn spectrum_single_well() {
    let run = Run::new(r#"{"scaled": {"lambda": 0.05, "beta": 0.2, "eta": 0.0, "nbar": 0}}"#);
    let out = run.exec(&["spectrum"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("single-well"));
    assert!(run.out().join("density_near_min.csv").exists());
    assert!(!run.out().join("density_near_max.csv").exists());
    let rows = data_rows(&run.read("levels.csv"));
    assert!(rows.iter().all(|r| r[2] == "near-min" || r[2] == "unclassified"));
}

#[test]
fn fixed_point_table() {
    let run = Run::new(
        r#"{"scaled": {"lambda": 0.027, "beta": 0.12, "eta": 0.03, "nbar": 0},
            "grids": {"eta": {"start": 0.005, "stop": 0.15, "step": 0.005}}}"#,
    );
    assert_eq!(code(&run.exec(&["fixed-points"])), 0);
    let text = run.read("fixed_points.csv");
    assert_eq!(text.lines().nth(1), Some("eta,branch,Q,P,r,stable"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 90);
    // the whole range lies inside the bistable window of β = 0.12
    assert!(rows.iter().all(|r| r[5] != "absent"));
    let stable: Vec<_> = rows.iter().filter(|r| r[5] == "stable").map(|r| r[1].as_str()).collect();
    assert_eq!(stable.len(), 60);
    assert!(stable.iter().all(|b| *b == "low" || *b == "high"));
}

#[test]
fn fixed_points_past_the_cusp() {
    let run = Run::new(
        r#"{"scaled": {"lambda": 0.027, "beta": 0.12, "eta": 0.03, "nbar": 0}, "grids": {"eta": [0.5, 0.6]}}"#,
    );
    assert_eq!(code(&run.exec(&["fixed-points"])), 0);
    let rows = data_rows(&run.read("fixed_points.csv"));
    assert_eq!(rows.len(), 6);
    for cell in rows.chunks(3) {
        assert_eq!(cell.iter().filter(|r| r[5] == "absent").count(), 2);
    }
    let late: Vec<_> = rows.iter().filter(|r| r[0].starts_with("6.")).collect();
    assert_eq!(late.len(), 3);
}

#[test]
fn single_damping_fixed_points() {
    let run = Run::new(r#"{"scaled": {"lambda": 0.027, "beta": 0.12, "eta": 0.03, "nbar": 0}}"#);
    assert_eq!(code(&run.exec(&["fixed-points"])), 0);
    let present = data_rows(&run.read("fixed_points.csv")).iter().filter(|r| r[5] != "absent").count();
    assert!((1..=3).contains(&present));
}

const WP: &str = r#"{"scaled": {"lambda": 0.027, "beta": 0.12, "eta": 0.03, "nbar": 0}, "grids": {"temperature": [0]}}"#;

#[test]
fn eta_eff_zero_temperature() {
    let run = Run::new(WP);
    let out = run.exec(&["eta-eff"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = run.read("eta_eff.csv");
    assert_eq!(text.lines().nth(1), Some("eta,T,branch,Q,P,eta_eff,delta_eta,weight,status"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "low");
    assert_eq!(rows[1][2], "high");
    assert_eq!(rows[1][8], "ok");
}

#[test]
fn eta_eff_json_provenance() {
    let run = Run::new(WP);
    assert_eq!(code(&run.exec(&["eta-eff", "--format", "json", "--truncation", "90"])), 0);
    let text = run.read("eta_eff.json");
    let (header, body) = text.split_once('\n').unwrap();
    assert!(header.starts_with("# duffing-qsim v"));
    let doc: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(doc["N"], 90);
    assert_eq!(doc["method"], "null-space");
    let high = &doc["rows"][1];
    assert!(high["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(high["N"], 90);
}

#[test]
fn eta_eff_outside_the_window() {
    let run = Run::new(
        r#"{"scaled": {"lambda": 0.027, "beta": 0.12, "eta": 0.5, "nbar": 0}, "grids": {"temperature": [0]}}"#,
    );
    assert_eq!(code(&run.exec(&["eta-eff", "--truncation", "90"])), 0);
    let rows = data_rows(&run.read("eta_eff.csv"));
    assert_eq!(rows[1][8], "absent");
}

#[test]
fn exit_codes_for_failed_cells() {
    let all_fail = Run::new(
        r#"{"scaled": {"lambda": 0.1, "beta": 0.12, "eta": 0.0, "nbar": 0}, "grids": {"temperature": [0]}}"#,
    );
    assert_eq!(code(&all_fail.exec(&["eta-eff"])), 3);
    let partial = Run::new(
        r#"{"scaled": {"lambda": 0.1, "beta": 0.12, "eta": 0.1, "nbar": 0}, "grids": {"eta": [0, 0.1], "temperature": [0]}}"#,
    );
    assert_eq!(code(&partial.exec(&["eta-eff"])), 4);
    let rows = data_rows(&partial.read("eta_eff.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows[0][8].starts_with("error"));
}

#[test]
fn lab_frame_configuration() {
    let run = Run::new(
        r#"{"lab_frame": {"m": 1, "Omega": 1, "gamma": 0.001, "F0": 0.0005, "nu": 0.99, "eta": 0.1, "T_over_Omega": 0}}"#,
    );
    let out = run.exec(&["fixed-points"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn job_count_does_not_change_output() {
    let config = r#"{"scaled": {"lambda": 0.1, "beta": 0.12, "eta": 0.1, "nbar": 0},
        "grids": {"eta": [0.05, 0.1, 0.2], "temperature": [0, 1]}}"#;
    let a = Run::new(config);
    let b = Run::new(config);
    assert_eq!(code(&a.exec(&["eta-eff", "--jobs", "1"])), 0);
    assert_eq!(code(&b.exec(&["eta-eff", "--jobs", "3"])), 0);
    assert_eq!(tree(&a.out()), tree(&b.out()));
}

#[test]
fn overrides_enter_the_hash() {
    let a = Run::new(WP);
    let b = Run::new(WP);
    assert_eq!(code(&a.exec(&["fixed-points"])), 0);
    assert_eq!(code(&b.exec(&["fixed-points", "--method", "long-time"])), 0);
    let first = |r: &Run| r.read("fixed_points.csv").lines().next().unwrap().to_string();
    assert_ne!(first(&a), first(&b));
}
