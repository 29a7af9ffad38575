use std::path::PathBuf;
use std::process::Command;

use hyperasym_cli::{run_sweep, ProblemConfig, CSV_HEADER};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperasym"))
}

fn reference_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/reference.toml")
}

fn temp_config(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperasym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn reference_text() -> String {
    std::fs::read_to_string(reference_path()).unwrap()
}

#[test]
fn expand_dump_has_reference_schedule() {
    let out = bin()
        .args(["expand", "--level", "1", "--config"])
        .arg(reference_path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dump: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let first = &dump["entries"][0];
    assert_eq!(first["t_abs"], 0.025);
    let sched = &first["expansion"]["schedule"];
    assert_eq!(sched["ns"][0], 10);
    assert_eq!(sched["sigmas"][0], 0.95);
    assert_eq!(first["expansion"]["level"], 1);
}

#[test]
fn level_zero_dump_is_taylor_part() {
    let out = bin()
        .args(["expand", "--level", "0", "--config"])
        .arg(reference_path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let dump: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let psi = dump["entries"][0]["expansion"]["psi"].as_array().unwrap();
    assert_eq!(psi.len(), 10);
    // phi^{(2l)}(0)/l! = (2l)!/l!
    let mut expect = 1.0f64;
    for (l, p) in psi.iter().enumerate() {
        if l > 0 {
            expect *= (2 * l) as f64 * (2 * l - 1) as f64 / l as f64;
        }
        let re = p[0].as_f64().unwrap();
        assert!((re - expect).abs() <= 1e-12 * expect, "l = {l}: {re}");
    }
}

#[test]
fn stokes_direction_exits_with_validation_code() {
    let text = reference_text().replace("theta = 3.141592653589793", "theta = 0.05");
    let p = temp_config("stokes.toml", &text);
    let out = bin().args(["expand", "--config"]).arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Stokes"));
    let out = bin()
        .args(["sweep", "--theta", "0.0", "--config"])
        .arg(reference_path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_t_grid_exits_with_validation_code() {
    let text = reference_text().replace("t_grid = [0.025, 0.0225, 0.02]", "t_grid = []");
    let p = temp_config("empty.toml", &text);
    let out = bin().args(["verify", "--config"]).arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn verify_passes_and_catches_wrong_c_q() {
    let out = bin()
        .args(["verify", "--config"])
        .arg(reference_path())
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
    let bad = format!("{}\n[overrides]\nc_q = 2.0\n", reference_text());
    let p = temp_config("bad_cq.toml", &bad);
    let out = bin().args(["verify", "--config"]).arg(&p).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(2));
    assert!(text.contains("FAIL kernel_envelope"), "{text}");
}

#[test]
fn sweep_writes_csv_file() {
    let out_path = std::env::temp_dir().join(format!("hyperasym-sweep-{}.csv", std::process::id()));
    let status = bin()
        .args(["sweep", "--level", "1", "--config"])
        .arg(reference_path())
        .arg("--out")
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // 3 t values x 2 levels
    assert_eq!(lines.count(), 6);
    let _ = std::fs::remove_file(out_path);
}

#[test]
fn sweep_errors_do_not_grow_with_level() {
    let rows = run_sweep(&ProblemConfig::reference()).unwrap();
    assert_eq!(rows.len(), 9);
    for block in rows.chunks(3) {
        assert!(block.iter().all(|r| r.t_abs == block[0].t_abs));
        let levels: Vec<usize> = block.iter().map(|r| r.report.level).collect();
        assert_eq!(levels, [0, 1, 2]);
        assert!(block
            .windows(2)
            .all(|w| w[1].report.abs_err <= w[0].report.abs_err));
    }
}

#[test]
fn sweep_json_format() {
    let out = bin()
        .args(["sweep", "--level", "0", "--format", "json", "--config"])
        .arg(reference_path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
    assert!(rows[0]["report"]["abs_err"].as_f64().unwrap() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        theta in 0.5f64..5.5,
        delta in 0.01f64..0.3,
        t_grid in proptest::collection::vec(1e-4f64..0.1, 1..5),
        levels in 0usize..4,
        eps in proptest::option::of(0.001f64..0.1),
        pole in (0.5f64..3.0, -1.0f64..1.0),
        simple in proptest::option::of((2u32..5, 1u32..3)),
    ) {
        let mut cfg = ProblemConfig::reference();
        cfg.theta = theta;
        cfg.delta = delta;
        cfg.t_grid = t_grid;
        cfg.levels = levels;
        cfg.eps = eps;
        cfg.datum.poles[0].location = [pole.0, pole.1];
        if let Some((q, beta)) = simple {
            cfg.equation = hyperasym_cli::EquationSpec::Simple { lambda: [1.0, 0.5], q, beta };
        }
        let again = ProblemConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
