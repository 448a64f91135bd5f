//! Command-line behavior: exit codes, output files, determinism of the
//! binary, and tabulated-data ingestion.

use std::path::Path;
use std::process::Command;

use halfspace_cli::{config, driver};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_halfspace"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const RTE2_SMALL: &str = "\
[model]
kind = rte2
[discretization]
n = 6
[boundary]
incoming = polynomial 0 2 ; 0 1
[output]
x_points = 9
seed = 7
";

#[test]
fn solve_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", RTE2_SMALL);
    let out = dir.path().join("out");
    let status = binary()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["solution.csv", "boundary_slice.csv", "endstate.csv", "diagnostics.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    // No temporary files left behind.
    for entry in std::fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(!name.to_string_lossy().ends_with(".tmp"), "{name:?}");
    }
    let solution = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(solution.starts_with("x,mu,species,f_damped,f_recovered\n"));
}

#[test]
fn invalid_accommodation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "[model]\nkind = rte2\n[boundary]\nalpha_d = 0.6\nalpha_s = 0.45\n",
    );
    let output = binary().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("accommodation"), "{stderr}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "[model]\nkind = rte2\nwobble = 1\n");
    let output = binary().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn absurd_damping_exits_3_naming_coercivity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "hot.cfg",
        "[model]\nkind = rte2\n[discretization]\nn = 6\nalpha = 1e6\n",
    );
    let output = binary().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("coercive"), "{stderr}");
}

#[test]
fn validate_small_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", RTE2_SMALL);
    let out = dir.path().join("v");
    let output = binary()
        .args(["validate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stdout));
    let report = std::fs::read_to_string(out.join("validation.csv")).unwrap();
    assert!(report.lines().count() > 10);
    assert!(!report.contains(",false"));
}

#[test]
fn modes_dump_matches_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", RTE2_SMALL);
    let out = dir.path().join("m");
    let status = binary()
        .args(["modes", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--dump-basis")
        .status()
        .unwrap();
    assert!(status.success());
    let modes = std::fs::read_to_string(out.join("modes.csv")).unwrap();
    // n = 6, two species: 12 decaying + 12 growing + 2 degenerate + header.
    assert_eq!(modes.lines().count(), 1 + 26);
    assert_eq!(modes.matches("decaying").count(), 12);
    assert_eq!(modes.matches("growing").count(), 12);
    assert_eq!(modes.matches("degenerate").count(), 2);
    assert!(out.join("nullspace.csv").is_file());
    assert!(out.join("basis_recurrence.csv").is_file());
    assert!(out.join("quadrature.csv").is_file());
}

#[test]
fn convergence_errors_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", RTE2_SMALL);
    let out = dir.path().join("c");
    let status = binary()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--n-list", "4,8,16"])
        .status()
        .unwrap();
    assert!(status.success());
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let mut q_errors = Vec::new();
    for line in table.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[1] == "2" {
            q_errors.push(cells[2].parse::<f64>().unwrap());
        }
    }
    assert_eq!(q_errors.len(), 2);
    assert!(q_errors[0] > q_errors[1]);
}

/// Tabulated incoming data matched to the outgoing nodes reproduces the
/// equivalent polynomial specification bit for bit.
#[test]
fn tabulated_incoming_matches_polynomial() {
    let dir = tempfile::tempdir().unwrap();
    let base = "\
[model]
kind = bgk2d
[discretization]
n = 4
k = 4
[output]
x_points = 5
";
    let poly_cfg = config::parse(&format!(
        "{base}[boundary]\nincoming = polynomial 0.5 1.0\n"
    ))
    .unwrap();
    let model = driver::build_model(&poly_cfg, None).unwrap();
    let grid = model.grid();
    // Values of 0.5 + mu at the outgoing nodes.
    let mut table = String::from("mu,vy,species,value\n");
    for &t in grid.positive() {
        table.push_str(&format!(
            "{:.17e},{:.17e},1,{:.17e}\n",
            grid.mu_of(t),
            grid.trans_of(t),
            0.5 + grid.mu_of(t)
        ));
    }
    let table_path = dir.path().join("h.csv");
    std::fs::write(&table_path, table).unwrap();
    let tab_cfg = config::parse(&format!(
        "{base}[boundary]\nincoming = tabulated {}\n",
        table_path.display()
    ))
    .unwrap();

    let run_poly = driver::run_solve(&poly_cfg).unwrap();
    let run_tab = driver::run_solve(&tab_cfg).unwrap();
    assert_eq!(run_poly.damped.coefficients, run_tab.damped.coefficients);
}

#[test]
fn tabulated_incoming_rejects_missing_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("h.csv");
    std::fs::write(&table_path, "mu,species,value\n0.5,1,1.0\n").unwrap();
    let cfg = config::parse(&format!(
        "[model]\nkind = rte2\n[discretization]\nn = 4\n[boundary]\nincoming = tabulated {}\n",
        table_path.display()
    ))
    .unwrap();
    let err = driver::run_solve(&cfg).err().expect("must fail");
    assert_eq!(err.exit_code(), 2, "{err}");
}
