//! Exit codes and artifacts of the `oseen` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use oseen_core::linalg::read_matrix_market;
use oseen_core::picard::{BenchmarkProblem, Discretization};
use oseen_core::assembly::AdvectionField;
use oseen_core::fe::ElementOrder;

fn oseen(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_oseen"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn run_writes_artifacts_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--re", "100", "--h", "1/4", "--order", "2", "--output", "a", "--vtk"];
    let (code, stdout) = oseen(&args, dir.path());
    assert_eq!(code, 0, "{stdout}");
    let a = dir.path().join("a");
    for f in ["report.csv", "solution.csv", "history.csv", "streamfunction.csv", "profiles.csv", "solution.vtk"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    assert!(report.contains("# problem=cavity") && report.contains("# units"));
    assert!(data_lines(&a.join("report.csv"))[0].starts_with("picard_iters,avg_gmres"));
    assert_eq!(data_lines(&a.join("solution.csv"))[0], "node,x,y,u1,u2,p");

    let mut args2 = args;
    args2[8] = "b";
    assert_eq!(oseen(&args2, dir.path()).0, 0);
    for f in ["report.csv", "solution.csv", "history.csv", "streamfunction.csv", "profiles.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("step.cfg"),
        "problem = step\nre = 50\nlength = 3\nh = 1/2\ngamma = 0.3\noutput = s\n",
    )
    .unwrap();
    let (code, _) = oseen(&["run", "--config", "step.cfg", "--gamma", "0.1"], dir.path());
    assert_eq!(code, 0);
    let report = fs::read_to_string(dir.path().join("s/report.csv")).unwrap();
    assert!(report.contains("# gamma=0.1\n") && report.contains("# length=3\n"));
    assert!(dir.path().join("s/step_statistics.csv").exists());
}

#[test]
fn picard_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = oseen(
        &["run", "--re", "3200", "--h", "1/8", "--order", "1", "--gamma", "0", "--output", "o"],
        dir.path(),
    );
    assert_eq!(code, 2);
    assert_eq!(stdout.trim(), "−");
    let rows = data_lines(&dir.path().join("o/report.csv"));
    assert_eq!(rows[1].split(',').nth(3), Some("0"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(oseen(&["run", "--preconditioner", "jacobi"], dir.path()).0, 1);
    assert_eq!(oseen(&["run", "--order", "3"], dir.path()).0, 1);
    assert_eq!(oseen(&["run", "--bogus"], dir.path()).0, 1);
    assert_eq!(oseen(&["table", "1", "--h-list", ""], dir.path()).0, 1);
    assert_eq!(oseen(&["table", "7"], dir.path()).0, 1);
    assert_eq!(oseen(&["--help"], dir.path()).0, 0);
}

#[test]
fn table_cells_complete() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = oseen(&["table", "1", "--h-list", "1/8,1/16", "--output", "t1.csv"], dir.path());
    assert_eq!(code, 0);
    let rows = data_lines(&dir.path().join("t1.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("h,al_q1_gamma0.1,al_q1_gamma0,"));
    for row in &rows[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 9);
        for c in &cells[1..] {
            assert!(c.ends_with(')') || *c == "−", "unexpected cell {c}");
        }
    }
}

#[test]
fn table_budget_marks_timeouts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = oseen(
        &["table", "5", "--h-list", "1/16", "--timeout-minutes", "0.0001", "--output", "t.csv"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let rows = data_lines(&dir.path().join("t.csv"));
    assert!(rows[1].split(',').skip(1).all(|c| c == "timeout"), "{}", rows[1]);
}

#[test]
fn probes_report_bounds_and_guard() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = oseen(&["probe", "eigs", "--h", "1/8", "--nu", "0.02", "--gamma", "0.1"], dir.path());
    assert_eq!(code, 0);
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').filter_map(|v| v.parse().ok()).collect();
    // nu, gamma, h, order, eigenvalue count, min_real, max_modulus, ratio
    assert!(row[6] <= 1.0 + 1e-8 && row[5] > 0.0);

    let (code, out) = oseen(&["probe", "fov", "--h", "1/8", "--nu", "0.02", "--gamma", "0.1"], dir.path());
    assert_eq!(code, 0);
    let cols: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert!(cols[6].parse::<f64>().unwrap() >= 0.5 - 1e-8);

    let (code, _) = oseen(&["probe", "lemma42", "--h", "1/4", "--trials", "20"], dir.path());
    assert_eq!(code, 0);
    assert!(dir.path().join("probe_lemma42.csv").exists());

    assert_eq!(oseen(&["probe", "fov", "--h", "1/64", "--order", "2"], dir.path()).0, 1);
}

#[test]
fn exported_blocks_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = oseen(
        &["export-matrices", "--h", "1/4", "--gamma", "0.2", "--re", "50", "--preconditioner", "pcd", "--output", "m"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let disc = Discretization::new(&BenchmarkProblem::DrivenCavity { re: 50.0 }, 0.25, ElementOrder::Q1).unwrap();
    let sys = disc
        .system(0.04, 0.2, &AdvectionField::zero(disc.dofmap.n_full_velocity()), true)
        .unwrap();
    let read = |name: &str| {
        let f = fs::File::open(dir.path().join("m").join(name)).unwrap();
        read_matrix_market(std::io::BufReader::new(f)).unwrap()
    };
    for (name, a) in [("a_gamma.mtx", &sys.a_gamma), ("b.mtx", &sys.b), ("c.mtx", &sys.c), ("mass.mtx", &sys.mass)] {
        let back = read(name);
        assert!(back.add(1.0, a, -1.0).unwrap().max_abs() == 0.0, "{name}");
    }
    assert!(dir.path().join("m/f_p.mtx").exists());
}
