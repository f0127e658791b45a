//! End-to-end tests of the compiled binary: exit codes, output shapes, and
//! the byte-determinism guarantee.

use std::path::Path;
use std::process::{Command, Output};

use tiecop::copulas::{tau_inverse, CopulaSpec, Family};
use tiecop::hydro::{format_iso_date, parse_iso_date, synthetic_events};
use tiecop::numeric::stats::stream_rng;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tiecop"));
    c.env("TIECOP_THREADS", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_clayton_csv(path: &Path, n: usize, seed: u64) {
    let spec = CopulaSpec::new(Family::Clayton, 2, &[2.0]).unwrap();
    let mut rng = stream_rng(seed, 0);
    let u = spec.sample(n, &mut rng);
    let mut text = String::from("x,y\n");
    for row in &u {
        text.push_str(&format!("{},{}\n", row[0], row[1]));
    }
    std::fs::write(path, text).unwrap();
}

fn write_precip_csv(path: &Path, n: usize, seed: u64) {
    use rand::Rng;
    let mut rng = stream_rng(seed, 1);
    let mut text = String::from("date,precip_mm\n");
    let start = parse_iso_date("2001-01-01").unwrap();
    for day in 0..n as i64 {
        let v: f64 = if rng.random::<f64>() < 0.4 {
            0.0
        } else {
            10.0 * rng.random::<f64>()
        };
        text.push_str(&format!("{},{v}\n", format_iso_date(start + day)));
    }
    std::fs::write(path, text).unwrap();
}

fn write_events_csv(path: &Path, n: usize, seed: u64) {
    let theta = tau_inverse(Family::Frank, 0.5, None).unwrap();
    let events = synthetic_events(Family::Frank, &theta, n, seed).unwrap();
    // mirror the `drought` command's output shape, date column included,
    // so the regress reader is exercised against what it actually chains in
    let mut text = String::from("start_date,duration_months,severity_months\n");
    for (i, e) in events.iter().enumerate() {
        let date = format_iso_date(parse_iso_date("2000-01-01").unwrap() + i as i64);
        text.push_str(&format!("{date},{},{}\n", e.duration_months(), e.severity_months()));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_tau_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_clayton_csv(&data, 400, 42);
    let out = run(&["fit", data.to_str().unwrap(), "--family", "clayton"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["family"], "clayton");
    assert_eq!(v["tainted"], false);
    assert_eq!(v["p"], 1);
    let tau = v["tau_hat"].as_f64().unwrap();
    assert!((tau - 0.5).abs() < 0.08, "tau_hat {tau}");
}

#[test]
fn fit_informed_without_atoms_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_clayton_csv(&data, 50, 1);
    let out = run(&["fit", data.to_str().unwrap(), "--family", "clayton", "--mode", "informed"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("atom declarations"));
}

#[test]
fn fit_informed_accepts_inline_atom_declarations() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_clayton_csv(&data, 200, 7);
    let out = run(&[
        "fit",
        data.to_str().unwrap(),
        "--family",
        "clayton",
        "--mode",
        "informed",
        "--atoms",
        "x=",
        "--atoms",
        "y=",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
}

#[test]
fn malformed_csv_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "x,y\n0.5,0.25\n0.7,oops\n").unwrap();
    let out = run(&["fit", data.to_str().unwrap(), "--family", "clayton"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("column y"), "{err}");
    assert!(err.contains("oops"), "{err}");
}

#[test]
fn identify_bernoulli_margins_counts_student_out() {
    let out = run(&["identify", "--family", "student", "--bernoulli-margins"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["q_n"], 1);
    assert_eq!(v["p"], 2);
    assert_eq!(v["identifiable"], false);
    assert!(v["verdict"].as_str().unwrap().contains("p > q_n"));
}

#[test]
fn identify_clayton_on_continuous_data_is_identifiable() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_clayton_csv(&data, 120, 3);
    let out = run(&[
        "identify",
        data.to_str().unwrap(),
        "--family",
        "clayton",
        "--box",
        "0.5:6",
        "--delta",
        "1.0",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["identifiable"], true);
    assert!(v["centers"].as_array().unwrap().len() >= 4);
}

#[test]
fn simulate_single_cell_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("mc.csv");
    let out = run(&[
        "simulate",
        "--exp",
        "exp1",
        "--family",
        "clayton",
        "--n",
        "120",
        "--reps",
        "3",
        "--seed",
        "9",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,exp,n,reps,tau0,seed,rel_bias_pct,rel_rmse_pct,failures,valid"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("clayton,exp1,120,3,0.5,9,"), "{row}");
    assert!(row.ends_with(",0,true"), "{row}");
    assert!(lines.next().is_none());
}

#[test]
fn simulate_table_mode_covers_requested_families() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("table.csv");
    let out = run(&[
        "simulate",
        "--table1",
        "--families",
        "clayton",
        "--n",
        "80",
        "--reps",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for (row, exp) in rows.iter().zip(["exp1", "exp2", "exp3", "exp4", "exp5"]) {
        assert!(row.starts_with(&format!("clayton,{exp},80,2,")), "{row}");
    }
}

#[test]
fn spi_drought_regress_pipeline_chains() {
    let dir = tempfile::tempdir().unwrap();
    let precip = dir.path().join("precip.csv");
    write_precip_csv(&precip, 720, 11);

    let spi_path = dir.path().join("spi.csv");
    let out = run(&["spi", precip.to_str().unwrap(), "--out", spi_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let spi_text = std::fs::read_to_string(&spi_path).unwrap();
    let spi_lines: Vec<&str> = spi_text.lines().collect();
    assert_eq!(spi_lines[0], "date,spi");
    assert_eq!(spi_lines.len() - 1, 720 - 30 + 1);
    // SPI rows start at the first complete window's end date
    assert!(spi_lines[1].starts_with("2001-01-30,"), "{}", spi_lines[1]);

    let events_path = dir.path().join("events.csv");
    let out = run(&[
        "drought",
        precip.to_str().unwrap(),
        "--out",
        events_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let ev_text = std::fs::read_to_string(&events_path).unwrap();
    assert!(ev_text
        .starts_with("start_date,duration_days,duration_months,severity,severity_months\n"));

    // the real corpus is too small to fit, so regress on a synthetic one,
    // exercising the documented column-name chaining
    let synth = dir.path().join("synth_events.csv");
    write_events_csv(&synth, 300, 5);
    let ranking_path = dir.path().join("ranking.json");
    let curves_path = dir.path().join("curves.csv");
    let means_path = dir.path().join("means.csv");
    let out = run(&[
        "regress",
        synth.to_str().unwrap(),
        "--out",
        ranking_path.to_str().unwrap(),
        "--curves-out",
        curves_path.to_str().unwrap(),
        "--means-out",
        means_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&ranking_path).unwrap()).unwrap();
    assert_eq!(v["best_family"], "frank");
    assert_eq!(v["ranked"].as_array().unwrap().len(), 4);
    assert_eq!(v["n_events"], 300);

    let curves = std::fs::read_to_string(&curves_path).unwrap();
    assert!(curves.starts_with("severity_months,duration_months,prob_le\n"));
    let means = std::fs::read_to_string(&means_path).unwrap();
    assert_eq!(means.lines().count(), 1 + v["severities"].as_array().unwrap().len());
}

#[test]
fn demo_bernoulli_reports_both_argmaxes() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let start = std::time::Instant::now();
    let out = run(&["demo-bernoulli", "--curve-out", curve.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!((v["naive_argmax"].as_f64().unwrap() - 4.9439).abs() < 0.01);
    assert!((v["informed_argmax"].as_f64().unwrap() - 2.0).abs() < 0.001);
    let curve_text = std::fs::read_to_string(&curve).unwrap();
    assert!(curve_text.starts_with("theta,naive_objective,atom_aware_objective\n"));
    assert_eq!(curve_text.lines().count(), 1001);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_clayton_csv(&data, 150, 17);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out_path in [&a, &b] {
        let out = run(&[
            "fit",
            data.to_str().unwrap(),
            "--family",
            "gumbel",
            "--seed",
            "4",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn help_exits_zero_and_bad_flags_exit_one() {
    let out = run(&["regress", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("Usage"));

    let out = run(&["fit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["simulate", "--exp", "exp9", "--family", "clayton"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("exp9"));
}

#[test]
fn nonconvergence_and_not_identifiable_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bern.csv");
    let mut text = String::from("a,b\n");
    let mut rng = stream_rng(23, 0);
    use rand::Rng;
    for _ in 0..60 {
        let x: u8 = rng.random_range(0..2);
        let y: u8 = rng.random_range(0..2);
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(&data, text).unwrap();
    // two-parameter family on a one-point grid: refused up front
    let out = run(&["fit", data.to_str().unwrap(), "--family", "student"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("not identifiable"));
}
