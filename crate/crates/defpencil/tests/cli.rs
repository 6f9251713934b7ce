//! End-to-end tests of the `defpencil` binary: file round trips, record
//! reproducibility, exit codes and CSV invariants.

mod common;

use defpencil::pencil_file;
use defpencil::records::RunRecord;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_defpencil")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn gen_pencil(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec![
        "gen",
        "--n",
        "6",
        "--eigs",
        "-0.8,-0.3,0.1,0.4,0.7,0.95",
        "--cond",
        "3",
        "--seed",
        "11",
        "--out",
    ];
    let out_s = path_str(&out);
    args.push(&out_s);
    args.extend_from_slice(extra);
    run_ok(&args);
    out
}

#[test]
fn gen_writes_metadata_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_pencil(dir.path(), "p.pencil", &[]);
    let file = pencil_file::read_file(&path).unwrap();
    assert_eq!(file.pencil.dim(), 6);
    assert_eq!(file.meta("seed"), Some("11"));
    assert_eq!(file.meta("recipe"), Some("explicit"));
    assert!(file.meta("gamma").unwrap().parse::<f64>().unwrap() > 0.0);

    // Hex encoding carries the identical pencil.
    let hex_path = gen_pencil(dir.path(), "p_hex.pencil", &["--hex"]);
    let hex_file = pencil_file::read_file(&hex_path).unwrap();
    assert_eq!(hex_file.pencil.a(), file.pencil.a());
    assert_eq!(hex_file.pencil.b(), file.pencil.b());
}

#[test]
fn fig3_preset_records_the_repeated_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.pencil");
    run_ok(&[
        "gen",
        "--preset",
        "fig3",
        "--seed",
        "2",
        "--out",
        &path_str(&out),
    ]);
    let file = pencil_file::read_file(&out).unwrap();
    assert_eq!(file.pencil.dim(), 10);
    assert_eq!(file.meta("repeated_eigenvalue"), Some("1"));
    let eigs: Vec<f64> = file
        .meta("eigs")
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(eigs.iter().filter(|&&e| e == 1.0).count(), 2);
}

#[test]
fn solve_record_is_reproducible_modulo_timings() {
    let dir = tempfile::tempdir().unwrap();
    let pencil = gen_pencil(dir.path(), "p.pencil", &[]);
    let rec1 = dir.path().join("r1.json");
    let rec2 = dir.path().join("r2.json");
    for rec in [&rec1, &rec2] {
        run_ok(&[
            "solve",
            "--pencil",
            &path_str(&pencil),
            "--xi",
            "1e-6",
            "--seed",
            "5",
            "--out",
            &path_str(rec),
        ]);
    }
    let r1 = RunRecord::from_json(&std::fs::read_to_string(&rec1).unwrap()).unwrap();
    let r2 = RunRecord::from_json(&std::fs::read_to_string(&rec2).unwrap()).unwrap();
    assert_ne!(r1.timings, r2.timings, "timings should differ across runs");
    assert_eq!(r1.without_timings(), r2.without_timings());
    let out = r1.output.expect("diagonalization present");
    assert!(out.residual_a <= 1e-6 && out.residual_b <= 1e-6);

    // A different seed produces a different X.
    let rec3 = dir.path().join("r3.json");
    run_ok(&[
        "solve",
        "--pencil",
        &path_str(&pencil),
        "--xi",
        "1e-6",
        "--seed",
        "6",
        "--out",
        &path_str(&rec3),
    ]);
    let r3 = RunRecord::from_json(&std::fs::read_to_string(&rec3).unwrap()).unwrap();
    assert_ne!(r2.without_timings(), r3.without_timings());
}

#[test]
fn verify_accepts_good_records_and_rejects_tampered_ones() {
    let dir = tempfile::tempdir().unwrap();
    let pencil = gen_pencil(dir.path(), "p.pencil", &[]);
    let rec = dir.path().join("r.json");
    run_ok(&[
        "solve",
        "--pencil",
        &path_str(&pencil),
        "--xi",
        "1e-6",
        "--seed",
        "5",
        "--out",
        &path_str(&rec),
    ]);
    run_ok(&[
        "verify",
        "--pencil",
        &path_str(&pencil),
        "--record",
        &path_str(&rec),
    ]);

    // Corrupt one eigenvalue entry; verification must fail with the
    // convergence/verification exit code.
    let mut record = RunRecord::from_json(&std::fs::read_to_string(&rec).unwrap()).unwrap();
    if let Some(out) = record.output.as_mut() {
        out.lambda_a[0] += 0.5;
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, record.to_json()).unwrap();
    let out = run(&[
        "verify",
        "--pencil",
        &path_str(&pencil),
        "--record",
        &path_str(&bad),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_codes_follow_the_documented_contract() {
    let dir = tempfile::tempdir().unwrap();
    let pencil = gen_pencil(dir.path(), "p.pencil", &[]);
    // Missing file: I/O error -> 4.
    let out = run(&[
        "solve",
        "--pencil",
        "/nonexistent/xyz.pencil",
        "--out",
        &path_str(&dir.path().join("o.json")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    // xi violating the precondition xi < n gamma / sqrt 2 -> 2.
    let out = run(&[
        "solve",
        "--pencil",
        &path_str(&pencil),
        "--xi",
        "0.9999",
        "--gamma-lb",
        "1e-9",
        "--seed",
        "1",
        "--out",
        &path_str(&dir.path().join("o.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Pseudospec with eps at or above gamma -> 2.
    let out = run(&[
        "pseudospec",
        "--pencil",
        &path_str(&pencil),
        "--eps",
        "10",
        "--lo",
        "-1",
        "--hi",
        "1",
        "--out",
        &path_str(&dir.path().join("ps.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn parse_csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap().to_string();
    assert!(comment.starts_with("# produced by defpencil"));
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|t| t.to_string()).collect())
        .collect();
    (header, rows)
}

#[test]
fn pseudospec_output_is_monotone_in_eps() {
    let dir = tempfile::tempdir().unwrap();
    let pencil = gen_pencil(dir.path(), "p.pencil", &[]);
    let csv1 = dir.path().join("ps1.csv");
    let csv2 = dir.path().join("ps2.csv");
    for (eps, csv) in [("0.005", &csv1), ("0.02", &csv2)] {
        run_ok(&[
            "pseudospec",
            "--pencil",
            &path_str(&pencil),
            "--eps",
            eps,
            "--lo",
            "-1.1",
            "--hi",
            "1.2",
            "--samples",
            "200",
            "--out",
            &path_str(csv),
        ]);
    }
    let (h1, rows1) = parse_csv(&csv1);
    let (_, rows2) = parse_csv(&csv2);
    assert_eq!(h1, "z,sigma_min,threshold,member");
    assert_eq!(rows1.len(), 200);
    let mut members1 = 0;
    for (r1, r2) in rows1.iter().zip(&rows2) {
        assert_eq!(r1[0], r2[0]);
        if r1[3] == "true" {
            members1 += 1;
            assert_eq!(
                r2[3], "true",
                "membership must be monotone in eps at z = {}",
                r1[0]
            );
        }
    }
    assert!(
        members1 > 0,
        "mesh should hit the pseudospectrum near eigenvalues"
    );

    // Eigenvalue rows are members: sample exactly at one eigenvalue.
    let one = dir.path().join("one.csv");
    run_ok(&[
        "pseudospec",
        "--pencil",
        &path_str(&pencil),
        "--eps",
        "0.005",
        "--lo",
        "0.1",
        "--hi",
        "0.4",
        "--samples",
        "2",
        "--out",
        &path_str(&one),
    ]);
    let (_, rows) = parse_csv(&one);
    assert_eq!(rows[0][3], "true");
    assert_eq!(rows[1][3], "true");
}

#[test]
fn shatter_with_zero_mu_reports_the_unperturbed_gap() {
    let dir = tempfile::tempdir().unwrap();
    let pencil = gen_pencil(dir.path(), "p.pencil", &[]);
    let csv = dir.path().join("sh.csv");
    run_ok(&[
        "shatter",
        "--pencil",
        &path_str(&pencil),
        "--mu",
        "0",
        "--trials",
        "4",
        "--seed",
        "9",
        "--spacing",
        "1e-3",
        "--eps",
        "1e-5",
        "--out",
        &path_str(&csv),
    ]);
    let (_, rows) = parse_csv(&csv);
    assert_eq!(rows.len(), 4);
    let file = pencil_file::read_file(&pencil).unwrap();
    let sol = defpencil::oracle::reference_solve(&file.pencil).unwrap();
    let gap = defpencil::pencil::min_eigenvalue_gap(&sol.eigenvalues).unwrap();
    for row in &rows {
        let got: f64 = row[4].parse().unwrap();
        assert!((got - gap).abs() <= 1e-12 * gap.max(1.0));
    }
}

#[test]
fn shatter_pure_noise_mode_leaves_oracle_columns_blank_when_indefinite() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    run_ok(&[
        "shatter",
        "--pure-noise",
        "--n",
        "24",
        "--mu",
        "1",
        "--trials",
        "6",
        "--seed",
        "3",
        "--out",
        &path_str(&csv),
    ]);
    let (header, rows) = parse_csv(&csv);
    assert!(header.starts_with("trial,norm_v1,norm_v2,crawford_gamma"));
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let gamma: f64 = row[3].parse().unwrap();
        assert!(gamma >= 0.0);
        if gamma == 0.0 {
            assert!(row[4].is_empty(), "indefinite trials leave the gap blank");
        }
    }
}

#[test]
fn bench_reports_split_counts_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    run_ok(&[
        "bench",
        "--sizes",
        "1,4,8",
        "--seed",
        "7",
        "--out",
        &path_str(&csv),
    ]);
    let (_, rows) = parse_csv(&csv);
    // n = 1: no splits at all.
    let n1: Vec<_> = rows.iter().filter(|r| r[0] == "1").collect();
    assert_eq!(n1.len(), 1);
    assert_eq!(n1[0][3], "0");
    // n = 8 totals: 7 splits (m - 1), one split at the top level.
    let n8_total: Vec<_> = rows
        .iter()
        .filter(|r| r[0] == "8" && r[2] == "all")
        .collect();
    assert_eq!(n8_total[0][3], "7");
    let n8_top: Vec<_> = rows.iter().filter(|r| r[0] == "8" && r[2] == "0").collect();
    assert_eq!(n8_top[0][3], "1");
    // Depth grows roughly like log2 n: depth rows 0..=2 exist for n = 8.
    for d in ["0", "1", "2"] {
        assert!(rows.iter().any(|r| r[0] == "8" && r[2] == d));
    }
}

#[test]
fn solve_supports_explicit_practical_grid_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let pencil = gen_pencil(dir.path(), "p.pencil", &[]);
    let rec = dir.path().join("r.json");
    run_ok(&[
        "--threads",
        "2",
        "solve",
        "--pencil",
        &path_str(&pencil),
        "--xi",
        "1e-6",
        "--grid-lo",
        "-1.5",
        "--grid-hi",
        "1.5",
        "--grid-spacing",
        "0.004",
        "--eps",
        "1e-7",
        "--seed",
        "5",
        "--out",
        &path_str(&rec),
    ]);
    let r = RunRecord::from_json(&std::fs::read_to_string(&rec).unwrap()).unwrap();
    assert!(r.success);
    let out = r.output.unwrap();
    assert!(out.residual_a <= 1e-6 && out.residual_b <= 1e-6);
}
