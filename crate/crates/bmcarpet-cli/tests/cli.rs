use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_bmcarpet"));
    assert!(p.exists(), "missing binary {}", p.display());
    p = p.canonicalize().unwrap();
    p
}

fn spec_path() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("specs/figure1.toml");
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn info_prints_parameters() {
    let spec = spec_path();
    let out = run(&["info", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("m = 2"));
    assert!(text.contains("n = 3"));
    let sigma: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("sigma = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((sigma - 0.6309298).abs() < 1e-6);
    assert!(text.contains("alpha_min"));
    assert!(text.contains("f_at_alpha_max"));
}

#[test]
fn curve_matches_known_rows() {
    let spec = spec_path();
    let out = run(&[
        "curve",
        "--spec",
        spec.to_str().unwrap(),
        "--t-min",
        "0",
        "--t-max",
        "1",
        "--points",
        "2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let expect = [
        [0.0, 1.3607073, 1.3496838, 1.3496838],
        [1.0, 1.3389157, 1.3389157, 0.0],
    ];
    for (row, want) in rows.iter().zip(expect) {
        for (got, want) in row.iter().zip(want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}\n{text}");
        }
    }
    assert!(text.starts_with("# bmcarpet curve\n"));
    assert!(text.contains("# fingerprint = "));
    assert!(text.contains("t,alpha,f,beta\n"));
}

#[test]
fn f_out_of_range_exits_2() {
    let spec = spec_path();
    let out = run(&["f", "--spec", spec.to_str().unwrap(), "--alpha", "1.6"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("1.6"), "{err}");
}

#[test]
fn f_inside_range_round_trips() {
    let spec = spec_path();
    let out = run(&["f", "--spec", spec.to_str().unwrap(), "--alpha", "1.3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let f: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("f = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(f > 0.0 && f < 1.3496839, "{text}");
}

#[test]
fn truncated_spec_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "m = 2\nn = 3\n").unwrap();
    let out = run(&["info", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("digits"), "{err}");
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let spec = spec_path();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "4")] {
        let out = run(&[
            "verify",
            "--spec",
            spec.to_str().unwrap(),
            "--t",
            "0.5",
            "--samples",
            "20",
            "--k",
            "100",
            "--seed",
            "11",
            "--ball-samples",
            "3",
            "--threads",
            threads,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(a).unwrap();
    let b = std::fs::read(b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn coarse_and_cover_emit_csv() {
    let spec = spec_path();
    let out = run(&[
        "coarse",
        "--spec",
        spec.to_str().unwrap(),
        "--k",
        "8",
        "--alpha-points",
        "5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("alpha,count,f_hat\n"), "{text}");
    assert_eq!(
        text.lines().filter(|l| !l.starts_with('#')).count(),
        6,
        "{text}"
    );

    let out = run(&[
        "cover",
        "--spec",
        spec.to_str().unwrap(),
        "--k-min",
        "6",
        "--k-max",
        "8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("k,squares_in_g,sum,ratio\n"), "{text}");

    // delta below the validity bound is an input error
    let out = run(&[
        "cover",
        "--spec",
        spec.to_str().unwrap(),
        "--delta",
        "0.0001",
        "--k-min",
        "6",
        "--k-max",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
