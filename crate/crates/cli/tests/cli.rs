use std::path::PathBuf;
use std::process::{Command, Output};

use rug::Float;
use serde_json::Value;

fn dnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnoise"))
        .args(args)
        .env_remove("DNOISE_TEST_SEED")
        .output()
        .unwrap()
}

fn seeded(seed: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnoise"))
        .args(args)
        .env("DNOISE_TEST_SEED", seed)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(o: Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        stderr(&o)
    );
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(dnoise(args))).unwrap()
}

fn f(v: &Value) -> f64 {
    v.to_string().trim_matches('"').parse().unwrap()
}

fn golden(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name]
        .iter()
        .collect();
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn seeded_sampling_matches_golden() {
    let args = [
        "sample", "--dist", "dgauss", "--sigma2", "10", "--n", "25", "--stats",
    ];
    let a = seeded("7", &args);
    assert!(stderr(&a).contains("warning"));
    assert_eq!(ok(a), golden("sample_dgauss_seed7.txt"));
    assert_eq!(ok(seeded("7", &args)), golden("sample_dgauss_seed7.txt"));
    let lap = [
        "sample", "--dist", "dlaplace", "--scale", "7/3", "--n", "25",
    ];
    assert_eq!(ok(seeded("7", &lap)), golden("sample_dlaplace_seed7.txt"));
    assert_ne!(ok(seeded("8", &lap)), golden("sample_dlaplace_seed7.txt"));
}

#[test]
fn stats_columns_are_consistent() {
    let out = ok(seeded(
        "1",
        &[
            "sample", "--dist", "dgauss", "--sigma2", "1/4", "--n", "200", "--stats",
        ],
    ));
    for line in out.lines() {
        let cols: Vec<i64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 3);
        assert!(cols[1] >= 1 && cols[2] > 0);
    }
}

#[test]
fn huge_variance_samples_stay_in_range() {
    let out = ok(seeded(
        "3",
        &[
            "sample",
            "--dist",
            "dgauss",
            "--sigma2",
            "10000000000/1",
            "--n",
            "1000",
        ],
    ));
    let xs: Vec<f64> = out.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs.len(), 1000);
    assert!(xs.iter().all(|x| x.abs() <= 1e6 * 1e5));
    let sd = (xs.iter().map(|x| x * x).sum::<f64>() / 1000.0).sqrt();
    assert!((sd / 1e5 - 1.0).abs() < 0.1, "sd {sd}");
}

#[test]
fn scaled_samples_lie_on_the_grid() {
    let out = ok(seeded(
        "5",
        &[
            "sample", "--dist", "dgauss", "--sigma2", "1", "--alpha", "1/3", "--mu", "2/3", "--n",
            "100",
        ],
    ));
    for line in out.lines() {
        let (p, q) = line.split_once('/').unwrap_or((line, "1"));
        let (_, q): (i64, i64) = (p.parse().unwrap(), q.parse().unwrap());
        assert!(q == 1 || q == 3, "{line}");
    }
}

#[test]
fn usage_errors_exit_2() {
    for (args, flag) in [
        (
            vec!["sample", "--dist", "dlaplace", "--scale", "0/1", "--n", "1"],
            "--scale",
        ),
        (
            vec!["sample", "--dist", "dgauss", "--sigma2", "1/0", "--n", "1"],
            "--sigma2",
        ),
        (
            vec!["sample", "--dist", "dgauss", "--sigma2", "abc", "--n", "1"],
            "--sigma2",
        ),
        (
            vec!["account", "exact-adp", "--sigma2=-1", "--eps", "1"],
            "sigma2",
        ),
        (
            vec!["compare", "--mode", "fixed-utility", "--eps-grid", "1:0:5"],
            "--eps-grid",
        ),
        (
            vec!["compare", "--mode", "fixed-privacy", "--k-grid", "5:1"],
            "--k-grid",
        ),
        (vec!["account", "cdp-to-adp", "--rho", "1"], "--eps"),
    ] {
        let o = dnoise(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
    }
    let o = seeded(
        "x",
        &["sample", "--dist", "dgauss", "--sigma2", "1", "--n", "1"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn accounting_outputs_match_golden() {
    assert_eq!(
        ok(dnoise(&[
            "account",
            "cdp-to-adp",
            "--rho",
            "0.02",
            "--eps",
            "1"
        ])),
        golden("cdp_to_adp.json")
    );
    assert_eq!(
        ok(dnoise(&[
            "account",
            "exact-adp",
            "--sigma2",
            "1",
            "--eps",
            "0"
        ])),
        golden("exact_adp.json")
    );
    assert_eq!(
        ok(dnoise(&[
            "account",
            "pld",
            "--sigma2s",
            "4,4",
            "--mu",
            "1,1",
            "--eps",
            "1"
        ])),
        golden("pld.json")
    );
}

#[test]
fn accounting_values() {
    let v = json(&["account", "cdp-to-adp", "--rho", "1/50", "--eps", "1"]);
    assert!(f(&v["delta_upper"]) <= 1e-7);
    assert!(f(&v["delta_upper"]) < f(&v["standard_bound"]));
    let v = json(&["account", "exact-adp", "--sigma2", "1", "--eps", "0"]);
    assert!((f(&v["delta_upper"]) - 0.398942).abs() < 2e-6);
    let v = json(&[
        "account",
        "kov",
        "--eps0",
        "0.0282843",
        "--k",
        "100",
        "--eps",
        "1",
    ]);
    assert!((f(&v["delta_upper"]) / 2.06e-5 - 1.0).abs() < 0.1);
    let v = json(&["account", "cdp", "--sigma2", "2500", "--k", "100"]);
    assert_eq!(v["rho"], "1/50");
    let v = json(&["account", "dlap-pure", "--scale", "10"]);
    assert_eq!(v["eps"], "1/10");
}

#[test]
fn delta_mode_returns_a_valid_epsilon() {
    let v = json(&["account", "exact-adp", "--sigma2", "1", "--delta", "1e-6"]);
    let eps = v["eps_upper_exact"].as_str().unwrap();
    let back = json(&["account", "exact-adp", "--sigma2", "1", "--eps", eps]);
    assert!(f(&back["delta_upper"]) <= 1e-6);
}

fn width(v: &Value) -> Float {
    let p = |s: &Value| Float::with_val(1024, Float::parse(s.as_str().unwrap()).unwrap());
    let iv = &v["delta_interval"];
    p(&iv["hi"]) - p(&iv["lo"])
}

#[test]
fn doubling_precision_narrows_the_interval() {
    for args in [
        vec!["account", "exact-adp", "--sigma2", "3", "--eps", "1/2"],
        vec!["account", "cdp-to-adp", "--rho", "1/10", "--eps", "1"],
        vec![
            "account",
            "pld",
            "--sigma2s",
            "2,3",
            "--mu",
            "1,1",
            "--eps",
            "1/2",
        ],
    ] {
        let mut prev: Option<Float> = None;
        for bits in ["64", "128", "256"] {
            let mut a = args.clone();
            a.extend(["--precision-bits", bits]);
            let w = width(&json(&a));
            assert!(w >= 0);
            if let Some(p) = prev {
                assert!(w < p, "{args:?} at {bits} bits: {w} vs {p}");
            }
            prev = Some(w);
        }
    }
}

#[test]
fn comparison_tables() {
    let u = ok(dnoise(&[
        "compare",
        "--mode",
        "fixed-utility",
        "--eps-grid",
        "0:2:5",
    ]));
    assert_eq!(u, golden("fixed_utility.csv"));
    let p = ok(dnoise(&[
        "compare",
        "--mode",
        "fixed-privacy",
        "--k-grid",
        "1:100:33",
    ]));
    assert_eq!(p, golden("fixed_privacy.csv"));
    let mut rdr = csv::Reader::from_reader(p.as_bytes());
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["k", "var_gauss", "var_lap", "ratio"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let ratio = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert!(ratio(0) < 1.0);
    assert!((ratio(3) - 1.69).abs() <= 0.05);
}

#[test]
fn verify_reports_and_exits() {
    let o = seeded("11", &["verify", "--suite", "stat", "--samples", "20000"]);
    let out = ok(o);
    assert!(out.lines().last().unwrap().starts_with("PASS all"));
    assert_eq!(
        out,
        ok(seeded(
            "11",
            &["verify", "--suite", "stat", "--samples", "20000"]
        ))
    );
    let o = dnoise(&["verify", "--suite", "stat", "--sig", "2"]);
    assert_eq!(o.status.code(), Some(2));
}
