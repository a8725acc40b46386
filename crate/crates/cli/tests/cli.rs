use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;
use wl1_core::format::sig10;

const TWO_BLOCK_PROFILE: &str =
    r#"{"blocks":[{"rho":0.8,"fraction":0.5},{"rho":0.2,"fraction":0.5}]}"#;

fn wl1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wl1"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn threshold_two_block_values() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", TWO_BLOCK_PROFILE);
    let u = json(&wl1(&[
        "threshold",
        "--profile",
        &p,
        "--weights",
        "uniform",
    ]));
    assert!((u["alpha_c"].as_f64().unwrap() - 0.83130).abs() < 1e-4);
    assert_eq!(u["stable"], Value::Bool(true));
    assert_eq!(u["weights_used"], serde_json::json!([1.0, 1.0]));
    assert!(u["q_hat"].as_f64().unwrap() > 0.0);
    let o = json(&wl1(&[
        "threshold",
        "--profile",
        &p,
        "--weights",
        "optimal",
    ]));
    assert!((o["alpha_c"].as_f64().unwrap() - 0.74272).abs() < 1e-4);
    let w = o["weights_used"].as_array().unwrap();
    let ratio = w[1].as_f64().unwrap() / w[0].as_f64().unwrap();
    assert!((ratio - 1.684 / 0.316).abs() < 0.01 * ratio);
}

#[test]
fn threshold_edge_profiles() {
    let dir = TempDir::new().unwrap();
    let dense = write(&dir, "d.json", r#"{"blocks":[{"rho":1.0,"fraction":1.0}]}"#);
    assert_eq!(
        json(&wl1(&["threshold", "--profile", &dense]))["alpha_c"].as_f64(),
        Some(1.0)
    );

    let ext = write(
        &dir,
        "e.json",
        r#"{"blocks":[{"rho":0.0,"fraction":0.5,"weight":"excluded"},{"rho":1.0,"fraction":0.5,"weight":0}]}"#,
    );
    let v = json(&wl1(&[
        "threshold",
        "--profile",
        &ext,
        "--weights",
        "from-file",
    ]));
    assert_eq!(v["alpha_c"].as_f64(), Some(0.5));
    assert_eq!(v["q_hat"], Value::Null);
    assert_eq!(v["weights_used"], serde_json::json!([null, 0.0]));
    let v = json(&wl1(&[
        "threshold",
        "--profile",
        &ext,
        "--weights",
        "optimal",
    ]));
    assert_eq!(v["alpha_c"].as_f64(), Some(0.5));

    let custom = write(
        &dir,
        "c.json",
        r#"{"blocks":[{"rho":0.8,"fraction":0.5,"weight":0.316},{"rho":0.2,"fraction":0.5,"weight":1.684}]}"#,
    );
    let v = json(&wl1(&[
        "threshold",
        "--profile",
        &custom,
        "--weights",
        "from-file",
    ]));
    assert!((v["alpha_c"].as_f64().unwrap() - 0.74272).abs() < 1e-4);
}

#[test]
fn threshold_input_errors() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("bad.json", "{not json"),
        (
            "sum.json",
            r#"{"blocks":[{"rho":0.5,"fraction":0.6},{"rho":0.2,"fraction":0.6}]}"#,
        ),
        ("rho.json", r#"{"blocks":[{"rho":1.5,"fraction":1.0}]}"#),
    ];
    for (name, text) in cases {
        let p = write(&dir, name, text);
        let out = wl1(&["threshold", "--profile", &p]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let p = write(&dir, "p.json", TWO_BLOCK_PROFILE);
    assert_eq!(
        wl1(&["threshold", "--profile", &p, "--weights", "from-file"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        wl1(&["threshold", "--profile", "/nonexistent/p.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn curve_rows() {
    let text = stdout(&wl1(&[
        "curve",
        "--rho-min",
        "0",
        "--rho-max",
        "1",
        "--steps",
        "11",
    ]));
    assert!(text.starts_with("rho,alpha_unweighted,alpha_optimal\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0], vec![0.0, 0.0, 0.0]);
    assert_eq!(rows[10], vec![1.0, 1.0, 1.0]);
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 1e-8);
    }

    let dir = TempDir::new().unwrap();
    let half = write(&dir, "h.json", r#"{"blocks":[{"rho":0.5,"fraction":1.0}]}"#);
    let t = json(&wl1(&["threshold", "--profile", &half]))["alpha_c"]
        .as_f64()
        .unwrap();
    assert!(rows[5][0] == 0.5 && (rows[5][1] - t).abs() < 1e-9);

    for args in [
        ["0.5", "0.5", "3"],
        ["0", "1", "1"],
        ["-0.1", "0.5", "3"],
        ["0", "1.2", "3"],
    ] {
        let out = wl1(&[
            "curve",
            "--rho-min",
            args[0],
            "--rho-max",
            args[1],
            "--steps",
            args[2],
        ]);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn two_block_sweep_envelope() {
    let grid: Vec<String> = (-40..=160).map(|k| sig10(k as f64 / 200.0)).collect();
    let dw = grid.join(",");
    let out = wl1(&[
        "two-block-sweep",
        "--rho-bar-min",
        "0.5",
        "--rho-bar-max",
        "0.5",
        "--rho-bar-steps",
        "1",
        "--delta-rho",
        "0.3",
        "--delta-w",
        &dw,
    ]);
    let text = stdout(&out);
    assert!(text.starts_with("rho_bar,delta_w,alpha_c\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 201);
    let min = rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    // Chord of the single-density curve through 0.2 and 0.8.
    let chord = 0.742_722_362;
    assert!(min >= chord - 1e-9 && min - chord < 1e-4, "{min}");

    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", TWO_BLOCK_PROFILE);
    let uniform = json(&wl1(&["threshold", "--profile", &p]))["alpha_c"]
        .as_f64()
        .unwrap();
    let at_zero = rows.iter().find(|r| r[1] == 0.0).unwrap()[2];
    assert!((at_zero - uniform).abs() < 1e-9);
}

#[test]
fn two_block_sweep_grid_and_errors() {
    let text = stdout(&wl1(&[
        "two-block-sweep",
        "--rho-bar-min",
        "0.3",
        "--rho-bar-max",
        "0.7",
        "--rho-bar-steps",
        "5",
        "--delta-rho",
        "0.2",
        "--delta-w",
        "-0.5,0,0.5",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 15);
    assert_eq!((rows[0][0], rows[0][1]), (0.3, -0.5));
    assert_eq!((rows[14][0], rows[14][1]), (0.7, 0.5));
    let out = wl1(&[
        "two-block-sweep",
        "--rho-bar-min",
        "0.1",
        "--rho-bar-max",
        "0.5",
        "--delta-rho",
        "0.3",
        "--delta-w",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn mc(dir: &TempDir, extra: &[&str], out_name: &str) -> (Output, String) {
    let p = write(dir, "p.json", TWO_BLOCK_PROFILE);
    let out_path = dir.path().join(out_name);
    let mut args = vec!["mc", "--profile", &p, "--out", out_path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = wl1(&args);
    let csv = std::fs::read_to_string(&out_path).unwrap_or_default();
    (out, csv)
}

#[test]
fn mc_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = [
        "--n",
        "16,32",
        "--trials",
        "1",
        "--weighting",
        "optimal",
        "--seed",
        "9",
    ];
    let (o1, c1) = mc(&dir, &args, "a.csv");
    let (o2, c2) = mc(&dir, &args, "b.csv");
    assert_eq!(stdout(&o1), stdout(&o2));
    assert_eq!(c1, c2);
    assert!(c1.starts_with("n,trials,mean_alpha,stderr,weighted,seed\n16,1,"));
    assert_eq!(stdout(&o1).lines().count(), 2);
}

#[test]
fn mc_weighted_beats_unweighted_at_64() {
    let dir = TempDir::new().unwrap();
    let common = ["--n", "64", "--trials", "200", "--seed", "77"];
    let (_, w) = mc(
        &dir,
        &[&common[..], &["--weighting", "optimal"]].concat(),
        "w.csv",
    );
    let (_, u) = mc(
        &dir,
        &[&common[..], &["--weighting", "uniform"]].concat(),
        "u.csv",
    );
    let parse = |text: &str| -> (f64, f64) {
        let f: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        (f[2].parse().unwrap(), f[3].parse().unwrap())
    };
    let ((mw, sw), (mu, su)) = (parse(&w), parse(&u));
    assert!((mw - 0.74272).abs() <= 0.04, "{mw}");
    assert!(
        mu - mw >= 5.0 * (sw * sw + su * su).sqrt(),
        "{mw} {sw} {mu} {su}"
    );
    assert!(w.lines().nth(1).unwrap().ends_with(",true,77"));
}

#[test]
fn mc_input_errors() {
    let dir = TempDir::new().unwrap();
    let (out, _) = mc(
        &dir,
        &[
            "--n",
            "15",
            "--trials",
            "2",
            "--weighting",
            "optimal",
            "--seed",
            "1",
        ],
        "x.csv",
    );
    assert_eq!(out.status.code(), Some(2));
    let (out, _) = mc(
        &dir,
        &[
            "--n",
            "16",
            "--trials",
            "0",
            "--weighting",
            "optimal",
            "--seed",
            "1",
        ],
        "x.csv",
    );
    assert_eq!(out.status.code(), Some(2));
    // Seeds are mandatory.
    let (out, _) = mc(
        &dir,
        &["--n", "16", "--trials", "2", "--weighting", "optimal"],
        "x.csv",
    );
    assert_eq!(out.status.code(), Some(2));
}

fn sweep_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("n,trials,mean_alpha,stderr,weighted,seed\n");
    for (n, mean) in rows {
        s.push_str(&format!("{n},200,{},0.01,true,1\n", sig10(*mean)));
    }
    s
}

#[test]
fn extrapolate_exact_quadratic_and_order_independence() {
    let dir = TempDir::new().unwrap();
    let f = |n: f64| 0.75 + 2.0 / n - 8.0 / (n * n);
    let rows: Vec<(f64, f64)> = [16.0, 32.0, 64.0, 128.0]
        .iter()
        .map(|&n| (n, f(n)))
        .collect();
    let a = write(&dir, "a.csv", &sweep_csv(&rows));
    let mut rev = rows.clone();
    rev.reverse();
    let b = write(&dir, "b.csv", &sweep_csv(&rev));
    let (oa, ob) = (
        wl1(&["extrapolate", "--in", &a]),
        wl1(&["extrapolate", "--in", &b]),
    );
    assert_eq!(stdout(&oa), stdout(&ob));
    let fa = json(&oa);
    assert!((fa["a0"].as_f64().unwrap() - 0.75).abs() < 1e-9);
    assert!((fa["a1"].as_f64().unwrap() - 2.0).abs() < 1e-7);
    assert!((fa["a2"].as_f64().unwrap() + 8.0).abs() < 1e-5);
    assert_eq!(fa["dof"].as_u64(), Some(1));
    for k in ["a0", "a1", "a2", "se0", "se1", "se2", "chi2", "dof"] {
        assert!(fa.get(k).is_some());
    }
}

#[test]
fn extrapolate_errors() {
    let dir = TempDir::new().unwrap();
    let few = write(
        &dir,
        "few.csv",
        &sweep_csv(&[(16.0, 0.8), (32.0, 0.78), (64.0, 0.77)]),
    );
    assert_eq!(wl1(&["extrapolate", "--in", &few]).status.code(), Some(2));
    let bad = write(&dir, "bad.csv", "n,mean\n1,2\n");
    assert_eq!(wl1(&["extrapolate", "--in", &bad]).status.code(), Some(2));
    let dup = write(
        &dir,
        "dup.csv",
        &sweep_csv(&[(16.0, 0.8), (32.0, 0.78), (32.0, 0.77), (64.0, 0.76)]),
    );
    assert_eq!(wl1(&["extrapolate", "--in", &dup]).status.code(), Some(3));
}

#[test]
fn emitted_numbers_round_trip() {
    let text = stdout(&wl1(&[
        "curve",
        "--rho-min",
        "0.013",
        "--rho-max",
        "0.97",
        "--steps",
        "17",
    ]));
    for line in text.lines().skip(1) {
        let again: Vec<String> = line.split(',').map(|v| sig10(v.parse().unwrap())).collect();
        assert_eq!(again.join(","), line);
    }
}

#[test]
fn commands_are_deterministic_and_documented() {
    let a = wl1(&["curve", "--steps", "7"]);
    let b = wl1(&["curve", "--steps", "7"]);
    assert_eq!(a.stdout, b.stdout);
    for cmd in ["threshold", "curve", "two-block-sweep", "mc", "extrapolate"] {
        let out = wl1(&[cmd, "--help"]);
        assert!(out.status.success() && !out.stdout.is_empty(), "{cmd}");
    }
    assert!(Path::new(env!("CARGO_BIN_EXE_wl1")).exists());
}
