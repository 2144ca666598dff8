use std::fmt::Write as _;
use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomprobe"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["battery", "--alpha", "2"])), 1);
    assert_eq!(code(&run(&["battery", "--source", "satellite"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let site = dir.path().join("site.json");
    fs::write(&site, "{ not json").unwrap();
    let out = run(&["battery", "--site", site.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    let missing = dir.path().join("absent.json");
    assert_eq!(
        code(&run(&["unit", "--site", missing.to_str().unwrap()])),
        2
    );
    assert_eq!(code(&run(&["test", "--hypothesis", "no_such_id"])), 2);
}

#[test]
fn infeasible_prior_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let prior = dir.path().join("prior.json");
    fs::write(
        &prior,
        r#"{"width_cm": [100, 120], "inner_radius_cm": [400, 500]}"#,
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--prior",
        prior.to_str().unwrap(),
        "--trials",
        "10",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn degenerate_points_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("points.csv");
    fs::write(
        &pts,
        "feature_id,pass_id,x_px,y_px\nk,1,0,0\nk,1,1,1\nk,1,2,2\nk,1,3,3\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["fit", "--points", pts.to_str().unwrap()])), 3);
}

#[test]
fn simulate_is_seeded_and_thread_independent() {
    let a = run(&[
        "simulate",
        "--trials",
        "200",
        "--seed",
        "5",
        "--threads",
        "1",
    ]);
    let b = run(&[
        "simulate",
        "--trials",
        "200",
        "--seed",
        "5",
        "--threads",
        "3",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,hits"));
    let rows: Vec<_> = lines.take_while(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 200);
    assert!(text.contains("# seed,5"));
}

#[test]
fn fit_recovers_a_scaled_circle() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("points.csv");
    let mut csv = String::from("feature_id,pass_id,x_px,y_px\n");
    for pass in 1..=3 {
        for i in 0..24 {
            let t = std::f64::consts::TAU * i as f64 / 24.0 + pass as f64 * 0.1;
            let r = 100.0 + if i % 2 == 0 { 0.5 } else { -0.5 } * pass as f64;
            writeln!(
                csv,
                "kiva_x,{pass},{},{}",
                500.0 + r * t.cos(),
                300.0 + r * t.sin()
            )
            .unwrap();
        }
    }
    fs::write(&pts, csv).unwrap();
    let out = run(&[
        "fit",
        "--points",
        pts.to_str().unwrap(),
        "--scale-px",
        "200",
        "--scale-cm",
        "400",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("kiva_x"));
    // 100 px at 2 cm/px.
    assert!(text.contains("200.0"), "{text}");
}

#[test]
fn render_writes_svg_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("out.svg");
    let out = run(&["render", "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml") || text.starts_with("<svg"));
    assert!(text.trim_end().ends_with("</svg>"));
    let again = dir.path().join("again.svg");
    run(&["render", "--out", again.to_str().unwrap()]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn ad_hoc_test_reports_a_p_value() {
    let out = run(&[
        "test",
        "--numerator",
        "outer_d_length",
        "--denominator",
        "outer_d_width",
        "--target",
        "phi",
        "--source",
        "aerial",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("0.06"));
}

#[test]
fn csv_battery_has_no_markdown() {
    let out = run(&["battery", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(!stdout(&out).contains("|---"));
}
