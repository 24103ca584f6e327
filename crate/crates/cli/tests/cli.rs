use std::process::{Command, Output};

fn formbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data lines: everything after the column header.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn certify_model_strength() {
    let out = formbound(&["certify", "c=0.2", "d=3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("# formbound "));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let delta: f64 = rows[0][3].parse().unwrap();
    assert!((delta - 0.16).abs() <= f64::EPSILON * 0.16);
    assert_eq!(rows[0][5], "true");
    assert_eq!(rows[0][9], "false");
}

#[test]
fn certify_beyond_nonexistence() {
    let out = formbound(&["certify", "c=3", "d=3"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows[0][5], "false");
    assert_eq!(rows[0][9], "true");
}

#[test]
fn config_errors_exit_two() {
    for args in [
        &["certify", "foo=1"][..],
        &["certify", "d=2"][..],
        &["no-such-command"][..],
        &["slope", "N=many"][..],
        &[][..],
    ] {
        let out = formbound(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", "N=300", "t=0.1", "seed=11"];
    let a = formbound(&args);
    let b = formbound(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn empty_phase_grid_is_header_only() {
    let out = formbound(&["phase-diagram", "c="]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(data_rows(&text).is_empty());
    assert!(text.lines().any(|l| l.starts_with("d,c,c_max")));
}

#[test]
fn config_file_matches_command_line() {
    let dir = std::env::temp_dir().join(format!("formbound-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("slope.cfg");
    let csv = dir.join("slope.csv");
    std::fs::write(&cfg, "# small run\nslope\nN=400\ndt=1e-3\nt=0.2 # short\n").unwrap();
    let from_file = formbound(&[
        "--config",
        cfg.to_str().unwrap(),
        &format!("output={}", csv.display()),
    ]);
    assert!(from_file.stdout.is_empty());
    let direct = formbound(&["slope", "N=400", "dt=1e-3", "t=0.2"]);
    assert_eq!(from_file.status.code(), direct.status.code());
    let written = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(data_rows(&written), data_rows(&stdout(&direct)));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn evolve_axis_points_are_bounded() {
    let out = formbound(&["evolve", "grid=16", "t=0,0.1"]);
    assert_eq!(out.status.code(), Some(0));
    for row in data_rows(&stdout(&out)) {
        let v: f64 = row.last().unwrap().parse().unwrap();
        assert!((-1e-8..=1.0 + 1e-8).contains(&v));
        assert!(row[2..4].iter().all(|x| x == "0.0"));
    }
}

#[test]
fn collapse_trend_is_asserted() {
    let out = formbound(&["collapse", "N=1000", "dt=1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    let means: Vec<f64> = data_rows(&stdout(&out))
        .iter()
        .map(|r| r[7].parse().unwrap())
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]));
}
