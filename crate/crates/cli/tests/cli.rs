use std::path::Path;
use std::process::{Command, Output};

fn asc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn metrics_self_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let o = asc(
        &[
            "synth",
            "--out",
            "x.wav",
            "--duration",
            "10",
            "--primary-out",
            "p.wav",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = asc(&["metrics", "--p", "p.wav", "--w", "p.wav"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("LSD 0.000000 dB"), "{out}");
    assert!(out.contains("misalignment < -300 dB"), "{out}");
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = asc(&["metrics", "--p", "a.f32", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: usage: "), "{err}");

    let o = asc(
        &["metrics", "--p", "none.f32", "--w", "none.f32"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: missing-file: "), "{err}");
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "0\n1\n7\n").unwrap();
    let o = asc(
        &["hangover", "--input", "bad.txt", "--out", "o.txt"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: invalid-argument: "));

    std::fs::write(dir.path().join("p.txt"), "1\n").unwrap();
    let o = asc(
        &[
            "hangover", "--input", "p.txt", "--out", "o.txt", "--buffer", "4",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn energy_detection_follows_the_frame_formula() {
    let dir = tempfile::tempdir().unwrap();
    let o = asc(
        &[
            "synth",
            "--out",
            "x.wav",
            "--duration",
            "10.3",
            "--seed",
            "4",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = asc(
        &[
            "detect",
            "--input",
            "x.wav",
            "--out",
            "pred.txt",
            "--detector",
            "energy",
            "--threshold",
            "-18",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let n = (10.3f64 * 44_100.0).round() as usize;
    let frames = (n - 1323) / 441 + 1;
    let text = std::fs::read_to_string(dir.path().join("pred.txt")).unwrap();
    assert_eq!(text.lines().count(), frames);
    assert!(stdout(&o).starts_with(&format!("frames {frames} ")));
}

#[test]
fn hangover_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = asc(
        &[
            "synth",
            "--out",
            "x.wav",
            "--duration",
            "20",
            "--annotations",
            "a.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = asc(
        &[
            "detect",
            "--input",
            "x.wav",
            "--out",
            "raw.bits",
            "--detector",
            "oracle",
            "--annotations",
            "a.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = asc(
        &[
            "hangover", "--input", "raw.bits", "--out", "post.txt", "--trace", "t.csv", "--signal",
            "x.wav",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(
        trace.lines().next(),
        Some("time_s,amplitude,raw_pred,post_pred")
    );
    assert_eq!(trace.lines().count(), 2_001 + 1);
}

#[test]
fn cancel_reports_metrics_and_writes_the_filter() {
    let dir = tempfile::tempdir().unwrap();
    let o = asc(
        &[
            "synth",
            "--out",
            "x.wav",
            "--duration",
            "10",
            "--primary-out",
            "p.f32",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = asc(
        &[
            "cancel",
            "--input",
            "x.wav",
            "--primary",
            "p.f32",
            "--snr",
            "20",
            "--filter-out",
            "w.f32",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("LSD "), "{out}");
    assert!(out.contains("misalignment "));
    let bytes = std::fs::read(dir.path().join("w.f32")).unwrap();
    assert_eq!(bytes.len(), 512 * 4);
}

const CONFIG: &str = r#"
snr_list_db = [10, 20]
sad_mode = "both"

[input]
kind = "synth"
duration_s = 10

[detector]
kind = "oracle"

[saf]
taps = 64
subbands = 8
prototype_len = 64
"#;

#[test]
fn experiment_is_deterministic_and_overridable() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), CONFIG).unwrap();
    for out in ["a", "b"] {
        let o = asc(
            &[
                "experiment",
                "--config",
                "exp.toml",
                "--seed",
                "7",
                "--output-dir",
                out,
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    assert!(files.len() >= 6, "{files:?}");
    for f in &files {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f:?} differs");
    }
    let results = std::fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 4);

    let o = asc(
        &[
            "experiment",
            "--config",
            "exp.toml",
            "--seed",
            "8",
            "--output-dir",
            "c",
            "--snr",
            "15",
            "--sad-mode",
            "off",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let results = std::fs::read_to_string(dir.path().join("c/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 2);
    assert!(results.lines().nth(1).unwrap().starts_with("15,off,ok,"));
}

#[test]
fn bad_config_leaves_no_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let bad = CONFIG.replace("taps = 64", "taps = 60");
    std::fs::write(dir.path().join("exp.toml"), bad).unwrap();
    let o = asc(
        &["experiment", "--config", "exp.toml", "--output-dir", "out"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: config: "), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}
