use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pupilclean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pupilclean"))
        .args(args)
        .env_remove("PUPILCLEAN_CONFIG")
        .output()
        .expect("run pupilclean")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Tobii-style export at 300 Hz with two blinks; `phase` varies the signal.
fn tsv(seconds: u64, phase: f64) -> String {
    let mut s = String::from(
        "EyeTrackerTimestamp\tGazePointLeftX (ADCSpx)\tGazePointLeftY (ADCSpx)\tGazePointRightX (ADCSpx)\t\
         GazePointRightY (ADCSpx)\tPupilLeft\tPupilRight\tValidityLeft\tValidityRight\n",
    );
    for i in 0..seconds * 300 {
        let t_us = i * 1_000_000 / 300;
        let blink = (900..945).contains(&i) || (2100..2160).contains(&i);
        if blink {
            s.push_str(&format!("{t_us}\t-1\t-1\t-1\t-1\t-1\t-1\t4\t4\n"));
        } else {
            let p = 3.0 + 0.25 * (i as f64 / 150.0 + phase).sin();
            s.push_str(&format!("{t_us}\t512\t384\t520\t390\t{p:.4}\t{:.4}\t0\t0\n", p + 0.05));
        }
    }
    s
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, content).unwrap();
    p
}

const RECOMMENDED: &str = r#"{"filters": [
    {"kind": "PupilSubstitution"},
    {"kind": "GazeSubstitution"},
    {"kind": "BlinkDetection"},
    {"kind": "StandardDeviation", "k": 3},
    {"kind": "LinearInterpolation"},
    {"kind": "Butterworth", "cutoff_hz": 4}
]}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn clean_one_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "16@modeling_experiment.tsv", &tsv(10, 0.0));
    let chain = write(dir.path(), "chain.json", RECOMMENDED);
    let out_dir = dir.path().join("out");
    let out = pupilclean(&["clean", s(&input), "--chain", s(&chain), "--sample-rate", "300", "--output-dir", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "file\tstatus\tsamples\tremoved\tinterpolated\twall_ms\toutput");
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(row[1], "ok");
    assert_eq!(row[2], "3000");
    assert!(row[3].parse::<usize>().unwrap() > 0);
    let written: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(written, ["16@modeling_experiment.cepw"]);

    let output = out_dir.join("16@modeling_experiment.cepw");
    let avg = pupilclean(&["average", s(&output), "--mode", "left"]);
    assert_eq!(code(&avg), 0);
    let mm: f64 = stdout(&avg).trim().parse().unwrap();
    assert!((2.9..3.1).contains(&mm), "{mm}");

    let env = pupilclean(&["inspect", s(&output), "--channel", "pupil_right", "--points", "21"]);
    assert_eq!(code(&env), 0);
    let text = stdout(&env);
    assert_eq!(text.lines().count(), 1 + 11);
    assert!(text.starts_with("start_ms\tend_ms\tmin\tmax\tcount\n"));
}

#[test]
fn butterworth_only_chain_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.tsv", &tsv(2, 0.0));
    let chain = write(dir.path(), "chain.json", r#"{"filters": [{"kind": "Butterworth"}]}"#);
    let out_dir = dir.path().join("out");
    let out = pupilclean(&["clean", s(&input), "--chain", s(&chain), "--sample-rate", "300", "--output-dir", s(&out_dir)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("butterworth_without_interpolation"));
    assert!(!out_dir.exists());
}

#[test]
fn output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let inputs: Vec<PathBuf> = (0..8)
        .map(|i| write(dir.path(), &format!("{i}@batch.tsv"), &tsv(4, i as f64)))
        .collect();
    let chain = write(dir.path(), "chain.json", RECOMMENDED);
    let run = |workers: &str, out: &Path| {
        let mut args = vec!["clean"];
        args.extend(inputs.iter().map(|p| s(p)));
        args.extend(["--chain", s(&chain), "--sample-rate", "300", "--output-dir", s(out), "--workers", workers]);
        let result = pupilclean(&args);
        assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
        assert_eq!(stdout(&result).lines().filter(|l| l.contains("\tok\t")).count(), 8);
    };
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    run("1", &serial);
    run("3", &parallel);
    for i in 0..8 {
        let name = format!("{i}@batch.cepw");
        assert_eq!(fs::read(serial.join(&name)).unwrap(), fs::read(parallel.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn one_bad_file_does_not_stop_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.tsv", &tsv(2, 0.0));
    let bad = write(dir.path(), "bad.tsv", "not\ta\ttobii\texport\n1\t2\t3\t4\n");
    let missing = dir.path().join("missing.tsv");
    let chain = write(dir.path(), "chain.json", RECOMMENDED);
    let out_dir = dir.path().join("out");
    let out = pupilclean(&[
        "clean", s(&bad), s(&good), s(&missing), "--chain", s(&chain), "--sample-rate", "300", "--output-dir", s(&out_dir),
    ]);
    assert_eq!(code(&out), 4);
    let table = stdout(&out);
    assert!(table.lines().any(|l| l.starts_with(s(&bad)) && l.contains("\tfailed\t")));
    assert!(table.lines().any(|l| l.starts_with(s(&good)) && l.contains("\tok\t")));
    let written: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(written, ["good.cepw"]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing.tsv"), "{stderr}");
}

#[test]
fn validate_chain_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let warn = write(dir.path(), "w.json", r#"{"filters": [{"kind": "LinearInterpolation"}, {"kind": "BlinkDetection"}]}"#);
    let out = pupilclean(&["validate-chain", s(&warn)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("warning\tblink_after_interpolation\t[1,0]\t"));

    let err = write(dir.path(), "e.json", r#"{"filters": [{"kind": "Butterworth"}]}"#);
    assert_eq!(code(&pupilclean(&["validate-chain", s(&err)])), 3);

    let ok = write(dir.path(), "ok.json", RECOMMENDED);
    let out = pupilclean(&["validate-chain", s(&ok)]);
    assert_eq!((code(&out), stdout(&out).trim()), (0, "ok"));

    let channels = pupilclean(&["validate-chain", s(&ok), "--channels", "pupil_left,pupil_right"]);
    assert_eq!(code(&channels), 3);
    assert!(stdout(&channels).contains("missing_channels"));

    let garbage = write(dir.path(), "g.json", "{\"filters\": [{\"kind\": \"Median\"}]}");
    assert_eq!(code(&pupilclean(&["validate-chain", s(&garbage)])), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&pupilclean(&[])), 2);
    assert_eq!(code(&pupilclean(&["clean"])), 2);
    assert_eq!(code(&pupilclean(&["average", "x", "--mode", "sideways"])), 2);
    assert_eq!(code(&pupilclean(&["validate-chain", "/nonexistent/chain.json"])), 2);
}

#[test]
fn import_subjects_into_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "subjects.csv", "16,Alice\n17,Bob\n");
    let root = dir.path().join("catalog");
    let out = pupilclean(&["import-subjects", s(&csv), "--study", "modeling_experiment", "--storage-root", s(&root)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 2);
    let again = pupilclean(&["import-subjects", s(&csv), "--study", "modeling_experiment", "--storage-root", s(&root)]);
    assert_eq!(code(&again), 3);
}
