use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn towersite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_towersite"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_synth(out: &Path, threads: &str) -> Output {
    towersite(&[
        "--synth",
        "120",
        "--seed",
        "4",
        "--roi",
        "12",
        "--threads",
        threads,
        "--out-dir",
        out.to_str().unwrap(),
    ])
}

#[test]
fn synthetic_run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_synth(dir.path(), "2");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("potential transmitters: "));
    for stage in [
        "read data",
        "visibility indexes",
        "find potential transmitters",
        "viewsheds",
        "site transmitters",
    ] {
        assert!(
            stdout.contains(&format!("elapsed seconds, {stage}: ")),
            "missing {stage}"
        );
    }

    let csv = fs::read_to_string(dir.path().join("transmitters.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rank,row,col,marginal_gain,cumulative_coverage"));
    assert!(lines.next().is_some());
    assert!(dir.path().join("cumshed.pgm").exists());
    assert!(dir.path().join("snapshots/cumshed_1.pgm").exists());
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_synth(a.path(), "1").status.success());
    assert!(run_synth(b.path(), "3").status.success());
    for f in [
        "transmitters.csv",
        "cumshed.pgm",
        "snapshots/cumshed_1.pgm",
        "snapshots/cumshed_2.pgm",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn generated_terrain_round_trips_through_input() {
    let dir = tempfile::tempdir().unwrap();
    let dem = dir.path().join("dem.bin");
    let gen = towersite(&[
        "generate",
        "--nrows",
        "90",
        "--ncols",
        "70",
        "--seed",
        "8",
        "--output",
        dem.to_str().unwrap(),
    ]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    assert_eq!(fs::metadata(&dem).unwrap().len(), 90 * 70 * 2);

    let out = dir.path().join("run");
    let res = towersite(&[
        "--input",
        dem.to_str().unwrap(),
        "--nrows",
        "90",
        "--ncols",
        "70",
        "--roi",
        "9",
        "--snapshots",
        "1,3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("snapshots/cumshed_1.pgm").exists());
    assert!(out.join("snapshots/cumshed_3.pgm").exists());
    assert!(!out.join("snapshots/cumshed_2.pgm").exists());

    let asc = dir.path().join("dem.asc");
    assert!(towersite(&[
        "generate",
        "--nrows",
        "40",
        "--ncols",
        "40",
        "--ascii",
        "--output",
        asc.to_str().unwrap()
    ])
    .status
    .success());
    let res = towersite(&[
        "--input",
        asc.to_str().unwrap(),
        "--roi",
        "5",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("rows: 40"));
}

#[test]
fn max_selected_caps_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = towersite(&[
        "--synth",
        "100",
        "--roi",
        "10",
        "--max-selected",
        "3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("stop reason: max-selected"));
    let csv = fs::read_to_string(dir.path().join("transmitters.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn errors_exit_nonzero_with_stage_tag() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.bin");
    let out = towersite(&[
        "--input",
        missing.to_str().unwrap(),
        "--nrows",
        "10",
        "--ncols",
        "10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("read: "));

    let bad = dir.path().join("short.bin");
    fs::write(&bad, [0u8; 10]).unwrap();
    let out = towersite(&["--input", bad.to_str().unwrap(), "--nrows", "10", "--ncols", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("read: "));

    let out = towersite(&["--synth", "50", "--coverage", "1.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config: "));

    let out = towersite(&["--roi", "5"]);
    assert!(!out.status.success());
}
