use std::path::Path;
use std::process::{Command, Output};

use lnspdc_cli::error::{EXIT_CONFIG, EXIT_OK};

const SOURCE: &str = r#"
[source]
pair_rate_hz = 2e5
duration_s = 0.5
eta_s = 0.05
eta_i = 0.05
dark_s_hz = 100.0
dark_i_hz = 100.0
jitter_sigma_ps = 25.0
splitter = true
seed = 11

[analysis]
window_ps = 200
resamples = 200
"#;

fn lnspdc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnspdc")).args(args).current_dir(dir).output().unwrap()
}

fn files_under(dir: &Path) -> usize {
    if !dir.exists() {
        return 0;
    }
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            if p.is_dir() {
                files_under(&p)
            } else {
                1
            }
        })
        .sum()
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "[qpm]\nlenght_mm = 5.7\n").unwrap();
    let o = lnspdc(&["qpm", "--config", "bad.cfg", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lenght_mm"));
    assert_eq!(files_under(&dir.path().join("out")), 0);
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.cfg"), "# nothing\n").unwrap();
    let o = lnspdc(&["tags", "simulate", "--config", "empty.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[source]"));
}

#[test]
fn corrupt_tag_file_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), SOURCE).unwrap();
    std::fs::write(dir.path().join("junk.ttag"), b"TTAG\x01\x00\x03\x00\xff\xff\xff\xff\x00\x00\x00\x00").unwrap();
    let o = lnspdc(&["tags", "analyze", "junk.ttag", "--config", "s.cfg", "--out-dir", "out"], dir.path());
    assert_ne!(o.status.code(), Some(EXIT_OK));
    assert_eq!(files_under(&dir.path().join("out")), 0);
}

#[test]
fn simulate_then_analyze_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), SOURCE).unwrap();
    let sim = lnspdc(&["tags", "simulate", "--config", "s.cfg", "--out-dir", "sim", "--out", "x.ttag"], dir.path());
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sim/tags-simulate.manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(listed, ["x.ttag", "x.ttag.json"]);

    let mut reports = Vec::new();
    for out in ["a", "b"] {
        let o = lnspdc(
            &["tags", "analyze", "sim/x.ttag", "--window-ps", "200", "--report", "json", "--config", "s.cfg", "--out-dir", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push((
            std::fs::read(dir.path().join(out).join("tags/report.json")).unwrap(),
            std::fs::read(dir.path().join(out).join("tags/report.json.histogram.csv")).unwrap(),
            o.stdout,
        ));
    }
    assert_eq!(reports[0], reports[1]);
    let r: serde_json::Value = serde_json::from_slice(&reports[0].0).unwrap();
    assert_eq!(r["window_ps"], 200);
    assert_eq!(r["splitter_factor"], 2.0);
    assert!(r["g2"]["g2"].is_number());
}

#[test]
fn seed_flag_changes_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), SOURCE).unwrap();
    let mut bytes = Vec::new();
    for (out, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let o = lnspdc(&["tags", "simulate", "--config", "s.cfg", "--out-dir", out, "--seed", seed], dir.path());
        assert!(o.status.success());
        bytes.push(std::fs::read(dir.path().join(out).join("tags/stream.ttag")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_ne!(bytes[0], bytes[2]);
}
