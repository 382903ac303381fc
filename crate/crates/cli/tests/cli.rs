use std::path::Path;
use std::process::{Command, Output};

use superquant_cli::sweep::SweepConfig;

fn quantize(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantize")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> Option<i32> {
    o.status.code()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// JSON code blocks of a book chapter.
fn json_blocks(chapter: &str) -> Vec<String> {
    let text =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../book/src").join(chapter)).unwrap();
    text.split("```json\n").skip(1).map(|b| b.split("```").next().unwrap().to_string()).collect()
}

#[test]
fn successful_run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quantize(&["run", "--scenario", "harmonic", "--dim", "20", "--steps", "100", "--out", "h"], tmp.path());
    assert_eq!(code(&o), Some(0), "{}", stderr(&o));
    for f in ["trajectory.csv", "classical.csv", "manifest.json"] {
        assert!(tmp.path().join("h").join(f).is_file(), "{f}");
    }
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quantize(&["run"], tmp.path());
    assert_eq!(code(&o), Some(2));

    let o = quantize(&["run", "--scenario", "harmonic", "--dim", "1"], tmp.path());
    assert_eq!(code(&o), Some(2));

    std::fs::write(tmp.path().join("bad.json"), r#"{"name": "harmonic", "ctx": {"hbar": 1.0}}"#).unwrap();
    let o = quantize(&["run", "--config", "bad.json"], tmp.path());
    assert_eq!(code(&o), Some(2));
    assert!(stderr(&o).contains("dim"), "{}", stderr(&o));

    let o = quantize(&["run", "--scenario", "harmonic", "--bogus"], tmp.path());
    assert_eq!(code(&o), Some(2));
}

#[test]
fn infeasible_diffusion_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let coeffs = r#"{"d_qq": 0.0, "d_qp": 0.0, "d_pp": 0.0, "c_qq": 0.2, "c_qp": 1.0, "c_pq": -1.0, "c_pp": 0.2}"#;
    std::fs::write(tmp.path().join("fp.json"), coeffs).unwrap();
    let o = quantize(&["run", "--scenario", "fokker_planck", "--config", "fp.json", "--out", "fp"], tmp.path());
    assert_eq!(code(&o), Some(4), "{}", stderr(&o));
}

#[test]
fn injected_fault_exits_5() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quantize(&["verify", "--dim", "8", "--out", "v"], tmp.path());
    assert_eq!(code(&o), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["dim"], 8);
    assert!(tmp.path().join("v/verification.json").is_file());

    let o = quantize(&["verify", "--dim", "8", "--inject-fault"], tmp.path());
    assert_eq!(code(&o), Some(5));
    assert!(stderr(&o).contains("FAIL axioms"), "{}", stderr(&o));
}

#[test]
fn book_examples_run() {
    let tmp = tempfile::tempdir().unwrap();
    let blocks = json_blocks("cli.md");
    assert_eq!(blocks.len(), 2);

    std::fs::write(tmp.path().join("fp.json"), &blocks[0]).unwrap();
    let o = quantize(
        &["run", "--scenario", "fokker_planck", "--config", "fp.json", "--steps", "200", "--out", "fp"],
        tmp.path(),
    );
    assert_eq!(code(&o), Some(0), "{}", stderr(&o));

    let sweep: SweepConfig = serde_json::from_str(&blocks[1]).unwrap();
    assert_eq!(sweep.expand().len(), 4);
    std::fs::write(tmp.path().join("sweep.json"), &blocks[1]).unwrap();
    let o = quantize(&["sweep", "--config", "sweep.json", "--steps", "20", "--jobs", "2"], tmp.path());
    assert_eq!(code(&o), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("out/sweep/sweep.json").is_file());
}
