//! End-to-end behaviour of the `wapmc` binary and the command functions.

use std::path::{Path, PathBuf};
use std::process::Command;

use wapmc_cli::commands::{cmd_diagnose, cmd_fit, load_run, FitReport, RunManifest};
use wapmc_cli::input::{read_dataset, write_dataset};
use wapmc_cli::{CliError, FitSettings};
use wapmc_core::{ChainConfig, ModelKind, WapModelSpec};

const TOY: &str = "\
region_id,response_type,value,x1,x2,centroid_x,centroid_y,shape_group,population
A,c,1.5,1,0,0.0,0.0,g1,
B,c,0.7,0,1,1.0,0.5,g1,
C,c,2.2,1,1,2.0,0.0,g2,
A,d,3,1,0,0.0,0.0,,120
B,d,0,0,1,1.0,0.5,,80
C,d,5,1,1,2.0,0.0,,200
";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn toy_settings() -> FitSettings {
    FitSettings {
        model: ModelKind::Wap,
        chain: ChainConfig::new(60, 20, 4, 5),
        spec: WapModelSpec::with_r(2),
        ppp_b: 100,
    }
}

fn wapmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wapmc"))
}

#[test]
fn toy_fit_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("run");
    cmd_fit(&data, &toy_settings(), &out).unwrap();
    for name in ["draws.csv", "summary.json", "loglik.csv", "run-manifest.json"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let summary: FitReport =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.retained_draws, (60 - 20) / 4);
    let draws = std::fs::read_to_string(out.join("draws.csv")).unwrap();
    assert_eq!(draws.lines().count(), 1 + (60 - 20) / 4);
    let loglik = std::fs::read_to_string(out.join("loglik.csv")).unwrap();
    assert_eq!(loglik.lines().count(), 1 + 60);
    assert!(draws.lines().next().unwrap().starts_with("draw,eta[0],eta[1],eta_c[0]"));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let first = dir.path().join("a");
    cmd_fit(&data, &toy_settings(), &first).unwrap();
    let manifest = RunManifest::read(&first.join("run-manifest.json")).unwrap();
    let second = dir.path().join("b");
    cmd_fit(&manifest.data, &manifest.settings, &second).unwrap();
    for name in ["draws.csv", "loglik.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn binary_fit_manifest_and_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let cfg = write(dir.path(), "run.cfg", "r = 2\nppp_b = 100\nseed = 9\n");
    let a = dir.path().join("a");
    let status = wapmc()
        .args(["fit", "--model", "wap", "--basis", "tps", "--iters", "40", "--burnin", "20", "--thin", "2"])
        .arg("--data")
        .arg(&data)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .status()
        .unwrap();
    assert!(status.success());
    let b = dir.path().join("b");
    let status = wapmc()
        .arg("fit")
        .arg("--manifest")
        .arg(a.join("run-manifest.json"))
        .arg("--out")
        .arg(&b)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(a.join("draws.csv")).unwrap(),
        std::fs::read(b.join("draws.csv")).unwrap()
    );

    let out = wapmc().arg("diagnose").arg("--run").arg(&a).args(["--ppp-B", "100"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for block in ["== DIC ==", "== Posterior predictive p-values", "== Predictive MSE ==", "== Spatial effects"] {
        assert!(text.contains(block), "missing {block} in\n{text}");
    }
}

#[test]
fn diagnose_writes_hazard_per_region() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("run");
    cmd_fit(&data, &toy_settings(), &out).unwrap();
    let report = cmd_diagnose(&out, None).unwrap();
    assert_eq!(report.hazard_rows, Some(3));
    let hazard = std::fs::read_to_string(out.join("hazard.csv")).unwrap();
    assert_eq!(hazard.lines().count(), 1 + 3);
    let first: Vec<&str> = hazard.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&first[..3], &["A", "3", "120"]);
    assert_eq!(first[3].parse::<f64>().unwrap(), 3.0 / 120.0);
}

#[test]
fn reloaded_chain_matches_the_written_draws() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("run");
    cmd_fit(&data, &toy_settings(), &out).unwrap();
    let run = load_run(&out).unwrap();
    assert_eq!(run.chain.len(), 10);
    let dic = wapmc_core::diagnostics::dic(&run.chain).unwrap();
    let recorded = run.summary.diagnostics.dic.unwrap();
    assert!((dic.dic - recorded.dic).abs() <= 1e-9 * recorded.dic.abs().max(1.0));
}

#[test]
fn missing_draws_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("run");
    cmd_fit(&data, &toy_settings(), &out).unwrap();
    std::fs::remove_file(out.join("draws.csv")).unwrap();
    let err = cmd_diagnose(&out, None).unwrap_err();
    assert!(matches!(err, CliError::MissingArtifact(_)));
    assert!(err.to_string().contains("draws.csv"));
}

#[test]
fn negative_time_names_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let bad = TOY.replace("B,c,0.7", "B,c,-1");
    let p = write(dir.path(), "bad.csv", &bad);
    let err = read_dataset(&p).unwrap_err();
    assert!(matches!(err, CliError::Validation { .. }));
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn schema_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (TOY.replace("C,d,5,", "C,d,five,"), "line 7, column 3"),
        (TOY.replace("B,c,0.7,0,1", "B,c,0.7,zero,1"), "line 3, column 4"),
        (TOY.replace("A,d,3", "A,q,3"), "line 5, column 2"),
        (TOY.replace("C,d,5,1,1,2.0,0.0,,200", "C,d,5,1,1,2.0,0.0,,-4"), "line 7, column 9"),
    ];
    for (text, expect) in cases {
        let p = write(dir.path(), "bad.csv", &text);
        let err = read_dataset(&p).unwrap_err();
        assert!(err.to_string().contains(expect), "{err} lacks {expect}");
    }
    let p = write(dir.path(), "hdr.csv", &TOY.replace("centroid_y", "centroid_z"));
    assert!(read_dataset(&p).unwrap_err().to_string().contains("centroid_z"));
}

#[test]
fn unknown_config_key_fails_before_fitting() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let cfg = write(dir.path(), "run.cfg", "itres = 10\n");
    let out = dir.path().join("run");
    let o = wapmc()
        .arg("fit")
        .arg("--data")
        .arg(&data)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("itres"));
    assert!(!out.exists());
}

#[test]
fn inputs_are_not_modified() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    cmd_fit(&data, &toy_settings(), &dir.path().join("run")).unwrap();
    assert_eq!(std::fs::read_to_string(&data).unwrap(), TOY);
}

#[test]
fn simulate_writes_cell_tables() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(dir.path(), "grid.cfg", "r = 3\nsnr = 1:1\nb2 = 8\nn = 40\niters = 40\nburnin = 20\n");
    let out = dir.path().join("sim");
    let o = wapmc()
        .arg("simulate")
        .arg("--grid")
        .arg(&grid)
        .args(["--reps", "2", "--seed", "4"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["cells.csv", "replicates.csv", "failures.csv", "experiment.json"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let cells = std::fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 2);
}

#[test]
fn bad_thread_cap_is_reported() {
    let o = wapmc()
        .env("WAPMC_THREADS", "zero")
        .args(["diagnose", "--run", "/nonexistent"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("WAPMC_THREADS"));
}

#[test]
fn written_dataset_reads_back_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let toy = read_dataset(&write(dir.path(), "toy.csv", TOY)).unwrap();
    let copy = dir.path().join("copy.csv");
    write_dataset(&copy, &toy).unwrap();
    assert_eq!(read_dataset(&copy).unwrap(), toy);

    let spec = wapmc_core::sim::SignalSpec { n: 40, ..Default::default() };
    let sim = wapmc_core::sim::generate_signal(&spec, &mut wapmc_core::rng::substream(4, &[0])).unwrap();
    write_dataset(&copy, &sim.dataset).unwrap();
    assert_eq!(read_dataset(&copy).unwrap(), sim.dataset);
}
