//! Stage pipeline behaviour on real stage computations.

use std::path::Path;

use horizon_core::io::{run_stage, RunConfig, RunOptions, Stage, StageStatus, Workspace};
use horizon_core::Error;

const OPTIONS: RunOptions = RunOptions { workers: 1, overwrite: false };

fn config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../repro/fig2.conf");
    RunConfig::load(&path).unwrap().config
}

fn numeric_body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn missing_upstream_checkpoint_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(config(), dir.path());
    match run_stage(&ws, Stage::Bdg, &OPTIONS) {
        Err(Error::MissingUpstreamArtifact { stage, upstream, .. }) => {
            assert_eq!((stage.as_str(), upstream.as_str()), ("bdg", "steady"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn report_without_sweep_lists_absent_stages() {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(config(), dir.path());
    run_stage(&ws, Stage::Bistability, &OPTIONS).unwrap();
    let report = run_stage(&ws, Stage::Report, &OPTIONS).unwrap();
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains(&ws.hash));
    for absent in ["steady", "dispersion-map", "bdg", "sweep", "fit"] {
        assert!(md.contains(&format!("`{absent}`")), "{absent} missing from\n{md}");
    }
    assert!(!md.contains("`bistability`"));
    assert!(report.files.iter().any(|f| f.ends_with("fig1c_bistability.svg")));
}

#[test]
fn steady_stage_is_reproducible_and_skips_when_valid() {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(config(), dir.path());
    let first = run_stage(&ws, Stage::Steady, &OPTIONS).unwrap();
    assert!(!first.skipped);
    let profile = dir.path().join("steady_profile.csv");
    let before = numeric_body(&profile);
    assert!(std::fs::read_to_string(&profile).unwrap().starts_with(&format!("# config_hash: {}", ws.hash)));

    assert!(run_stage(&ws, Stage::Steady, &OPTIONS).unwrap().skipped);
    let again = RunOptions { overwrite: true, ..OPTIONS };
    assert!(!run_stage(&ws, Stage::Steady, &again).unwrap().skipped);
    assert_eq!(before, numeric_body(&profile));

    // The bistability stage has no upstream; re-running it is byte-stable too.
    run_stage(&ws, Stage::Bistability, &OPTIONS).unwrap();
    let curve = std::fs::read(dir.path().join("bistability.csv")).unwrap();
    run_stage(&ws, Stage::Bistability, &again).unwrap();
    assert_eq!(curve, std::fs::read(dir.path().join("bistability.csv")).unwrap());

    // Removing the steady checkpoint invalidates what depends on it.
    std::fs::remove_file(ws.checkpoint_path(Stage::Steady)).unwrap();
    assert_eq!(ws.status(Stage::Steady), StageStatus::Missing);
    assert_eq!(ws.status(Stage::Bistability), StageStatus::Valid);
}
