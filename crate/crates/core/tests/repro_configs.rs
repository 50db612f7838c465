//! The shipped reproduction configs load, validate and mean what they say.

use std::path::PathBuf;

use horizon_core::io::{ModelChoice, RunConfig};
use horizon_core::units::ELECTRON_MASS_KG;
use horizon_core::Error;

fn repro_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../repro")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&repro_dir().join(name)).unwrap().config
}

#[test]
fn every_shipped_config_validates() {
    let mut names: Vec<_> = std::fs::read_dir(repro_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".conf"))
        .collect();
    names.sort();
    assert_eq!(names, ["fig1.conf", "fig2.conf", "gamma0-check.conf", "nosupport.conf", "printed-params.conf"]);
    for name in names {
        let cfg = load(&name);
        cfg.validate().unwrap();
        assert!(cfg.output.dir.ends_with(name.trim_end_matches(".conf")), "{name}");
    }
}

#[test]
fn printed_parameter_set_is_reproduced_exactly() {
    let cfg = load("printed-params.conf");
    let p = &cfg.params;
    assert_eq!(p.m_star, 5e-35);
    assert_eq!(p.hbar_gamma, 47.0);
    assert_eq!(p.hbar_g, 3e-4);
    assert_eq!(p.hbar_omega0, 1473.36);
    assert_eq!(p.hbar_omega_p, 1473.85);
    assert_eq!((cfg.pump.k_up, cfg.pump.k_down), (0.27, 0.539));
    assert_eq!((cfg.defect.depth, cfg.defect.width, cfg.defect.center), (-0.85, 0.75, 400.0));
    assert_eq!((cfg.grid.n_points, cfg.grid.length), (2048, 800.0));
    assert!(cfg.probe.is_none());
}

#[test]
fn working_configs_share_the_physical_parameters() {
    let base = load("fig1.conf");
    assert!((base.params.m_star / ELECTRON_MASS_KG - 3e-5).abs() < 1e-15);
    for name in ["fig2.conf", "nosupport.conf", "gamma0-check.conf"] {
        let cfg = load(name);
        assert_eq!(cfg.params, base.params, "{name}");
        assert_eq!(cfg.grid, base.grid, "{name}");
        assert_eq!(cfg.defect, base.defect, "{name}");
    }
}

#[test]
fn variant_flags() {
    assert!(load("fig2.conf").pump.supported);
    assert!(!load("nosupport.conf").pump.supported);
    assert!(load("nosupport.conf").analysis.downstream_plateau.is_some());
    let lossless = load("gamma0-check.conf");
    let probe = lossless.probe.as_ref().unwrap();
    assert_eq!(probe.model, ModelChoice::Linearized);
    assert!(!probe.lossy);
    assert_eq!(lossless.probe_loss_rate(), 0.0);
    assert!(lossless.sweep.energies.is_some());
}

#[test]
fn hashes_differ_between_variants_and_are_stable() {
    let a = load("fig2.conf");
    assert_eq!(a.hash(), load("fig2.conf").hash());
    assert_ne!(a.hash(), load("nosupport.conf").hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn broken_documents_report_where_and_what() {
    match RunConfig::from_toml_str("[grid]\nn_points = 2048\nlength = \n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    match RunConfig::from_toml_str("[defect]\nwidth = -1.0\n") {
        Err(Error::Validation { field, .. }) => assert!(field.contains("width"), "{field}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(RunConfig::from_toml_str("[grid]\nbogus = 1\n"), Err(Error::Parse { .. })));
}
