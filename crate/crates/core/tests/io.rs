use mchb::model::{load_config, ConfigError, FlowBackend, Preset};
use mchb::output::{read_dump, CSV_HEADER, STATE_COMPONENTS};
use mchb::simulation::run;

#[test]
fn run_writes_csv_meta_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Preset::ZeroSource.config();
    cfg.grid_nx = 16;
    cfg.grid_ny = 12;
    cfg.seed = 99;
    cfg.t_end = 4.0 * cfg.time_step();
    cfg.output.dump_every = 2;
    cfg.output.dir = Some(dir.path().to_string_lossy().into_owned());
    let summary = run(&cfg).unwrap();
    assert_eq!(summary.steps, 4);

    let mut rd = csv::Reader::from_path(dir.path().join("energy.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    for (row, rep) in rows.iter().zip(&summary.reports) {
        assert_eq!(row[2].parse::<f64>().unwrap(), rep.energy);
    }

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 99);
    assert_eq!(meta["n_steps"], 4);

    let names: Vec<String> = {
        let mut v: Vec<_> = std::fs::read_dir(dir.path().join("dumps"))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        v.sort();
        v
    };
    assert_eq!(names, ["state_000000.bin", "state_000002.bin", "state_000004.bin"]);
    let d = read_dump(&dir.path().join("dumps/state_000004.bin")).unwrap();
    assert_eq!((d.nx, d.ny, d.seed), (16, 12, 99));
    assert_eq!(d.comps.len(), STATE_COMPONENTS.len());
    assert_eq!(d.comps[0], summary.final_state.phi[0]);
    assert_eq!(d.comps[10], summary.final_state.p);
}

#[test]
fn config_file_overrides_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"grid_nx": 32, "flow_backend": "none", "model": {"chi_phi": 1.5}}"#).unwrap();
    let cfg = load_config(Some(&path), Some(&Preset::ZeroSource.config()), true).unwrap();
    assert_eq!(cfg.grid_nx, 32);
    assert_eq!(cfg.flow_backend, FlowBackend::None);
    assert_eq!(cfg.model.chi_phi, 1.5);
    assert!(!cfg.sources_enabled);
    // Touching the model without pinning epsilon re-derives it.
    let b = cfg.assumptions().epsilon_bound;
    assert!((cfg.model.epsilon - 0.8 * b).abs() < 1e-15);
}

#[test]
fn bad_documents_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"grid_nx": 32, "no_such_key": 1}"#).unwrap();
    assert!(matches!(load_config(Some(&path), None, false), Err(ConfigError::Parse(_))));
    std::fs::write(&path, r#"{"model": {"kappa": 2.0}}"#).unwrap();
    assert!(matches!(load_config(Some(&path), None, false), Err(ConfigError::Invalid(_))));
    std::fs::write(&path, r#"{"model": {"epsilon": 0.5}}"#).unwrap();
    assert!(load_config(Some(&path), None, false).is_ok());
    assert!(matches!(load_config(Some(&path), None, true), Err(ConfigError::Assumption(_))));
    assert!(matches!(
        load_config(Some(&dir.path().join("missing.json")), None, false),
        Err(ConfigError::Io(_))
    ));
}
