use std::fs;

use ransteer::{config_hash, load_bundle, load_config, parse_config, save_bundle, Error, Export, Overrides};
use ransteer_core::harness::{run_closed_loop, RunMode, ScenarioConfig};
use ransteer_core::marrs::{DetectionConfig, MarrsPipeline};
use ransteer_core::nn::TrainConfig;

fn short(iterations: u64) -> ScenarioConfig {
    ScenarioConfig { iterations, seed: 2, ..ScenarioConfig::default() }
}

#[test]
fn per_iteration_table_has_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let config = short(50);
    let run = run_closed_loop(&config).unwrap();
    let mut ex = Export::create(dir.path(), &config, "run").unwrap();
    let path = ex.counts("counts.csv", &run.metrics).unwrap();
    ex.finish().unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), ["iteration", "BS1", "BS2", "BS3", "BS4", "BS5", "BS6", "anomalous", "handovers"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    for row in &rows {
        let total: u32 = (1..=6).map(|i| row[i].parse::<u32>().unwrap()).sum();
        assert_eq!(total, 50);
    }
}

#[test]
fn exporting_twice_gives_identical_bytes() {
    let config = short(40);
    let run = run_closed_loop(&config).unwrap();
    let write = || {
        let dir = tempfile::tempdir().unwrap();
        let mut ex = Export::create(dir.path(), &config, "run").unwrap();
        ex.counts("counts.csv", &run.metrics).unwrap();
        ex.json("run.json", &run.metrics).unwrap();
        ex.finish().unwrap();
        ["counts.csv", "run.json", "manifest.json"].map(|f| fs::read(dir.path().join(f)).unwrap())
    };
    assert_eq!(write(), write());
}

#[test]
fn manifest_hash_tracks_the_config() {
    let a = short(40);
    let b = short(40);
    assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    let changed = [
        ScenarioConfig { seed: 3, ..a.clone() },
        ScenarioConfig { iterations: 41, ..a.clone() },
        ScenarioConfig { mode: RunMode::Split, ..a.clone() },
    ];
    for c in &changed {
        assert_ne!(config_hash(&a).unwrap(), config_hash(c).unwrap());
    }
    let dir = tempfile::tempdir().unwrap();
    let m = Export::create(dir.path(), &a, "run").unwrap().finish().unwrap();
    assert_eq!(m.config_hash, config_hash(&a).unwrap());
    assert_eq!((m.seed, m.iterations), (2, 40));
}

#[test]
fn config_files_take_defaults_and_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    fs::write(&ok, r#"{"iterations": 120, "seed": 9, "attack": {"enabled": true, "malicious_cells": [5]}}"#).unwrap();
    let c = load_config(&ok).unwrap();
    assert_eq!((c.iterations, c.seed), (120, 9));
    assert_eq!(c.topology, ScenarioConfig::default().topology);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"iterations": 10, "colour": "red"}"#).unwrap();
    assert!(matches!(load_config(&bad), Err(Error::Config { .. })));
    assert!(parse_config(r#"{"topology": {"ue_count": 50, "typo": 1}}"#).is_err());
    assert!(parse_config(r#"{"iterations": 0}"#).is_err());
    assert!(matches!(load_config(&dir.path().join("missing.json")), Err(Error::Io { .. })));

    let round = parse_config(&serde_json::to_string(&ScenarioConfig::default()).unwrap()).unwrap();
    assert_eq!(round, ScenarioConfig::default());
}

#[test]
fn overrides_win_over_the_file() {
    let o = Overrides { seed: Some(11), iterations: Some(77), mode: Some(RunMode::Split) };
    let c = o.apply(ScenarioConfig::default()).unwrap();
    assert_eq!((c.seed, c.iterations, c.mode), (11, 77, RunMode::Split));
    assert!(Overrides { iterations: Some(0), ..Overrides::default() }.apply(ScenarioConfig::default()).is_err());
}

#[test]
fn detector_bundles_survive_the_disk() {
    let config = short(60);
    let run = run_closed_loop(&config).unwrap();
    let fast = TrainConfig { epochs: 3, ..DetectionConfig::default().ae1_train };
    let det = DetectionConfig { hidden_size: 6, latent_dim: 3, ae1_train: fast, ae2_train: fast, ..DetectionConfig::default() };
    let (pipeline, _) = MarrsPipeline::train(&run.store, 0..50, &det, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.bundle");
    save_bundle(&pipeline, &path).unwrap();
    let back = load_bundle(&path).unwrap();
    let w = pipeline.extract(&run.store, 40..60).unwrap();
    assert_eq!(back.scores(&w).unwrap(), pipeline.scores(&w).unwrap());

    let mut bytes = fs::read(&path).unwrap();
    bytes[0] ^= 0xff;
    fs::write(&path, bytes).unwrap();
    assert!(load_bundle(&path).is_err());
}
