use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ransteer_core::container::Container;
use ransteer_core::harness::{
    CellGain, DetectorResult, ExperimentReport, LabeledScore, RunMetrics, ScenarioConfig, SegmentResult, SequenceResult,
};
use ransteer_core::marrs::MarrsPipeline;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the configuration's JSON rendering.
pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(config)?))
}

/// Provenance of an output directory. Holds no timestamps, so exporting the
/// same results twice yields the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub iterations: u64,
    pub config_hash: String,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(config: &ScenarioConfig, command: &str) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            iterations: config.iterations,
            config_hash: config_hash(config)?,
            files: BTreeMap::new(),
        })
    }
}

/// Writes result tables into one directory and records each in the manifest.
#[derive(Debug)]
pub struct Export {
    dir: PathBuf,
    manifest: Manifest,
}

#[derive(Serialize)]
struct GainRow {
    scenario: &'static str,
    cell: String,
    benign_mean: f64,
    benign_min: u32,
    benign_max: u32,
    malicious_mean: f64,
    malicious_min: u32,
    malicious_max: u32,
    percent: f64,
}

#[derive(Serialize)]
struct DetectionRow<'a> {
    detector: &'a str,
    threshold: f64,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    tn: usize,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    auc: f64,
}

impl<'a> From<&'a DetectorResult> for DetectionRow<'a> {
    fn from(r: &'a DetectorResult) -> Self {
        let m = &r.metrics;
        Self {
            detector: &r.name,
            threshold: r.threshold,
            tp: m.counts.tp,
            fp: m.counts.fp,
            fn_: m.counts.fn_,
            tn: m.counts.tn,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc: r.auc,
        }
    }
}

#[derive(Serialize)]
struct SegmentRow<'a> {
    segments: usize,
    train_start: u64,
    train_end: u64,
    #[serde(flatten)]
    result: DetectionRow<'a>,
}

#[derive(Serialize)]
struct SequenceRow {
    k: usize,
    rule: &'static str,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    tn: usize,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

#[derive(Serialize)]
struct ScoreRow {
    run: &'static str,
    cell: String,
    start: u64,
    loss: f64,
    malicious: bool,
}

fn run_name(run: u8) -> &'static str {
    match run {
        0 => "benign",
        1 => "sas",
        _ => "mas",
    }
}

impl Export {
    pub fn create(dir: &Path, config: &ScenarioConfig, command: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        Ok(Self { dir: dir.to_path_buf(), manifest: Manifest::new(config, command)? })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(Error::io(&path))?;
        self.manifest.files.insert(name.into(), sha256_hex(bytes));
        Ok(path)
    }

    fn table<R: Serialize>(&mut self, name: &str, header: Option<&[String]>, rows: impl IntoIterator<Item = R>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let csv_err = |source| Error::Csv { path: path.clone(), source };
        let mut w = csv::WriterBuilder::new().has_headers(header.is_none()).from_writer(Vec::new());
        if let Some(h) = header {
            w.write_record(h).map_err(csv_err)?;
        }
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io { path: path.clone(), source: e.into_error() })?;
        self.record(name, &bytes)
    }

    /// One row per iteration: ground-truth UE count of every cell, then the
    /// number of flagged UEs and issued handovers.
    pub fn counts(&mut self, name: &str, m: &RunMetrics) -> Result<PathBuf> {
        let mut header = vec!["iteration".to_string()];
        header.extend(m.cells.iter().map(|c| c.to_string()));
        header.extend(["anomalous".to_string(), "handovers".to_string()]);
        let rows = m.iterations.iter().enumerate().map(|(i, &t)| {
            let mut row = vec![t];
            row.extend(m.ue_counts[i].iter().map(|&c| u64::from(c)));
            row.extend([u64::from(m.anomalous[i]), u64::from(m.handovers[i])]);
            row
        });
        self.table(name, Some(&header), rows)
    }

    /// Mean/min/max UE count per cell in the benign run and each attack run.
    pub fn gain_summary(&mut self, name: &str, sas: &[CellGain], mas: &[CellGain]) -> Result<PathBuf> {
        let row = |scenario, g: &CellGain| GainRow {
            scenario,
            cell: g.cell.to_string(),
            benign_mean: g.benign.mean,
            benign_min: g.benign.min,
            benign_max: g.benign.max,
            malicious_mean: g.malicious.mean,
            malicious_min: g.malicious.min,
            malicious_max: g.malicious.max,
            percent: g.percent,
        };
        let rows: Vec<GainRow> = sas.iter().map(|g| row("sas", g)).chain(mas.iter().map(|g| row("mas", g))).collect();
        self.table(name, None, rows)
    }

    pub fn detection(&mut self, name: &str, results: &[&DetectorResult]) -> Result<PathBuf> {
        self.table(name, None, results.iter().map(|r| DetectionRow::from(*r)))
    }

    pub fn segments(&mut self, name: &str, results: &[SegmentResult]) -> Result<PathBuf> {
        let rows = results.iter().map(|s| SegmentRow {
            segments: s.segments,
            train_start: s.iterations.start,
            train_end: s.iterations.end,
            result: DetectionRow::from(&s.result),
        });
        self.table(name, None, rows)
    }

    pub fn sequence_sweep(&mut self, name: &str, results: &[SequenceResult]) -> Result<PathBuf> {
        let rows = results.iter().map(|s| {
            let m = &s.metrics;
            SequenceRow {
                k: s.k,
                rule: match s.rule {
                    ransteer_core::marrs::SequenceRule::All => "all",
                    ransteer_core::marrs::SequenceRule::Majority => "majority",
                },
                tp: m.counts.tp,
                fp: m.counts.fp,
                fn_: m.counts.fn_,
                tn: m.counts.tn,
                accuracy: m.accuracy,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
            }
        });
        self.table(name, None, rows)
    }

    pub fn scores(&mut self, name: &str, scores: &[LabeledScore]) -> Result<PathBuf> {
        let rows = scores.iter().map(|s| ScoreRow {
            run: run_name(s.run),
            cell: s.cell.to_string(),
            start: s.start,
            loss: s.loss,
            malicious: s.malicious,
        });
        self.table(name, None, rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.record(name, &bytes)
    }

    pub fn bundle(&mut self, name: &str, pipeline: &MarrsPipeline) -> Result<PathBuf> {
        self.record(name, &pipeline.to_container().encode())
    }

    /// Every table of a full experiment.
    pub fn experiment(&mut self, report: &ExperimentReport) -> Result<()> {
        self.counts("counts_benign.csv", &report.benign_run)?;
        self.counts("counts_sas.csv", &report.sas_run)?;
        self.counts("counts_mas.csv", &report.mas_run)?;
        self.gain_summary("attack_summary.csv", &report.sas_gain, &report.mas_gain)?;
        let mut rows = vec![&report.marrs];
        rows.extend(report.benchmarks.iter());
        self.detection("detection.csv", &rows)?;
        self.detection("ablation.csv", &[&report.marrs, &report.ae1_plus, &report.ae1_only])?;
        self.segments("training_segments.csv", &report.segments)?;
        self.sequence_sweep("sequence_sweep.csv", &report.sequences)?;
        self.scores("test_scores.csv", &report.test_scores)?;
        Ok(())
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(self) -> Result<Manifest> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, bytes).map_err(Error::io(&path))?;
        Ok(self.manifest)
    }
}

pub fn save_bundle(pipeline: &MarrsPipeline, path: &Path) -> Result<()> {
    fs::write(path, pipeline.to_container().encode()).map_err(Error::io(path))
}

pub fn load_bundle(path: &Path) -> Result<MarrsPipeline> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    Ok(MarrsPipeline::from_container(&Container::decode(&bytes)?)?)
}
