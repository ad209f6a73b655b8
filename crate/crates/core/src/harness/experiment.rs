use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    compute_attack_gain, compute_detection_metrics, run_closed_loop, CellGain, DetectionMetrics, RunMetrics, RunOutput,
    ScenarioConfig,
};
use crate::marrs::{
    calibrate_threshold, classify_sequence, fit_extractors, Ae1PlusModel, BenchmarkDetector, BenchmarkKind, CellWindows,
    MarrsPipeline, SequenceRule, Threshold, WindowScore,
};
use crate::math;
use crate::netsim::CellId;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub sas_attackers: Vec<CellId>,
    pub mas_attackers: Vec<CellId>,
    /// Consecutive equal slices of the benign training span for the data-volume study.
    pub training_segments: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { sas_attackers: vec![CellId(5)], mas_attackers: vec![CellId(1), CellId(5)], training_segments: 4 }
    }
}

/// A window score with its provenance and ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    /// 0 benign run, 1 SAS, 2 MAS.
    pub run: u8,
    pub cell: CellId,
    pub start: u64,
    pub loss: f64,
    pub malicious: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorResult {
    pub name: String,
    pub threshold: f64,
    pub metrics: DetectionMetrics,
    /// Benign-vs-malicious separability of the test losses.
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    /// Number of leading segments trained on.
    pub segments: usize,
    pub iterations: Range<u64>,
    pub result: DetectorResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub k: usize,
    pub rule: SequenceRule,
    pub metrics: DetectionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub sas_gain: Vec<CellGain>,
    pub mas_gain: Vec<CellGain>,
    pub marrs: DetectorResult,
    pub ae1_only: DetectorResult,
    pub ae1_plus: DetectorResult,
    pub benchmarks: Vec<DetectorResult>,
    pub segments: Vec<SegmentResult>,
    pub sequences: Vec<SequenceResult>,
    /// MARRS losses of the test windows.
    pub test_scores: Vec<LabeledScore>,
    pub benign_run: RunMetrics,
    pub sas_run: RunMetrics,
    pub mas_run: RunMetrics,
}

/// Where the evaluation windows come from.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSplit {
    pub train: Range<u64>,
    pub benign_validation: Range<u64>,
    /// Window starts of the attack runs used for calibration.
    pub attack_validation: Range<u64>,
    /// Window starts of the attack runs used for testing.
    pub attack_test: Range<u64>,
}

impl EvaluationSplit {
    /// Training is the leading share of the benign run. Attack-run windows lie
    /// entirely within the attack period; the calibration slice comes first,
    /// then a gap of one window length so no iteration is shared with the test slice.
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let n = config.iterations;
        let w = config.detection.window_len as u64;
        let train_end = (n as f64 * config.detection.train_fraction) as u64;
        let a = config.attack.start_iteration;
        let last_start = n.checked_sub(w).ok_or_else(|| Error::Config("run shorter than one window".into()))?;
        let val_end = a + ((last_start.saturating_sub(a)) as f64 * config.detection.validation_fraction) as u64;
        let test_start = val_end + w;
        if train_end < w || a >= last_start || test_start > last_start {
            return Err(Error::Config("run too short for training, calibration and test windows".into()));
        }
        Ok(Self {
            train: 0..train_end,
            benign_validation: train_end..n,
            attack_validation: a..val_end,
            attack_test: test_start..last_start + 1,
        })
    }
}

/// The benign run of a scenario and its single- and multi-attacker twins.
#[derive(Debug, Clone)]
pub struct PairedRuns {
    pub benign: RunOutput,
    pub sas: RunOutput,
    pub mas: RunOutput,
    pub sas_cells: Vec<CellId>,
    pub mas_cells: Vec<CellId>,
}

impl PairedRuns {
    pub fn run(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let exp = &config.experiment;
        Ok(Self {
            benign: run_closed_loop(&config.benign())?,
            sas: run_closed_loop(&config.with_attackers(&exp.sas_attackers))?,
            mas: run_closed_loop(&config.with_attackers(&exp.mas_attackers))?,
            sas_cells: exp.sas_attackers.clone(),
            mas_cells: exp.mas_attackers.clone(),
        })
    }

    pub fn sas_gain(&self) -> Result<Vec<CellGain>> {
        compute_attack_gain(&self.benign.metrics, &self.sas.metrics)
    }

    pub fn mas_gain(&self) -> Result<Vec<CellGain>> {
        compute_attack_gain(&self.benign.metrics, &self.mas.metrics)
    }
}

/// MARRS on the test split: window metrics, the sequence sweep and the
/// labeled test losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorEvaluation {
    pub result: DetectorResult,
    pub sequences: Vec<SequenceResult>,
    pub test_scores: Vec<LabeledScore>,
}

/// Windows of all three runs under one set of statistics.
struct RunWindows {
    benign: CellWindows,
    sas: CellWindows,
    mas: CellWindows,
}

fn score_map(scores: &[WindowScore]) -> BTreeMap<(CellId, u64), f64> {
    scores.iter().map(|s| ((s.cell, s.start), s.loss.unwrap_or(f64::INFINITY))).collect()
}

/// Keeps at most `ratio` negatives per positive, or the reverse, by a seeded draw.
fn balance(mut items: Vec<LabeledScore>, ratio: f64, seed: u64, salt: u64) -> Vec<LabeledScore> {
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = items.drain(..).partition(|s| s.malicious);
    let mut r = rng::substream(seed, Stream::Training, salt);
    if pos.is_empty() || neg.is_empty() {
        pos.extend(neg);
        return pos;
    }
    let want_neg = libm::round(pos.len() as f64 * ratio) as usize;
    if neg.len() > want_neg {
        neg.shuffle(&mut r);
        neg.truncate(want_neg.max(1));
    } else {
        let want_pos = (libm::round(neg.len() as f64 / ratio) as usize).max(1);
        if pos.len() > want_pos {
            pos.shuffle(&mut r);
            pos.truncate(want_pos);
        }
    }
    pos.extend(neg);
    pos.sort_by(|a, b| (a.run, a.cell, a.start).cmp(&(b.run, b.cell, b.start)));
    pos
}

/// The labeled evaluation subjects, identified by run, cell and start; losses
/// are filled in per detector.
struct Subjects {
    validation: Vec<LabeledScore>,
    test: Vec<LabeledScore>,
    /// Every test-slice window before balancing.
    test_all: Vec<LabeledScore>,
}

fn subjects(runs: &PairedRuns, windows: &RunWindows, split: &EvaluationSplit, ratio: f64, seed: u64) -> Subjects {
    let mut validation = Vec::new();
    let mut test = Vec::new();
    let mut push = |run: u8, ws: &CellWindows, attackers: &[CellId]| {
        for (&cell, list) in ws {
            for w in list {
                let s = LabeledScore { run, cell, start: w.start, loss: 0.0, malicious: attackers.contains(&cell) };
                if run == 0 {
                    if w.start >= split.benign_validation.start {
                        validation.push(s);
                    }
                } else if split.attack_validation.contains(&w.start) {
                    validation.push(s);
                } else if split.attack_test.contains(&w.start) {
                    test.push(s);
                }
            }
        }
    };
    push(0, &windows.benign, &[]);
    push(1, &windows.sas, &runs.sas_cells);
    push(2, &windows.mas, &runs.mas_cells);
    Subjects {
        validation: balance(validation, ratio, seed, 0xba1),
        test: balance(test.clone(), ratio, seed, 0xba2),
        test_all: test,
    }
}

fn fill(subjects: &[LabeledScore], maps: &[BTreeMap<(CellId, u64), f64>; 3]) -> Vec<LabeledScore> {
    subjects
        .iter()
        .map(|s| LabeledScore { loss: maps[s.run as usize].get(&(s.cell, s.start)).copied().unwrap_or(f64::INFINITY), ..*s })
        .collect()
}

fn evaluate(name: &str, scores: [Vec<WindowScore>; 3], subj: &Subjects, cfg: &ScenarioConfig) -> Result<(DetectorResult, Threshold, Vec<LabeledScore>)> {
    let maps = scores.map(|s| score_map(&s));
    let val = fill(&subj.validation, &maps);
    let finite = |v: &[LabeledScore]| v.iter().map(|s| if s.loss.is_finite() { s.loss } else { f64::MAX }).collect::<Vec<_>>();
    let labels = |v: &[LabeledScore]| v.iter().map(|s| s.malicious).collect::<Vec<_>>();
    let threshold = calibrate_threshold(&finite(&val), &labels(&val), cfg.detection.threshold)?;
    let (result, test) = score_test(name, &maps, subj, threshold)?;
    Ok((result, threshold, test))
}

fn score_test(
    name: &str,
    maps: &[BTreeMap<(CellId, u64), f64>; 3],
    subj: &Subjects,
    threshold: Threshold,
) -> Result<(DetectorResult, Vec<LabeledScore>)> {
    let test = fill(&subj.test, maps);
    let labels = |v: &[LabeledScore]| v.iter().map(|s| s.malicious).collect::<Vec<_>>();
    let verdicts: Vec<bool> = test.iter().map(|s| threshold.classify(s.loss)).collect();
    let metrics = compute_detection_metrics(&verdicts, &labels(&test))?;
    let neg: Vec<f64> = test.iter().filter(|s| !s.malicious).map(|s| s.loss).collect();
    let pos: Vec<f64> = test.iter().filter(|s| s.malicious).map(|s| s.loss).collect();
    let result = DetectorResult { name: name.into(), threshold: threshold.value, metrics, auc: math::auc(&neg, &pos) };
    log::info!(
        "{name}: threshold {:.4} P {:.3} R {:.3} F1 {:.3} AUC {:.3}",
        threshold.value,
        metrics.precision,
        metrics.recall,
        metrics.f1,
        result.auc
    );
    Ok((result, test))
}

fn run_windows(pipeline: &MarrsPipeline, runs: &PairedRuns, n: u64) -> Result<RunWindows> {
    Ok(RunWindows {
        benign: pipeline.extract(&runs.benign.store, 0..n)?,
        sas: pipeline.extract(&runs.sas.store, 0..n)?,
        mas: pipeline.extract(&runs.mas.store, 0..n)?,
    })
}

fn marrs_scores(p: &MarrsPipeline, w: &RunWindows) -> Result<[Vec<WindowScore>; 3]> {
    Ok([p.scores(&w.benign)?, p.scores(&w.sas)?, p.scores(&w.mas)?])
}

/// S-MARRS over runs of `k` consecutive windows of one cell in one run.
/// Sequences are labeled by their cell and balanced like single windows.
pub fn sequence_sweep(
    windows: &[LabeledScore],
    threshold: &Threshold,
    lengths: &[usize],
    benign_per_malicious: f64,
    seed: u64,
) -> Result<Vec<SequenceResult>> {
    let mut by_subject: BTreeMap<(u8, CellId), Vec<&LabeledScore>> = BTreeMap::new();
    for s in windows {
        by_subject.entry((s.run, s.cell)).or_default().push(s);
    }
    for list in by_subject.values_mut() {
        list.sort_by_key(|s| s.start);
    }
    let mut out = Vec::new();
    for &k in lengths {
        let mut sequences: Vec<(LabeledScore, Vec<bool>)> = Vec::new();
        for list in by_subject.values() {
            for seq in list.windows(k) {
                if seq.windows(2).any(|p| p[1].start != p[0].start + 1) {
                    continue;
                }
                sequences.push((*seq[0], seq.iter().map(|s| threshold.classify(s.loss)).collect()));
            }
        }
        let heads = balance(sequences.iter().map(|(h, _)| *h).collect(), benign_per_malicious, seed, 0x5e0 + k as u64);
        let keep: BTreeMap<(u8, CellId, u64), ()> = heads.iter().map(|h| ((h.run, h.cell, h.start), ())).collect();
        for rule in [SequenceRule::All, SequenceRule::Majority] {
            let mut verdicts = Vec::new();
            let mut truth = Vec::new();
            for (head, labels) in &sequences {
                if keep.contains_key(&(head.run, head.cell, head.start)) {
                    verdicts.push(classify_sequence(labels, rule, k)?);
                    truth.push(head.malicious);
                }
            }
            out.push(SequenceResult { k, rule, metrics: compute_detection_metrics(&verdicts, &truth)? });
        }
    }
    Ok(out)
}

/// Trains MARRS on the leading benign span and calibrates its threshold on
/// the validation windows of all three runs.
pub fn train_detector(config: &ScenarioConfig, runs: &PairedRuns) -> Result<(MarrsPipeline, DetectorEvaluation)> {
    let ctx = Context::new(config, runs)?;
    let (pipeline, eval) = ctx.marrs()?;
    Ok((pipeline, eval))
}

/// Scores a trained, calibrated detector on the test windows of `runs`.
pub fn evaluate_detector(pipeline: &MarrsPipeline, config: &ScenarioConfig, runs: &PairedRuns) -> Result<DetectorEvaluation> {
    let threshold = pipeline.threshold.ok_or_else(|| Error::Config("detector has no calibrated threshold".into()))?;
    let split = EvaluationSplit::new(config)?;
    let det = &config.detection;
    let windows = run_windows(pipeline, runs, config.iterations)?;
    let subj = subjects(runs, &windows, &split, det.benign_per_malicious, config.seed);
    let maps = marrs_scores(pipeline, &windows)?.map(|s| score_map(&s));
    let (result, test_scores) = score_test("MARRS", &maps, &subj, threshold)?;
    let all_test = fill(&subj.test_all, &maps);
    let sequences = sequence_sweep(&all_test, &threshold, &det.sequence_lengths, det.benign_per_malicious, config.seed)?;
    Ok(DetectorEvaluation { result, sequences, test_scores })
}

struct Context<'a> {
    config: &'a ScenarioConfig,
    runs: &'a PairedRuns,
    split: EvaluationSplit,
}

impl<'a> Context<'a> {
    fn new(config: &'a ScenarioConfig, runs: &'a PairedRuns) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, runs, split: EvaluationSplit::new(config)? })
    }

    fn marrs(&self) -> Result<(MarrsPipeline, DetectorEvaluation)> {
        let det = &self.config.detection;
        let seed = self.config.seed;
        let (mut pipeline, _) = MarrsPipeline::train(&self.runs.benign.store, self.split.train.clone(), det, seed)?;
        let windows = run_windows(&pipeline, self.runs, self.config.iterations)?;
        let subj = subjects(self.runs, &windows, &self.split, det.benign_per_malicious, seed);
        let scores = marrs_scores(&pipeline, &windows)?;
        let all_test = fill(&subj.test_all, &scores.clone().map(|s| score_map(&s)));
        let (result, threshold, test_scores) = evaluate("MARRS", scores, &subj, self.config)?;
        pipeline.threshold = Some(threshold);
        let sequences = sequence_sweep(&all_test, &threshold, &det.sequence_lengths, det.benign_per_malicious, seed)?;
        Ok((pipeline, DetectorEvaluation { result, sequences, test_scores }))
    }
}

/// Benign, single-attacker and multi-attacker runs of `config`, then the
/// detectors trained on the benign run and evaluated on the attack runs.
pub fn run_experiment(config: &ScenarioConfig) -> Result<ExperimentReport> {
    let runs = PairedRuns::run(config)?;
    experiment_on(config, runs)
}

/// [`run_experiment`] on runs that already exist.
pub fn experiment_on(config: &ScenarioConfig, runs: PairedRuns) -> Result<ExperimentReport> {
    let ctx = Context::new(config, &runs)?;
    let sas_gain = runs.sas_gain()?;
    let mas_gain = runs.mas_gain()?;
    let det = &config.detection;
    let split = &ctx.split;
    let n = config.iterations;
    let seed = config.seed;
    let exp = &config.experiment;

    let (pipeline, DetectorEvaluation { result: marrs, sequences, test_scores }) = ctx.marrs()?;
    let windows = run_windows(&pipeline, &runs, n)?;
    let subj = subjects(&runs, &windows, split, det.benign_per_malicious, seed);

    let ae1 = [pipeline.ae1_scores(&windows.benign)?, pipeline.ae1_scores(&windows.sas)?, pipeline.ae1_scores(&windows.mas)?];
    let (ae1_only, _, _) = evaluate("AE1", ae1, &subj, config)?;

    let train_windows = pipeline.extract(&runs.benign.store, split.train.clone())?;
    let (plus, _) = Ae1PlusModel::train(&train_windows, det, seed)?;
    let plus_scores = [plus.scores(&windows.benign)?, plus.scores(&windows.sas)?, plus.scores(&windows.mas)?];
    let (ae1_plus, _, _) = evaluate("AE1+", plus_scores, &subj, config)?;

    let mut benchmarks = Vec::new();
    for kind in BenchmarkKind::ALL {
        let b = BenchmarkDetector::train(kind, &train_windows, det, seed)?;
        let s = [b.scores(&windows.benign), b.scores(&windows.sas), b.scores(&windows.mas)];
        benchmarks.push(evaluate(kind.name(), s, &subj, config)?.0);
    }

    let mut segments = Vec::new();
    let parts = exp.training_segments.max(1) as u64;
    let seg_len = split.train.end / parts;
    for k in 1..=parts {
        let range = 0..if k == parts { split.train.end } else { seg_len * k };
        let result = if k == parts {
            marrs.clone()
        } else {
            let (extractors, train_w) = fit_extractors(&runs.benign.store, range.clone(), det.window_len)?;
            let scalers = extractors.iter().map(|(&c, e)| (c, e.scaler().expect("fitted").clone())).collect();
            let (p, _) = MarrsPipeline::train_on_windows(&train_w, scalers, det, seed)?;
            let w = run_windows(&p, &runs, n)?;
            evaluate(&alloc::format!("MARRS x1..x{k}"), marrs_scores(&p, &w)?, &subj, config)?.0
        };
        segments.push(SegmentResult { segments: k as usize, iterations: range, result });
    }

    Ok(ExperimentReport {
        sas_gain,
        mas_gain,
        marrs,
        ae1_only,
        ae1_plus,
        benchmarks,
        segments,
        sequences,
        test_scores,
        benign_run: runs.benign.metrics,
        sas_run: runs.sas.metrics,
        mas_run: runs.mas.metrics,
    })
}
