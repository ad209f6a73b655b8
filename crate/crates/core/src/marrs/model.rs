use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::{DetectionConfig, FeatureExtractor, FeatureScaler, FeatureWindow, Threshold, FEATURE_DIM};
use crate::netsim::CellId;
use crate::nn::{train, Example, Seq2SeqAutoencoder, Seq2SeqConfig, TrainConfig, TrainReport};
use crate::ric::KpiStore;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Windows of several cells, each list sorted by start.
pub type CellWindows = BTreeMap<CellId, Vec<FeatureWindow>>;

pub fn ae1_config(cfg: &DetectionConfig) -> Seq2SeqConfig {
    Seq2SeqConfig {
        input_dim: FEATURE_DIM,
        input_steps: cfg.window_len,
        output_dim: FEATURE_DIM,
        window_len: cfg.window_len,
        latent_dim: cfg.latent_dim,
        hidden_size: cfg.hidden_size,
    }
}

pub fn ae2_config(cfg: &DetectionConfig) -> Seq2SeqConfig {
    Seq2SeqConfig {
        input_dim: 2 * cfg.latent_dim,
        input_steps: 1,
        output_dim: FEATURE_DIM,
        window_len: cfg.window_len,
        latent_dim: cfg.latent_dim,
        hidden_size: cfg.hidden_size,
    }
}

pub fn ae1_plus_config(cfg: &DetectionConfig) -> Seq2SeqConfig {
    Seq2SeqConfig { input_dim: 2 * FEATURE_DIM, ..ae1_config(cfg) }
}

fn cell_seed(seed: u64, cell: CellId, salt: u64) -> u64 {
    seed ^ (u64::from(cell.0) << 40) ^ (salt << 24)
}

fn fit_model(
    config: Seq2SeqConfig,
    examples: &[Example],
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<(Seq2SeqAutoencoder, TrainReport)> {
    let mut model = Seq2SeqAutoencoder::new(config, &mut rng::substream(seed, Stream::Training, 0xae));
    let report = train(&mut model, examples, &TrainConfig { seed, ..*train_cfg })?;
    Ok((model, report))
}

/// One first-stage autoencoder per cell, each reconstructing its own windows.
pub fn train_ae1(windows: &CellWindows, cfg: &DetectionConfig, seed: u64) -> Result<BTreeMap<CellId, (Seq2SeqAutoencoder, TrainReport)>> {
    windows
        .iter()
        .map(|(&cell, ws)| {
            if ws.is_empty() {
                return Err(Error::Unmodeled(cell));
            }
            let examples: Vec<Example> = ws.iter().map(|w| Example::autoencode(w.data.clone())).collect();
            Ok((cell, fit_model(ae1_config(cfg), &examples, &cfg.ae1_train, cell_seed(seed, cell, 1))?))
        })
        .collect()
}

/// Window starts shared by every cell, or an error if the cells disagree.
pub fn aligned_starts(windows: &CellWindows) -> Result<Vec<u64>> {
    let mut it = windows.values();
    let first: Vec<u64> = it.next().map(|ws| ws.iter().map(|w| w.start).collect()).unwrap_or_default();
    for ws in it {
        if ws.len() != first.len() || ws.iter().zip(&first).any(|(w, &s)| w.start != s) {
            return Err(Error::Shape("cells cover different windows".into()));
        }
    }
    Ok(first)
}

/// Latent code of every window, per cell.
pub fn embed(ae1: &BTreeMap<CellId, Seq2SeqAutoencoder>, windows: &CellWindows) -> Result<BTreeMap<CellId, Vec<Vec<f64>>>> {
    windows
        .iter()
        .map(|(&cell, ws)| {
            let m = ae1.get(&cell).ok_or(Error::Unmodeled(cell))?;
            Ok((cell, ws.iter().map(|w| m.encode(&w.data)).collect::<Result<Vec<_>>>()?))
        })
        .collect()
}

/// Enriched input of every cell for one window: its own embedding followed by
/// the mean of all other cells' embeddings.
pub fn build_x2(cells: &[CellId], embeddings: &BTreeMap<CellId, Vec<f64>>) -> Result<BTreeMap<CellId, Vec<f64>>> {
    if cells.len() < 2 {
        return Err(Error::Config("network context needs at least two cells".into()));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for c in cells {
        rows.push(embeddings.get(c).ok_or_else(|| Error::Shape(format!("no embedding for {c}")))?);
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::LengthMismatch { expected: dim, got: bad.len() });
    }
    let mut total = vec![0.0; dim];
    for r in &rows {
        for (t, v) in total.iter_mut().zip(r.iter()) {
            *t += v;
        }
    }
    let others = (cells.len() - 1) as f64;
    Ok(cells
        .iter()
        .zip(&rows)
        .map(|(&c, own)| {
            let mut x = Vec::with_capacity(2 * dim);
            x.extend_from_slice(own);
            x.extend(total.iter().zip(own.iter()).map(|(t, o)| (t - o) / others));
            (c, x)
        })
        .collect())
}

/// [`build_x2`] for every aligned window; returns per-cell X² lists.
pub fn build_x2_series(embeddings: &BTreeMap<CellId, Vec<Vec<f64>>>) -> Result<BTreeMap<CellId, Vec<Vec<f64>>>> {
    let cells: Vec<CellId> = embeddings.keys().copied().collect();
    let n = embeddings.values().next().map_or(0, Vec::len);
    if let Some(bad) = embeddings.values().find(|e| e.len() != n) {
        return Err(Error::LengthMismatch { expected: n, got: bad.len() });
    }
    let mut out: BTreeMap<CellId, Vec<Vec<f64>>> = cells.iter().map(|&c| (c, Vec::with_capacity(n))).collect();
    for i in 0..n {
        let at: BTreeMap<CellId, Vec<f64>> = embeddings.iter().map(|(&c, e)| (c, e[i].clone())).collect();
        for (c, x) in build_x2(&cells, &at)? {
            out.get_mut(&c).expect("same cells").push(x);
        }
    }
    Ok(out)
}

/// Second-stage autoencoders: enriched embedding in, the cell's own X¹ window out.
pub fn train_ae2(
    x2: &BTreeMap<CellId, Vec<Vec<f64>>>,
    x1: &CellWindows,
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<BTreeMap<CellId, (Seq2SeqAutoencoder, TrainReport)>> {
    if x2.len() != x1.len() || x2.keys().zip(x1.keys()).any(|(a, b)| a != b) {
        return Err(Error::Shape("X2 and X1 cover different cells".into()));
    }
    x2.iter()
        .map(|(&cell, inputs)| {
            let targets = &x1[&cell];
            if inputs.len() != targets.len() {
                return Err(Error::LengthMismatch { expected: targets.len(), got: inputs.len() });
            }
            if inputs.is_empty() {
                return Err(Error::Unmodeled(cell));
            }
            let examples: Vec<Example> =
                inputs.iter().zip(targets).map(|(x, w)| Example::new(x.clone(), w.data.clone())).collect();
            Ok((cell, fit_model(ae2_config(cfg), &examples, &cfg.ae2_train, cell_seed(seed, cell, 2))?))
        })
        .collect()
}

/// Per-row concatenation of a window with the mean of the other cells' rows.
pub fn ae1_plus_input(own: &FeatureWindow, others: &[&FeatureWindow]) -> Result<Vec<f64>> {
    if others.is_empty() {
        return Err(Error::Config("network context needs at least two cells".into()));
    }
    if let Some(o) = others.iter().find(|o| o.start != own.start || o.data.len() != own.data.len()) {
        return Err(Error::Shape(format!("{} window at {} does not align with {}", o.cell_id, o.start, own.start)));
    }
    let k = others.len() as f64;
    let mut out = Vec::with_capacity(2 * own.data.len());
    for (r, row) in own.rows().enumerate() {
        out.extend_from_slice(row);
        for j in 0..FEATURE_DIM {
            out.push(others.iter().map(|o| o.data[r * FEATURE_DIM + j]).sum::<f64>() / k);
        }
    }
    Ok(out)
}

fn ae1_plus_inputs(windows: &CellWindows) -> Result<BTreeMap<CellId, Vec<Vec<f64>>>> {
    let starts = aligned_starts(windows)?;
    windows
        .iter()
        .map(|(&cell, ws)| {
            let inputs = (0..starts.len())
                .map(|i| {
                    let others: Vec<&FeatureWindow> =
                        windows.iter().filter(|(&c, _)| c != cell).map(|(_, o)| &o[i]).collect();
                    ae1_plus_input(&ws[i], &others)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((cell, inputs))
        })
        .collect()
}

/// A score for one cell's window. `loss` is `None` for a cell the models do not cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    pub cell: CellId,
    pub start: u64,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Trusted,
    Untrusted,
    /// No trained model for the cell; never reported as trusted.
    Unmodeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub cell: CellId,
    pub start: u64,
    pub loss: Option<f64>,
    pub label: VerdictLabel,
}

impl Verdict {
    pub fn from_score(score: WindowScore, threshold: &Threshold) -> Self {
        let label = match score.loss {
            None => VerdictLabel::Unmodeled,
            Some(l) if threshold.classify(l) => VerdictLabel::Untrusted,
            Some(_) => VerdictLabel::Trusted,
        };
        Self { cell: score.cell, start: score.start, loss: score.loss, label }
    }

    /// Unmodeled counts as untrusted.
    pub fn untrusted(&self) -> bool {
        self.label != VerdictLabel::Trusted
    }
}

/// Losses from training, for learnability checks and diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSummary {
    pub ae1: BTreeMap<CellId, TrainReport>,
    pub ae2: BTreeMap<CellId, TrainReport>,
}

/// The full two-stage detector for a fixed set of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MarrsPipeline {
    pub config: DetectionConfig,
    pub scalers: BTreeMap<CellId, FeatureScaler>,
    pub ae1: BTreeMap<CellId, Seq2SeqAutoencoder>,
    pub ae2: BTreeMap<CellId, Seq2SeqAutoencoder>,
    pub threshold: Option<Threshold>,
}

fn split_trained(
    m: BTreeMap<CellId, (Seq2SeqAutoencoder, TrainReport)>,
) -> (BTreeMap<CellId, Seq2SeqAutoencoder>, BTreeMap<CellId, TrainReport>) {
    let mut models = BTreeMap::new();
    let mut reports = BTreeMap::new();
    for (c, (model, report)) in m {
        models.insert(c, model);
        reports.insert(c, report);
    }
    (models, reports)
}

/// Fits per-cell statistics on `range` of `store` and returns the extractors
/// with their training windows.
pub fn fit_extractors(
    store: &KpiStore,
    range: Range<u64>,
    window_len: usize,
) -> Result<(BTreeMap<CellId, FeatureExtractor>, CellWindows)> {
    let mut extractors = BTreeMap::new();
    let mut windows = BTreeMap::new();
    for cell in store.cell_ids() {
        let mut ex = FeatureExtractor::new(cell, window_len);
        let ws = ex.fit(store, range.clone())?;
        if ws.is_empty() {
            return Err(Error::Unmodeled(cell));
        }
        windows.insert(cell, ws);
        extractors.insert(cell, ex);
    }
    Ok((extractors, windows))
}

impl MarrsPipeline {
    /// Trains on benign iterations `range` of `store`.
    pub fn train(store: &KpiStore, range: Range<u64>, cfg: &DetectionConfig, seed: u64) -> Result<(Self, TrainingSummary)> {
        cfg.validate()?;
        let (extractors, windows) = fit_extractors(store, range, cfg.window_len)?;
        let scalers = extractors.iter().map(|(&c, e)| (c, e.scaler().expect("fitted").clone())).collect();
        Self::train_on_windows(&windows, scalers, cfg, seed)
    }

    /// Trains both stages on already standardized, aligned windows.
    pub fn train_on_windows(
        windows: &CellWindows,
        scalers: BTreeMap<CellId, FeatureScaler>,
        cfg: &DetectionConfig,
        seed: u64,
    ) -> Result<(Self, TrainingSummary)> {
        aligned_starts(windows)?;
        let (ae1, ae1_reports) = split_trained(train_ae1(windows, cfg, seed)?);
        let x2 = build_x2_series(&embed(&ae1, windows)?)?;
        let (ae2, ae2_reports) = split_trained(train_ae2(&x2, windows, cfg, seed)?);
        let pipeline = Self { config: cfg.clone(), scalers, ae1, ae2, threshold: None };
        Ok((pipeline, TrainingSummary { ae1: ae1_reports, ae2: ae2_reports }))
    }

    pub fn cells(&self) -> Vec<CellId> {
        self.ae1.keys().copied().collect()
    }

    /// Windows of every modeled cell over `range`, standardized with the
    /// training statistics. Cells without a model keep unscaled windows and
    /// score as unmodeled.
    pub fn extract(&self, store: &KpiStore, range: Range<u64>) -> Result<CellWindows> {
        let mut out = BTreeMap::new();
        for cell in store.cell_ids() {
            let ws = match self.scalers.get(&cell) {
                Some(s) => super::extract_features(store, cell, range.clone(), s, self.config.window_len)?,
                None => {
                    let identity = FeatureScaler { mean: [0.0; FEATURE_DIM], std: [1.0; FEATURE_DIM] };
                    super::extract_features(store, cell, range.clone(), &identity, self.config.window_len)?
                }
            };
            out.insert(cell, ws);
        }
        Ok(out)
    }

    fn modeled(&self, windows: &CellWindows) -> Result<CellWindows> {
        let mut m = CellWindows::new();
        for &c in self.ae1.keys() {
            m.insert(c, windows.get(&c).ok_or(Error::Unmodeled(c))?.clone());
        }
        Ok(m)
    }

    fn unmodeled_scores(&self, windows: &CellWindows) -> Vec<WindowScore> {
        windows
            .iter()
            .filter(|(c, _)| !self.ae1.contains_key(c))
            .flat_map(|(&cell, ws)| ws.iter().map(move |w| WindowScore { cell, start: w.start, loss: None }))
            .collect()
    }

    /// Second-stage reconstruction loss of every window. Every modeled cell
    /// must be present with aligned windows.
    pub fn scores(&self, windows: &CellWindows) -> Result<Vec<WindowScore>> {
        let modeled = self.modeled(windows)?;
        let starts = aligned_starts(&modeled)?;
        let x2 = build_x2_series(&embed(&self.ae1, &modeled)?)?;
        let mut out = Vec::with_capacity(starts.len() * modeled.len());
        for (cell, inputs) in &x2 {
            let m = &self.ae2[cell];
            for (x, w) in inputs.iter().zip(&modeled[cell]) {
                out.push(WindowScore { cell: *cell, start: w.start, loss: Some(m.reconstruction_loss(x, &w.data)?) });
            }
        }
        out.extend(self.unmodeled_scores(windows));
        Ok(out)
    }

    /// First-stage-only ablation: each cell's own reconstruction loss.
    pub fn ae1_scores(&self, windows: &CellWindows) -> Result<Vec<WindowScore>> {
        let mut out = Vec::new();
        for (cell, ws) in self.modeled(windows)? {
            let m = &self.ae1[&cell];
            for w in &ws {
                out.push(WindowScore { cell, start: w.start, loss: Some(m.reconstruction_loss(&w.data, &w.data)?) });
            }
        }
        out.extend(self.unmodeled_scores(windows));
        Ok(out)
    }

    pub fn verdicts(&self, scores: &[WindowScore]) -> Result<Vec<Verdict>> {
        let t = self.threshold.ok_or_else(|| Error::Config("threshold not calibrated".into()))?;
        Ok(scores.iter().map(|&s| Verdict::from_score(s, &t)).collect())
    }
}

/// Ablation: first-stage autoencoders fed their own window next to the
/// network-mean raw features (twice the columns), reconstructing their own window.
#[derive(Debug, Clone, PartialEq)]
pub struct Ae1PlusModel {
    pub models: BTreeMap<CellId, Seq2SeqAutoencoder>,
}

impl Ae1PlusModel {
    pub fn train(windows: &CellWindows, cfg: &DetectionConfig, seed: u64) -> Result<(Self, BTreeMap<CellId, TrainReport>)> {
        let inputs = ae1_plus_inputs(windows)?;
        let trained = inputs
            .iter()
            .map(|(&cell, xs)| {
                let examples: Vec<Example> =
                    xs.iter().zip(&windows[&cell]).map(|(x, w)| Example::new(x.clone(), w.data.clone())).collect();
                Ok((cell, fit_model(ae1_plus_config(cfg), &examples, &cfg.ae1_train, cell_seed(seed, cell, 3))?))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let (models, reports) = split_trained(trained);
        Ok((Self { models }, reports))
    }

    pub fn scores(&self, windows: &CellWindows) -> Result<Vec<WindowScore>> {
        let mut modeled = CellWindows::new();
        for &c in self.models.keys() {
            modeled.insert(c, windows.get(&c).ok_or(Error::Unmodeled(c))?.clone());
        }
        let inputs = ae1_plus_inputs(&modeled)?;
        let mut out = Vec::new();
        for (cell, xs) in inputs {
            let m = &self.models[&cell];
            for (x, w) in xs.iter().zip(&modeled[&cell]) {
                out.push(WindowScore { cell, start: w.start, loss: Some(m.reconstruction_loss(x, &w.data)?) });
            }
        }
        Ok(out)
    }
}
