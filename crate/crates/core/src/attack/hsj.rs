use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use serde::{Deserialize, Serialize};

use super::substitute::{cell_features, with_features, SubstituteModel, ATTACK_DIM, COUNT_FEATURES};
use super::QoeCategory;
use crate::math;
use crate::netsim::CellKpiReport;
use crate::rng::{self, SimRng, Stream};
use crate::{Error, Result};

/// Hard-label access to a classifier over a continuous input space.
pub trait HardLabelOracle {
    fn dim(&self) -> usize;

    fn category(&self, x: &[f64]) -> QoeCategory;

    /// Maps a raw point onto the feasible set the oracle actually labels.
    fn project(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsjConfig {
    pub iterations: usize,
    pub directions: usize,
    pub binary_search_tolerance: f64,
    pub max_step_halvings: usize,
}

impl Default for HsjConfig {
    fn default() -> Self {
        Self { iterations: 20, directions: 100, binary_search_tolerance: 1e-3, max_step_halvings: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackBudget {
    /// Largest admissible perturbation norm, standardized units.
    pub max_l2: f64,
    pub query_budget: usize,
    /// Per-feature physical bounds `(lo, hi)` in attack feature order.
    pub clamp_box: Vec<(f64, f64)>,
}

impl AttackBudget {
    /// Default budget for a network of `ue_count` UEs and a per-UE throughput cap.
    pub fn for_network(ue_count: usize, max_ue_thp: f64, max_meas_prb: f64) -> Self {
        let n = ue_count as f64;
        Self {
            max_l2: 3.0,
            query_budget: 25_000,
            clamp_box: vec![(0.0, max_ue_thp * n), (0.0, max_meas_prb), (0.0, n), (0.0, n), (0.0, n)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_l2 > 0.0) || self.query_budget < 2 {
            return Err(Error::Config("attack budget needs max_l2 > 0 and a query budget".into()));
        }
        if self.clamp_box.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(Error::Config("clamp box bounds must satisfy lo <= hi".into()));
        }
        Ok(())
    }
}

/// Outcome of a boundary attack in the oracle's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HsjOutcome {
    pub point: Vec<f64>,
    pub distance: f64,
    pub category: QoeCategory,
    pub queries: usize,
    /// Best-so-far distance after initialisation and after each iteration.
    pub distance_history: Vec<f64>,
    pub success: bool,
}

struct Counted<'a, O: ?Sized> {
    oracle: &'a O,
    target: QoeCategory,
    budget: usize,
    used: Cell<usize>,
}

impl<O: HardLabelOracle + ?Sized> Counted<'_, O> {
    /// `None` once the budget is exhausted.
    fn adversarial(&self, x: &[f64]) -> Option<bool> {
        if self.used.get() >= self.budget {
            return None;
        }
        self.used.set(self.used.get() + 1);
        Some(self.oracle.category(&self.oracle.project(x)) >= self.target)
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Shrinks `[x0, adv]` until the adversarial end is within `tol` of the boundary.
fn binary_search<O: HardLabelOracle + ?Sized>(q: &Counted<O>, x0: &[f64], adv: &[f64], tol: f64) -> Vec<f64> {
    let span = math::l2_distance(x0, adv);
    let (mut lo, mut hi) = (0.0, 1.0);
    while (hi - lo) * span > tol {
        let mid = 0.5 * (lo + hi);
        match q.adversarial(&lerp(x0, adv, mid)) {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => break,
        }
    }
    lerp(x0, adv, hi)
}

fn unit_direction(rng: &mut SimRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng::normal(rng, 1.0)).collect();
        let n = math::l2_norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Decision-based boundary attack: start from the nearest target-category
/// sample in `init_pool`, then alternate Monte Carlo gradient-direction
/// estimates, geometric step search and boundary binary search, keeping the
/// closest adversarial point found.
pub fn hop_skip_jump<O: HardLabelOracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    target: QoeCategory,
    init_pool: &[Vec<f64>],
    config: &HsjConfig,
    budget: &AttackBudget,
    seed: u64,
) -> Result<HsjOutcome> {
    let d = oracle.dim();
    if x0.len() != d {
        return Err(Error::LengthMismatch { expected: d, got: x0.len() });
    }
    // One query is held back for the final check of the returned point.
    let q = Counted { oracle, target, budget: budget.query_budget.saturating_sub(1), used: Cell::new(1) };
    let start = oracle.project(x0);
    let original = oracle.category(&start);
    if original >= target {
        return Ok(HsjOutcome {
            point: x0.to_vec(),
            distance: 0.0,
            category: original,
            queries: 1,
            distance_history: vec![0.0],
            success: true,
        });
    }

    let mut pool: Vec<&Vec<f64>> = init_pool.iter().filter(|p| p.len() == d).collect();
    pool.sort_by(|a, b| math::l2_distance(a, x0).total_cmp(&math::l2_distance(b, x0)));
    let mut init = None;
    for p in pool {
        match q.adversarial(p) {
            Some(true) => {
                init = Some(p.clone());
                break;
            }
            Some(false) => {}
            None => break,
        }
    }
    let Some(init) = init else {
        return Err(Error::NoInitSample);
    };

    let tol = config.binary_search_tolerance;
    let mut best = binary_search(&q, x0, &init, tol);
    let mut best_dist = math::l2_distance(&oracle.project(&best), &start);
    let mut history = vec![best_dist];
    let mut boundary = best.clone();
    let mut rng = rng::substream(seed, Stream::Attack, 0x45a);

    for t in 0..config.iterations {
        let dist = math::l2_distance(&boundary, x0);
        if dist <= tol || q.used.get() >= q.budget {
            history.push(best_dist);
            continue;
        }
        let delta = (dist / d as f64).max(tol);
        let mut dirs = Vec::with_capacity(config.directions);
        let mut signs = Vec::with_capacity(config.directions);
        for _ in 0..config.directions {
            let u = unit_direction(&mut rng, d);
            let probe: Vec<f64> = boundary.iter().zip(&u).map(|(b, ui)| b + delta * ui).collect();
            let Some(adv) = q.adversarial(&probe) else { break };
            signs.push(if adv { 1.0 } else { -1.0 });
            dirs.push(u);
        }
        if dirs.is_empty() {
            history.push(best_dist);
            continue;
        }
        let mean_sign = math::mean(&signs);
        let baseline = if mean_sign.abs() < 1.0 { mean_sign } else { 0.0 };
        let mut grad = vec![0.0; d];
        for (u, s) in dirs.iter().zip(&signs) {
            for (g, ui) in grad.iter_mut().zip(u) {
                *g += (s - baseline) * ui;
            }
        }
        let norm = math::l2_norm(&grad);
        if norm > 0.0 {
            grad.iter_mut().for_each(|g| *g /= norm);
            let mut step = dist / math::sqrt((t + 1) as f64);
            let mut moved = None;
            for _ in 0..=config.max_step_halvings {
                let cand: Vec<f64> = boundary.iter().zip(&grad).map(|(b, g)| b + step * g).collect();
                match q.adversarial(&cand) {
                    Some(true) => {
                        moved = Some(cand);
                        break;
                    }
                    Some(false) => step *= 0.5,
                    None => break,
                }
            }
            if let Some(cand) = moved {
                boundary = binary_search(&q, x0, &cand, tol);
                let dist_new = math::l2_distance(&oracle.project(&boundary), &start);
                if dist_new < best_dist {
                    best = boundary.clone();
                    best_dist = dist_new;
                }
            }
        }
        history.push(best_dist);
    }

    let point = oracle.project(&best);
    let category = oracle.category(&point);
    Ok(HsjOutcome {
        success: category >= target && best_dist <= budget.max_l2,
        distance: best_dist,
        point,
        category,
        queries: q.used.get() + 1,
        distance_history: history,
    })
}

/// The substitute as a hard-label oracle over standardized attack features;
/// projection clamps to the physical box and rounds the count fields.
pub struct SubstituteOracle<'a> {
    pub model: &'a SubstituteModel,
    pub clamp_box: &'a [(f64, f64)],
}

impl HardLabelOracle for SubstituteOracle<'_> {
    fn dim(&self) -> usize {
        ATTACK_DIM
    }

    fn category(&self, z: &[f64]) -> QoeCategory {
        self.model.boundaries.categorize(self.model.predict_standardized(z))
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.model.destandardize(z);
        for (j, v) in x.iter_mut().enumerate() {
            if let Some(&(lo, hi)) = self.clamp_box.get(j) {
                *v = v.clamp(lo, hi);
            }
        }
        for j in COUNT_FEATURES {
            x[j] = math::round(x[j]);
        }
        self.model.standardize(&x).to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialReport {
    pub original: CellKpiReport,
    pub perturbed: CellKpiReport,
    /// `R_adv - R` in standardized attack-feature units.
    pub delta: Vec<f64>,
    pub delta_l2: f64,
    pub original_category: QoeCategory,
    pub target: QoeCategory,
    pub achieved_category: QoeCategory,
    pub query_count: usize,
    pub distance_history: Vec<f64>,
    pub success: bool,
}

/// Crafts `R_adv` against the substitute. `init_pool` holds physical feature
/// vectors the attacker has observed; the nearest one the substitute places in
/// the target category seeds the search.
pub fn craft_adversarial(
    model: &SubstituteModel,
    report: &CellKpiReport,
    target: QoeCategory,
    budget: &AttackBudget,
    config: &HsjConfig,
    init_pool: &[[f64; ATTACK_DIM]],
    seed: u64,
) -> Result<AdversarialReport> {
    budget.validate()?;
    let oracle = SubstituteOracle { model, clamp_box: &budget.clamp_box };
    let x = cell_features(report);
    let z0 = model.standardize(&x);
    let original_category = oracle.category(&oracle.project(&z0));
    let pool: Vec<Vec<f64>> = init_pool.iter().map(|p| oracle.project(&model.standardize(p))).collect();
    let out = hop_skip_jump(&oracle, &z0, target, &pool, config, budget, seed)?;
    let delta: Vec<f64> = out.point.iter().zip(&z0).map(|(a, b)| a - b).collect();
    let delta_l2 = math::l2_norm(&delta);
    let success = out.success && delta_l2 <= budget.max_l2;
    Ok(if success && delta_l2 > 0.0 {
        AdversarialReport {
            original: report.clone(),
            perturbed: with_features(report, &model.destandardize(&out.point)),
            delta,
            delta_l2,
            original_category,
            target,
            achieved_category: out.category,
            query_count: out.queries,
            distance_history: out.distance_history,
            success,
        }
    } else {
        AdversarialReport {
            original: report.clone(),
            perturbed: report.clone(),
            delta: vec![0.0; ATTACK_DIM],
            delta_l2: 0.0,
            original_category,
            target,
            achieved_category: if success { out.category } else { original_category },
            query_count: out.queries,
            distance_history: out.distance_history,
            success,
        }
    })
}
