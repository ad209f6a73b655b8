//! Cell/UE topology, mobility, radio KPIs and handover application.

mod radio;
mod types;

pub use radio::{compute_radio, path_loss_db, RadioConfig, RadioMeasurement};
pub use types::*;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::rng::{self, SimRng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    /// Upper bound of the initial per-UE speed, meters/iteration.
    pub max_speed: f64,
    /// Standard deviation of the random-walk term, meters/iteration per axis.
    pub sigma_move: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self { max_speed: 3.0, sigma_move: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub id: CellId,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub malicious: bool,
}

fn default_tx_power() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub width: f64,
    pub height: f64,
    pub cells: Vec<CellSpec>,
    pub ue_count: usize,
    pub radio: RadioConfig,
    pub mobility: MobilityConfig,
}

impl Default for TopologyConfig {
    /// Six cells on a 3x2 grid (BS1..BS3 bottom row, BS4..BS6 top row) and 50 UEs.
    fn default() -> Self {
        let grid = [
            (200.0, 150.0),
            (500.0, 150.0),
            (800.0, 150.0),
            (200.0, 450.0),
            (500.0, 450.0),
            (800.0, 450.0),
        ];
        let cells = grid
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| CellSpec {
                id: CellId(i as u32 + 1),
                x,
                y,
                tx_power_dbm: default_tx_power(),
                malicious: false,
            })
            .collect();
        Self {
            width: 1000.0,
            height: 600.0,
            cells,
            ue_count: 50,
            radio: RadioConfig::default(),
            mobility: MobilityConfig::default(),
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Config("topology needs at least one cell".into()));
        }
        if self.ue_count == 0 {
            return Err(Error::Config("topology needs at least one UE".into()));
        }
        if !(self.width > 0.0 && self.height > 0.0) || !self.width.is_finite() || !self.height.is_finite() {
            return Err(Error::Config("topology bounds must be positive and finite".into()));
        }
        let mut ids: Vec<CellId> = self.cells.iter().map(|c| c.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate cell id".into()));
        }
        for c in &self.cells {
            if !c.tx_power_dbm.is_finite() {
                return Err(Error::Config(format!("cell {} has non-finite tx power", c.id)));
            }
            if !(0.0..=self.width).contains(&c.x) || !(0.0..=self.height).contains(&c.y) {
                return Err(Error::Config(format!("cell {} lies outside the topology bounds", c.id)));
            }
        }
        self.radio.validate()?;
        if self.mobility.max_speed < 0.0 || self.mobility.sigma_move < 0.0 {
            return Err(Error::Config("mobility constants must be non-negative".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds { width: self.width, height: self.height }
    }
}

/// Builds the initial network: UEs uniformly placed with random headings,
/// each attached to its strongest cell (deterministic path loss, no shadowing).
pub fn init_topology(config: &TopologyConfig, seed: u64) -> Result<NetworkState> {
    config.validate()?;
    let mut rng = rng::stream(seed, Stream::Topology);
    let mut cells: Vec<CellNode> = config
        .cells
        .iter()
        .map(|c| CellNode {
            cell_id: c.id,
            position: Point::new(c.x, c.y),
            tx_power: c.tx_power_dbm,
            malicious: c.malicious,
        })
        .collect();
    cells.sort_by_key(|c| c.cell_id);

    let ues = (0..config.ue_count)
        .map(|i| {
            let position = Point::new(rng.random_range(0.0..config.width), rng.random_range(0.0..config.height));
            let heading = rng.random_range(0.0..core::f64::consts::TAU);
            let speed = if config.mobility.max_speed > 0.0 {
                rng.random_range(0.0..config.mobility.max_speed)
            } else {
                0.0
            };
            let velocity = Point::new(speed * libm::cos(heading), speed * libm::sin(heading));
            let serving_cell = strongest_cell(&cells, position, &config.radio);
            UeNode { ue_id: UeId(i as u32 + 1), position, velocity, serving_cell }
        })
        .collect();

    Ok(NetworkState { cells, ues, iteration: 0, rng_seed: seed, bounds: config.bounds() })
}

fn strongest_cell(cells: &[CellNode], at: Point, radio: &RadioConfig) -> CellId {
    let mut best = cells[0].cell_id;
    let mut best_rsrp = f64::NEG_INFINITY;
    for c in cells {
        let rsrp = c.tx_power - path_loss_db(radio, c.position.distance(at));
        // cells are sorted, so strict > keeps the lowest id on ties
        if rsrp > best_rsrp {
            best_rsrp = rsrp;
            best = c.cell_id;
        }
    }
    best
}

/// Moves every UE by its velocity plus a Gaussian random-walk term,
/// reflecting off the topology bounds. Serving edges are untouched.
pub fn step_mobility(state: &mut NetworkState, mobility: &MobilityConfig, rng: &mut SimRng) {
    let bounds = state.bounds;
    for ue in &mut state.ues {
        let (dx, dy) = if mobility.sigma_move > 0.0 {
            (rng::normal(rng, mobility.sigma_move), rng::normal(rng, mobility.sigma_move))
        } else {
            (0.0, 0.0)
        };
        let (x, vx) = reflect(ue.position.x + ue.velocity.x + dx, ue.velocity.x, bounds.width);
        let (y, vy) = reflect(ue.position.y + ue.velocity.y + dy, ue.velocity.y, bounds.height);
        ue.position = Point::new(x, y);
        ue.velocity = Point::new(vx, vy);
    }
}

fn reflect(mut pos: f64, mut vel: f64, upper: f64) -> (f64, f64) {
    if pos < 0.0 {
        pos = -pos;
        vel = -vel;
    } else if pos > upper {
        pos = 2.0 * upper - pos;
        vel = -vel;
    }
    (pos.clamp(0.0, upper), vel)
}

/// Re-attaches a UE. A request for the current serving cell is a no-op.
pub fn apply_handover(state: &mut NetworkState, req: &HandoverRequest) -> Result<()> {
    if state.cell_index(req.target_cell).is_none() {
        return Err(Error::UnknownCell(req.target_cell));
    }
    let ue = state
        .ues
        .iter_mut()
        .find(|u| u.ue_id == req.ue_id)
        .ok_or(Error::UnknownUe(req.ue_id))?;
    ue.serving_cell = req.target_cell;
    Ok(())
}

/// The simulated RAN: network state plus the seeded streams that drive it.
#[derive(Debug, Clone)]
pub struct Simulator {
    state: NetworkState,
    radio: RadioConfig,
    mobility: MobilityConfig,
    mobility_rng: SimRng,
    radio_rng: SimRng,
    /// Shadowing in dB, indexed `[ue][cell]`.
    shadowing: Vec<Vec<f64>>,
    prev_serving: Option<Vec<CellId>>,
}

impl Simulator {
    pub fn new(config: &TopologyConfig, seed: u64) -> Result<Self> {
        let state = init_topology(config, seed)?;
        let mut radio_rng = rng::stream(seed, Stream::Radio);
        let shadowing = if config.radio.shadowing {
            (0..state.ues.len())
                .map(|_| {
                    (0..state.cells.len())
                        .map(|_| rng::normal(&mut radio_rng, config.radio.shadowing_sigma_db))
                        .collect()
                })
                .collect()
        } else {
            vec![vec![0.0; state.cells.len()]; state.ues.len()]
        };
        Ok(Self {
            state,
            radio: config.radio.clone(),
            mobility: config.mobility.clone(),
            mobility_rng: rng::stream(seed, Stream::Mobility),
            radio_rng,
            shadowing,
            prev_serving: None,
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn radio(&self) -> &RadioConfig {
        &self.radio
    }

    pub fn set_malicious(&mut self, cell: CellId, malicious: bool) -> Result<()> {
        let idx = self.state.cell_index(cell).ok_or(Error::UnknownCell(cell))?;
        self.state.cells[idx].malicious = malicious;
        Ok(())
    }

    pub fn step_mobility(&mut self) {
        step_mobility(&mut self.state, &self.mobility, &mut self.mobility_rng);
    }

    pub fn apply_handover(&mut self, req: &HandoverRequest) -> Result<()> {
        apply_handover(&mut self.state, req)
    }

    /// Evolves shadowing by one step, then measures every UE and aggregates
    /// the cell reports. Advances the iteration counter.
    pub fn emit_reports(&mut self) -> KpiReportBatch {
        let t = self.state.iteration;
        if self.radio.shadowing && t > 0 {
            let rho = self.radio.shadowing_correlation;
            let innov = math::sqrt(1.0 - rho * rho) * self.radio.shadowing_sigma_db;
            for row in &mut self.shadowing {
                for s in row.iter_mut() {
                    *s = rho * *s + rng::normal(&mut self.radio_rng, innov);
                }
            }
        }

        let n_cells = self.state.cells.len();
        let mut load = vec![0u32; n_cells];
        for ue in &self.state.ues {
            load[self.state.cell_index(ue.serving_cell).expect("serving cell exists")] += 1;
        }

        let mut ue_reports = Vec::with_capacity(self.state.ues.len());
        let mut cell_thp = vec![0.0; n_cells];
        for (ui, ue) in self.state.ues.iter().enumerate() {
            let serving = self.state.cell_index(ue.serving_cell).expect("serving cell exists");
            let m = compute_radio(&self.state, ui, serving, &self.radio, &self.shadowing[ui]);
            let thp_dl = self.radio.throughput(m.snir);
            let prb_dl = 1.0 / f64::from(load[serving].max(1));
            cell_thp[serving] += thp_dl;
            let neighbors = m
                .rsrp_all
                .iter()
                .enumerate()
                .filter(|&(ci, _)| ci != serving)
                .map(|(ci, &rsrp)| NeighborRsrp { cell: self.state.cells[ci].cell_id, rsrp })
                .collect();
            ue_reports.push(UeKpiReport {
                ue_id: ue.ue_id,
                serving_cell: ue.serving_cell,
                timestamp: t,
                pdcp_thp_dl: thp_dl,
                pdcp_thp_ul: thp_dl * self.radio.uplink_ratio,
                prb_ratio_dl: prb_dl,
                prb_ratio_ul: prb_dl,
                rsrp: m.rsrp,
                rsrq: m.rsrq,
                snir: m.snir,
                position: ue.position,
                neighbors,
            });
        }

        let serving_now: Vec<CellId> = self.state.ues.iter().map(|u| u.serving_cell).collect();
        let cells = self
            .state
            .cells
            .iter()
            .enumerate()
            .map(|(ci, cell)| {
                let (new_ues, left_ues) = match &self.prev_serving {
                    None => (0, 0),
                    Some(prev) => {
                        let mut new = 0;
                        let mut left = 0;
                        for (p, n) in prev.iter().zip(&serving_now) {
                            if *n == cell.cell_id && *p != cell.cell_id {
                                new += 1;
                            }
                            if *p == cell.cell_id && *n != cell.cell_id {
                                left += 1;
                            }
                        }
                        (new, left)
                    }
                };
                let jitter = rng::normal(&mut self.radio_rng, self.radio.meas_period_jitter_khz);
                CellKpiReport {
                    cell_id: cell.cell_id,
                    timestamp: t,
                    throughput: cell_thp[ci],
                    meas_period_prb: (self.radio.meas_period_prb_khz + jitter).max(0.0),
                    num_ues: load[ci],
                    new_ues,
                    left_ues,
                }
            })
            .collect();

        self.prev_serving = Some(serving_now);
        self.state.iteration += 1;
        KpiReportBatch { iteration: t, ues: ue_reports, cells }
    }
}
