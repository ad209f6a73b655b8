use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BS{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UeId(pub u32);

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UE{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellNode {
    pub cell_id: CellId,
    pub position: Point,
    /// dBm
    pub tx_power: f64,
    pub malicious: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeNode {
    pub ue_id: UeId,
    pub position: Point,
    /// meters per iteration
    pub velocity: Point,
    pub serving_cell: CellId,
}

/// The bipartite cell/UE graph. The serving edges are implicit: every UE
/// carries exactly one `serving_cell`, so the edge set is a function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Sorted by id.
    pub cells: Vec<CellNode>,
    /// Sorted by id.
    pub ues: Vec<UeNode>,
    pub iteration: u64,
    pub rng_seed: u64,
    pub bounds: Bounds,
}

impl NetworkState {
    pub fn cell_index(&self, id: CellId) -> Option<usize> {
        self.cells.binary_search_by_key(&id, |c| c.cell_id).ok()
    }

    pub fn ue_index(&self, id: UeId) -> Option<usize> {
        self.ues.binary_search_by_key(&id, |u| u.ue_id).ok()
    }

    pub fn cell_ids(&self) -> Vec<CellId> {
        self.cells.iter().map(|c| c.cell_id).collect()
    }

    /// Serving edges `(cell, ue)`.
    pub fn edges(&self) -> Vec<(CellId, UeId)> {
        self.ues.iter().map(|u| (u.serving_cell, u.ue_id)).collect()
    }

    /// UEs currently attached to each cell, in cell order.
    pub fn load(&self) -> Vec<u32> {
        let mut load = alloc::vec![0u32; self.cells.len()];
        for ue in &self.ues {
            if let Some(i) = self.cell_index(ue.serving_cell) {
                load[i] += 1;
            }
        }
        load
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborRsrp {
    pub cell: CellId,
    pub rsrp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeKpiReport {
    pub ue_id: UeId,
    pub serving_cell: CellId,
    pub timestamp: u64,
    /// bps
    pub pdcp_thp_dl: f64,
    pub pdcp_thp_ul: f64,
    pub prb_ratio_dl: f64,
    pub prb_ratio_ul: f64,
    /// dBm
    pub rsrp: f64,
    /// dB
    pub rsrq: f64,
    /// dB
    pub snir: f64,
    pub position: Point,
    /// Measurement report for every non-serving cell, sorted by cell id.
    pub neighbors: Vec<NeighborRsrp>,
}

impl UeKpiReport {
    pub fn rsrp_of(&self, cell: CellId) -> Option<f64> {
        if cell == self.serving_cell {
            return Some(self.rsrp);
        }
        self.neighbors.iter().find(|n| n.cell == cell).map(|n| n.rsrp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKpiReport {
    pub cell_id: CellId,
    pub timestamp: u64,
    /// bps
    pub throughput: f64,
    /// kHz
    pub meas_period_prb: f64,
    pub num_ues: u32,
    pub new_ues: u32,
    pub left_ues: u32,
}

impl CellKpiReport {
    /// Aggregate throughput per served UE; zero for an empty cell.
    pub fn throughput_per_ue(&self) -> f64 {
        if self.num_ues == 0 {
            0.0
        } else {
            self.throughput / f64::from(self.num_ues)
        }
    }
}

/// One reporting period's telemetry. Reports are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReportBatch {
    pub iteration: u64,
    pub ues: Vec<UeKpiReport>,
    pub cells: Vec<CellKpiReport>,
}

impl KpiReportBatch {
    pub fn cell(&self, id: CellId) -> Option<&CellKpiReport> {
        self.cells.iter().find(|c| c.cell_id == id)
    }

    pub fn ue(&self, id: UeId) -> Option<&UeKpiReport> {
        self.ues.iter().find(|u| u.ue_id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandoverRequest {
    pub ue_id: UeId,
    pub target_cell: CellId,
    pub issued_at: u64,
}
