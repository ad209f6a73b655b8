use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::check_matrix;
use crate::container::{scalars, Container, ContainerCodec};
use crate::math;
use crate::rng::{self, SimRng, Stream};
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful BST search over `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * (math::ln(n - 1.0) + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsolationForestConfig {
    pub n_trees: usize,
    pub subsample: usize,
    pub contamination: f64,
    pub seed: u64,
}

impl Default for IsolationForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, subsample: 256, contamination: 0.1, seed: 0 }
    }
}

impl IsolationForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.subsample == 0 {
            return Err(Error::Config("isolation forest needs trees and a subsample".into()));
        }
        if !(0.0..1.0).contains(&self.contamination) {
            return Err(Error::Config("contamination must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    Split { dim: usize, threshold: f64, left: usize, right: usize },
    Leaf { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    nodes: Vec<Node>,
}

impl IsolationTree {
    fn grow(data: &[Vec<f64>], idx: &mut [usize], height_limit: usize, rng: &mut SimRng) -> Self {
        let mut tree = IsolationTree { nodes: Vec::new() };
        tree.build(data, idx, 0, height_limit, rng);
        tree
    }

    fn build(&mut self, data: &[Vec<f64>], idx: &mut [usize], depth: usize, limit: usize, rng: &mut SimRng) -> usize {
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { size: idx.len() });
        if depth >= limit || idx.len() <= 1 {
            return me;
        }
        let d = data[idx[0]].len();
        // only dimensions that still vary can split
        let spans: Vec<(usize, f64, f64)> = (0..d)
            .filter_map(|k| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(data[i][k]), hi.max(data[i][k]))
                });
                (hi > lo).then_some((k, lo, hi))
            })
            .collect();
        if spans.is_empty() {
            return me;
        }
        let (dim, lo, hi) = spans[rng.random_range(0..spans.len())];
        let threshold = rng.random_range(lo..hi);
        let mut split = 0;
        for j in 0..idx.len() {
            if data[idx[j]][dim] < threshold {
                idx.swap(j, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(data, l, depth + 1, limit, rng);
        let right = self.build(data, r, depth + 1, limit, rng);
        self.nodes[me] = Node::Split { dim, threshold, left, right };
        me
    }

    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                Node::Split { dim, threshold, left, right } => {
                    node = if x[dim] < threshold { left } else { right };
                    depth += 1.0;
                }
                Node::Leaf { size } => return depth + average_path_length(size),
            }
        }
    }

    pub fn height(&self) -> usize {
        fn h(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + h(nodes, left).max(h(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        h(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestModel {
    pub trees: Vec<IsolationTree>,
    pub subsample_size: usize,
    pub n_trees: usize,
    pub n_features: usize,
    /// Scores strictly above this are anomalous.
    pub score_threshold: f64,
}

impl IsolationForestModel {
    pub fn fit(data: &[Vec<f64>], config: &IsolationForestConfig) -> Result<Self> {
        let n_features = check_matrix(data)?;
        config.validate()?;
        let psi = config.subsample.min(data.len());
        let limit = math::ceil(math::log2(psi as f64)) as usize;
        let mut rng = rng::substream(config.seed, Stream::Training, 0x1f);
        let trees = (0..config.n_trees)
            .map(|_| {
                let mut idx = rand::seq::index::sample(&mut rng, data.len(), psi).into_vec();
                IsolationTree::grow(data, &mut idx, limit, &mut rng)
            })
            .collect();
        let mut model =
            IsolationForestModel { trees, subsample_size: psi, n_trees: config.n_trees, n_features, score_threshold: 1.0 };
        let scores: Vec<f64> = data.iter().map(|x| model.score(x)).collect();
        model.score_threshold = math::quantile(&scores, 1.0 - config.contamination);
        Ok(model)
    }

    pub fn expected_path_length(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// `2^(-E[h(x)] / c(psi))`, in (0, 1]; higher is more anomalous.
    pub fn score(&self, x: &[f64]) -> f64 {
        let c = average_path_length(self.subsample_size);
        let norm = if c > 0.0 { c } else { 1.0 };
        math::powf(2.0, -self.expected_path_length(x) / norm)
    }

    pub fn is_anomalous(&self, x: &[f64]) -> bool {
        self.score(x) > self.score_threshold
    }
}

impl ContainerCodec for IsolationForestModel {
    fn write(&self, prefix: &str, c: &mut Container) {
        c.push(
            format!("{prefix}.header"),
            &[4],
            vec![self.subsample_size as f64, self.n_trees as f64, self.n_features as f64, self.score_threshold],
        );
        for (ti, t) in self.trees.iter().enumerate() {
            let mut rows = Vec::with_capacity(t.nodes.len() * 5);
            for n in &t.nodes {
                match *n {
                    Node::Split { dim, threshold, left, right } => {
                        rows.extend([0.0, dim as f64, threshold, left as f64, right as f64])
                    }
                    Node::Leaf { size } => rows.extend([1.0, size as f64, 0.0, 0.0, 0.0]),
                }
            }
            c.push(format!("{prefix}.tree{ti}"), &[t.nodes.len(), 5], rows);
        }
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let h = scalars(c, &format!("{prefix}.header"), 4)?;
        let n_trees = h[1] as usize;
        let trees = (0..n_trees)
            .map(|ti| {
                let t = c.tensor(&format!("{prefix}.tree{ti}"))?;
                let nodes = t
                    .data
                    .chunks_exact(5)
                    .map(|r| {
                        if r[0] == 0.0 {
                            Node::Split { dim: r[1] as usize, threshold: r[2], left: r[3] as usize, right: r[4] as usize }
                        } else {
                            Node::Leaf { size: r[1] as usize }
                        }
                    })
                    .collect::<Vec<_>>();
                let n = nodes.len();
                let ok = nodes.iter().all(|node| match *node {
                    Node::Split { left, right, .. } => left < n && right < n,
                    Node::Leaf { .. } => true,
                });
                if n == 0 || !ok {
                    return Err(Error::Container(format!("tree {ti} is malformed")));
                }
                Ok(IsolationTree { nodes })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trees, subsample_size: h[0] as usize, n_trees, n_features: h[2] as usize, score_threshold: h[3] })
    }
}
