//! Block-graph neural network engine.
//!
//! A graph is a set of typed blocks (inputs, dense layers, concatenations,
//! delay lines, recurrent buffers, fixed transforms and one output) joined by
//! edges. Edges marked recurrent carry the previous step's value, so only the
//! remaining edges need to form a DAG. The engine evaluates graphs step by
//! step, backpropagates a weighted Euclidean loss through time, trains with
//! momentum SGD in mixed sequential/random epochs, and stores weights as
//! float32 checkpoints or 8-bit affine codes.

mod backprop;
mod graph;
mod model;
mod quant;
mod topology;
mod train;

pub use backprop::{tap_saliency, Gradients, Sequence};
pub use graph::{build_graph, Block, BlockGraph, BlockKind, Edge, State};
pub use model::{read_model, write_model, PayloadFormat, MODEL_MAGIC, MODEL_VERSION};
pub use quant::{dequantize, quantize, QuantizedBlock, QuantizedWeights, QUANT_BLOCK_HEADER};
pub use topology::{BlockSpec, EdgeSpec, KindName, TopologySpec};
pub use graph::TransformFn;
pub use train::{train, EpochMode, TrainReport, TrainingSchedule};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("block `{block}`: {message}")]
    Block { block: String, message: String },
    #[error("edge {edge}: {message}")]
    Edge { edge: String, message: String },
    #[error("cycle without a recurrent edge through {0}")]
    Cycle(String),
    #[error("{0}")]
    Input(String),
    #[error("loss: {0}")]
    Loss(String),
    #[error("topology: {0}")]
    Topology(String),
    #[error("training: {0}")]
    Training(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("model digest does not match the topology")]
    Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output.
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }
}

/// `sum_i w_i (y_i - t_i)^2`.
pub fn weighted_euclidean(y: &[f64], t: &[f64], w: &[f64]) -> Result<f64, GraphError> {
    if y.len() != t.len() || y.len() != w.len() {
        return Err(GraphError::Loss(format!(
            "lengths differ: output {}, target {}, weights {}",
            y.len(),
            t.len(),
            w.len()
        )));
    }
    if w.iter().any(|&x| x < 0.0) {
        return Err(GraphError::Loss("negative weight".into()));
    }
    Ok(y.iter().zip(t).zip(w).map(|((a, b), c)| c * (a - b) * (a - b)).sum())
}

/// A vector stored as its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    len: usize,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl SparseVec {
    pub fn from_dense(v: &[f64]) -> Self {
        let (idx, val) = v
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, x)| (i as u32, *x))
            .unzip();
        SparseVec { len: v.len(), idx, val }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        for (i, x) in self.idx.iter().zip(&self.val) {
            v[*i as usize] = *x;
        }
        v
    }
}

impl From<Vec<f64>> for SparseVec {
    fn from(v: Vec<f64>) -> Self {
        SparseVec::from_dense(&v)
    }
}

/// Per-dimension affine map of raw values onto `[0.1, 0.9]`, fitted to the
/// observed range. A dimension with no spread maps to 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Normalizer {
    pub fn identity(width: usize) -> Self {
        Normalizer {
            lo: vec![0.1; width],
            hi: vec![0.9; width],
        }
    }

    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut it = rows.into_iter();
        let first = it.next()?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for r in it {
            for (j, &x) in r.iter().enumerate() {
                lo[j] = lo[j].min(x);
                hi[j] = hi[j].max(x);
            }
        }
        Some(Normalizer { lo, hi })
    }

    pub fn width(&self) -> usize {
        self.lo.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| if hi > lo { 0.1 + 0.8 * (v - lo) / (hi - lo) } else { 0.5 })
            .collect()
    }

    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| if hi > lo { lo + (v - 0.1) * (hi - lo) / 0.8 } else { lo })
            .collect()
    }
}

/// Inverse per-dimension variance of `rows`, rescaled to mean 1. Dimensions
/// with variance below `floor` are treated as having variance `floor`.
pub fn inverse_variance_weights<'a>(rows: impl IntoIterator<Item = &'a [f64]>, width: usize, floor: f64) -> Vec<f64> {
    let mut n = 0.0;
    let mut sum = vec![0.0; width];
    let mut sq = vec![0.0; width];
    for r in rows {
        n += 1.0;
        for j in 0..width {
            sum[j] += r[j];
            sq[j] += r[j] * r[j];
        }
    }
    if n == 0.0 {
        return vec![1.0; width];
    }
    let w: Vec<f64> = (0..width)
        .map(|j| {
            let mean = sum[j] / n;
            1.0 / (sq[j] / n - mean * mean).max(floor)
        })
        .collect();
    let mean = w.iter().sum::<f64>() / width as f64;
    w.iter().map(|x| x / mean).collect()
}
