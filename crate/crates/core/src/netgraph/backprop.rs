use std::ops::Range;

use super::graph::TransformFn;
use super::{weighted_euclidean, BlockGraph, BlockKind, GraphError, SparseVec, State};

/// One utterance of training data: per step, one vector per input block and
/// the target of the output block.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub inputs: Vec<Vec<SparseVec>>,
    pub targets: Vec<Vec<f64>>,
    /// Starting state; the graph's zero state when absent.
    pub initial: Option<State>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub(crate) fn dense_inputs(&self, t: usize) -> Vec<Vec<f64>> {
        self.inputs[t].iter().map(SparseVec::to_dense).collect()
    }
}

/// Loss gradient with respect to every parameter, in the order of
/// [`BlockGraph::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub flat: Vec<f64>,
}

impl Gradients {
    /// Weight and bias gradients of a dense block.
    pub fn block<'a>(&'a self, graph: &BlockGraph, name: &str) -> Option<(&'a [f64], &'a [f64])> {
        let b = graph.block_index(name)?;
        let blk = &graph.blocks[b];
        let off = graph.param_offset[b];
        let nw = blk.weights.len();
        Some((&self.flat[off..off + nw], &self.flat[off + nw..off + nw + blk.biases.len()]))
    }
}

pub(crate) struct Tape {
    values: Vec<Vec<f64>>,
    dense_inputs: Vec<Vec<f64>>,
}

fn add_into(dst: &mut Vec<f64>, src: &[f64]) {
    if dst.is_empty() {
        dst.extend_from_slice(src);
    } else {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s;
        }
    }
}

impl BlockGraph {
    pub(crate) fn check_sequence(&self, seq: &Sequence, w: &[f64]) -> Result<(), GraphError> {
        if seq.inputs.len() != seq.targets.len() {
            return Err(GraphError::Input(format!(
                "{} input steps but {} targets",
                seq.inputs.len(),
                seq.targets.len()
            )));
        }
        let ow = self.output_width();
        if w.len() != ow {
            return Err(GraphError::Loss(format!("{} loss weights for output width {ow}", w.len())));
        }
        for (x, t) in seq.inputs.iter().zip(&seq.targets) {
            if t.len() != ow {
                return Err(GraphError::Input(format!("target of width {} for output width {ow}", t.len())));
            }
            if x.len() != self.inputs.len() {
                return Err(GraphError::Input(format!(
                    "expected {} input vectors, got {}",
                    self.inputs.len(),
                    x.len()
                )));
            }
            for (v, &b) in x.iter().zip(&self.inputs) {
                if v.len() != self.blocks[b].out_width {
                    return Err(GraphError::Input(format!(
                        "input `{}` takes {} values, got {}",
                        self.blocks[b].name,
                        self.blocks[b].out_width,
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn record(&self, inputs: &[Vec<f64>], state: &mut State) -> Tape {
        let (values, dense_inputs) = self.run_step(inputs, state, true);
        Tape { values, dense_inputs }
    }

    /// Exact gradient of the summed weighted Euclidean loss over `seq`,
    /// backpropagated through time across recurrent edges and delay lines.
    /// With `teacher_forcing`, forced buffers receive the previous target and
    /// pass no gradient back to their source.
    pub fn backward(&self, seq: &Sequence, w: &[f64], teacher_forcing: bool) -> Result<(f64, Gradients), GraphError> {
        self.check_sequence(seq, w)?;
        let mut grads = vec![0.0; self.n_params];
        let loss = self.sequence_backward(seq, w, teacher_forcing, &mut grads, None)?;
        Ok((loss, Gradients { flat: grads }))
    }

    /// Summed loss of `seq` without gradients.
    pub fn sequence_loss(&self, seq: &Sequence, w: &[f64], teacher_forcing: bool) -> Result<f64, GraphError> {
        self.check_sequence(seq, w)?;
        let mut state = seq.initial.clone().unwrap_or_else(|| self.zero_state());
        let mut loss = 0.0;
        for t in 0..seq.len() {
            let y = self.step(&seq.dense_inputs(t), &mut state)?;
            loss += weighted_euclidean(&y, &seq.targets[t], w)?;
            if teacher_forcing {
                self.teacher_force(&mut state, &seq.targets[t]);
            }
        }
        Ok(loss)
    }

    pub(crate) fn sequence_backward(
        &self,
        seq: &Sequence,
        w: &[f64],
        teacher_forcing: bool,
        grads: &mut [f64],
        input_grads: Option<&mut Vec<Vec<Vec<f64>>>>,
    ) -> Result<f64, GraphError> {
        let mut state = seq.initial.clone().unwrap_or_else(|| self.zero_state());
        let mut tapes = Vec::with_capacity(seq.len());
        for t in 0..seq.len() {
            tapes.push(self.record(&seq.dense_inputs(t), &mut state));
            if teacher_forcing {
                self.teacher_force(&mut state, &seq.targets[t]);
            }
        }
        self.backprop(&tapes, &seq.targets, w, teacher_forcing, grads, input_grads)
    }

    /// Reverse pass over recorded steps; returns the summed loss.
    pub(crate) fn backprop(
        &self,
        tapes: &[Tape],
        targets: &[Vec<f64>],
        w: &[f64],
        teacher_forcing: bool,
        grads: &mut [f64],
        mut input_grads: Option<&mut Vec<Vec<Vec<f64>>>>,
    ) -> Result<f64, GraphError> {
        let n = self.blocks.len();
        let steps = tapes.len();
        let want_inputs = input_grads.is_some();
        if let Some(ig) = input_grads.as_deref_mut() {
            *ig = (0..steps)
                .map(|_| self.inputs.iter().map(|&b| vec![0.0; self.blocks[b].out_width]).collect())
                .collect();
        }
        // gradients w.r.t. block outputs, and w.r.t. delay-line inputs that
        // later steps re-emit; empty means zero
        let mut g_out: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; steps];
        let mut g_hist: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; steps];
        let mut loss = 0.0;
        for t in (0..steps).rev() {
            let tape = &tapes[t];
            for &b in self.order.iter().rev() {
                let blk = &self.blocks[b];
                let g = std::mem::take(&mut g_out[t][b]);
                let mut gin: Vec<f64> = Vec::new();
                match blk.kind {
                    BlockKind::Input => {
                        if let (Some(ig), false) = (input_grads.as_deref_mut(), g.is_empty()) {
                            let k = self.inputs.iter().position(|&i| i == b).unwrap();
                            ig[t][k] = g;
                        }
                        continue;
                    }
                    BlockKind::Output => {
                        let y = &tape.values[b];
                        loss += weighted_euclidean(y, &targets[t], w)?;
                        gin = if g.is_empty() { vec![0.0; blk.out_width] } else { g };
                        for i in 0..y.len() {
                            gin[i] += 2.0 * w[i] * (y[i] - targets[t][i]);
                        }
                    }
                    BlockKind::Concat | BlockKind::Transform(TransformFn::Identity) => gin = g,
                    BlockKind::Transform(TransformFn::Slice { offset, len }) => {
                        if !g.is_empty() {
                            gin = vec![0.0; blk.in_width];
                            gin[offset..offset + len].copy_from_slice(&g);
                        }
                    }
                    BlockKind::Dense(act) => {
                        if g.is_empty() {
                            continue;
                        }
                        let y = &tape.values[b];
                        let x = &tape.dense_inputs[b];
                        let iw = blk.in_width;
                        let d: Vec<f64> = g.iter().zip(y).map(|(gi, yi)| gi * act.slope(*yi)).collect();
                        let off = self.param_offset[b];
                        let nw = blk.weights.len();
                        let nz: Vec<usize> = (0..iw).filter(|&i| x[i] != 0.0).collect();
                        for (o, &dv) in d.iter().enumerate() {
                            if dv == 0.0 {
                                continue;
                            }
                            let row = &mut grads[off + o * iw..off + (o + 1) * iw];
                            if 2 * nz.len() > iw {
                                for (r, xv) in row.iter_mut().zip(x) {
                                    *r += dv * xv;
                                }
                            } else {
                                for &i in &nz {
                                    row[i] += dv * x[i];
                                }
                            }
                            grads[off + nw + o] += dv;
                        }
                        if self.grad_in[b] || want_inputs {
                            gin = vec![0.0; iw];
                            for (o, &dv) in d.iter().enumerate() {
                                if dv != 0.0 {
                                    for (gi, wv) in gin.iter_mut().zip(&blk.weights[o * iw..(o + 1) * iw]) {
                                        *gi += wv * dv;
                                    }
                                }
                            }
                        }
                    }
                    BlockKind::DelayLine { depth } | BlockKind::RecurrentBuffer { depth, .. } => {
                        let iw = blk.in_width;
                        if !g.is_empty() {
                            for j in 0..depth {
                                let s = t as isize - (depth - 1 - j) as isize;
                                if s >= 0 {
                                    add_into(&mut g_hist[s as usize][b], &g[j * iw..(j + 1) * iw]);
                                }
                            }
                        }
                        gin = std::mem::take(&mut g_hist[t][b]);
                    }
                }
                if gin.is_empty() || !(self.grad_in[b] || want_inputs) {
                    continue;
                }
                let forced = teacher_forcing
                    && matches!(blk.kind, BlockKind::RecurrentBuffer { teacher_forced: true, .. });
                let mut off = 0;
                for &id in &self.in_edges[b] {
                    let e = &self.edges[id];
                    let width = self.blocks[e.from].out_width;
                    let piece = &gin[off..off + width];
                    off += width;
                    if !e.recurrent {
                        add_into(&mut g_out[t][e.from], piece);
                    } else if t > 0 && !forced {
                        add_into(&mut g_out[t - 1][e.from], piece);
                    }
                }
            }
        }
        Ok(loss)
    }

    /// One training step from `state`: accumulates the gradient of this
    /// step's loss (no propagation into earlier steps) and advances `state`.
    pub(crate) fn train_step(
        &self,
        inputs: &[Vec<f64>],
        target: &[f64],
        w: &[f64],
        state: &mut State,
        grads: &mut [f64],
    ) -> Result<f64, GraphError> {
        let tape = self.record(inputs, state);
        self.backprop(
            std::slice::from_ref(&tape),
            std::slice::from_ref(&target.to_vec()),
            w,
            false,
            grads,
            None,
        )
    }
}

/// How much the loss depends on each tap of a time-delay input window: the
/// mean over all steps of the L1 norm of the loss gradient with respect to the
/// tap's input ranges, normalized to sum to 1. `input` indexes the graph's
/// input blocks. Gradients are taken with teacher forcing.
pub fn tap_saliency(
    graph: &BlockGraph,
    data: &[Sequence],
    w: &[f64],
    input: usize,
    taps: &[Vec<Range<usize>>],
) -> Result<Vec<f64>, GraphError> {
    let Some(&b) = graph.inputs.get(input) else {
        return Err(GraphError::Input(format!("no input block {input}")));
    };
    let width = graph.blocks[b].out_width;
    if taps.iter().flatten().any(|r| r.end > width) {
        return Err(GraphError::Input(format!("tap range beyond input width {width}")));
    }
    let mut score = vec![0.0; taps.len()];
    let mut steps = 0usize;
    let mut scratch = vec![0.0; graph.n_params];
    for seq in data {
        graph.check_sequence(seq, w)?;
        let mut ig = Vec::new();
        graph.sequence_backward(seq, w, true, &mut scratch, Some(&mut ig))?;
        for step in &ig {
            for (s, ranges) in score.iter_mut().zip(taps) {
                *s += ranges.iter().flat_map(|r| step[input][r.clone()].iter()).map(|g| g.abs()).sum::<f64>();
            }
        }
        steps += ig.len();
    }
    let total: f64 = score.iter().sum();
    if steps == 0 || total == 0.0 {
        return Ok(vec![0.0; taps.len()]);
    }
    Ok(score.iter().map(|s| s / total).collect())
}
