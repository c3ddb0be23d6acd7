use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Activation, GraphError, KindName, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformFn {
    Identity,
    Slice { offset: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Input,
    /// Passes its input through; the loss is measured here.
    Output,
    Dense(Activation),
    Concat,
    /// Emits its last `depth` inputs, oldest first, the current one last.
    DelayLine { depth: usize },
    /// A delay line meant to sit behind a recurrent edge. When teacher forced,
    /// training feeds it the previous target instead of the previous output.
    RecurrentBuffer { depth: usize, teacher_forced: bool },
    Transform(TransformFn),
}

impl BlockKind {
    fn history_depth(self) -> Option<usize> {
        match self {
            BlockKind::DelayLine { depth } | BlockKind::RecurrentBuffer { depth, .. } => Some(depth),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    pub in_width: usize,
    pub out_width: usize,
    /// Dense blocks only: `out_width x in_width`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub port: usize,
    pub recurrent: bool,
}

/// A validated graph with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGraph {
    pub(crate) spec: TopologySpec,
    pub(crate) blocks: Vec<Block>,
    pub(crate) edges: Vec<Edge>,
    /// Incoming edge ids of every block, by port.
    pub(crate) in_edges: Vec<Vec<usize>>,
    /// Evaluation order over the non-recurrent edges.
    pub(crate) order: Vec<usize>,
    pub(crate) inputs: Vec<usize>,
    pub(crate) output: usize,
    /// Whether the gradient with respect to a block's input reaches any weight.
    pub(crate) grad_in: Vec<bool>,
    /// Offset of every dense block's parameters in the flat parameter vector.
    pub(crate) param_offset: Vec<usize>,
    pub(crate) n_params: usize,
}

/// Values a graph carries from one step to the next: the history of every
/// delay line and buffer, and the last value sent over every recurrent edge.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub(crate) history: Vec<Vec<Vec<f64>>>,
    pub(crate) carry: Vec<Vec<f64>>,
}

fn block_err(block: &str, message: impl Into<String>) -> GraphError {
    GraphError::Block {
        block: block.to_string(),
        message: message.into(),
    }
}

/// Validates a topology and initializes its dense weights uniformly in
/// `+-1/sqrt(fan_in)` from the topology's seed. Biases start at zero.
pub fn build_graph(spec: &TopologySpec) -> Result<BlockGraph, GraphError> {
    let n = spec.blocks.len();
    let mut index = HashMap::new();
    for (i, b) in spec.blocks.iter().enumerate() {
        if index.insert(b.name.as_str(), i).is_some() {
            return Err(block_err(&b.name, "duplicate name"));
        }
    }

    let mut kinds = Vec::with_capacity(n);
    for b in &spec.blocks {
        let need = |v: Option<usize>, what: &str| v.ok_or_else(|| block_err(&b.name, format!("missing `{what}`")));
        let kind = match b.kind {
            KindName::Input => BlockKind::Input,
            KindName::Output => BlockKind::Output,
            KindName::Dense => BlockKind::Dense(
                b.activation
                    .ok_or_else(|| block_err(&b.name, "missing `activation`"))?,
            ),
            KindName::Concat => BlockKind::Concat,
            KindName::DelayLine => BlockKind::DelayLine {
                depth: need(b.depth, "depth")?,
            },
            KindName::RecurrentBuffer => BlockKind::RecurrentBuffer {
                depth: need(b.depth, "depth")?,
                teacher_forced: b.teacher_forced,
            },
            KindName::Transform => match b.function.as_deref() {
                Some("identity") => BlockKind::Transform(TransformFn::Identity),
                Some("slice") => BlockKind::Transform(TransformFn::Slice {
                    offset: need(b.offset, "offset")?,
                    len: need(b.len, "len")?,
                }),
                other => return Err(block_err(&b.name, format!("unknown transform {other:?}"))),
            },
        };
        if kind.history_depth() == Some(0) {
            return Err(block_err(&b.name, "depth must be at least 1"));
        }
        kinds.push(kind);
    }

    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        let find = |name: &str| {
            index.get(name).copied().ok_or_else(|| GraphError::Edge {
                edge: e.label(),
                message: format!("dangling: no block `{name}`"),
            })
        };
        edges.push(Edge {
            from: find(&e.from)?,
            to: find(&e.to)?,
            port: e.port,
            recurrent: e.recurrent,
        });
    }

    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, e) in edges.iter().enumerate() {
        in_edges[e.to].push(id);
    }
    for (b, ids) in in_edges.iter_mut().enumerate() {
        ids.sort_by_key(|&id| edges[id].port);
        let name = &spec.blocks[b].name;
        let ports: Vec<usize> = ids.iter().map(|&id| edges[id].port).collect();
        match kinds[b] {
            BlockKind::Input if !ports.is_empty() => return Err(block_err(name, "input blocks take no edges")),
            BlockKind::Input => {}
            BlockKind::Concat if ports.is_empty() => return Err(block_err(name, "port 0 is not connected")),
            _ if kinds[b] != BlockKind::Concat && ports.len() > 1 => {
                return Err(block_err(name, "takes a single input edge"))
            }
            _ => {
                for (i, &p) in ports.iter().enumerate() {
                    if p != i {
                        return Err(block_err(name, format!("port {i} is not connected exactly once")));
                    }
                }
                if ports.is_empty() {
                    return Err(block_err(name, "port 0 is not connected"));
                }
            }
        }
    }

    let outputs: Vec<usize> = (0..n).filter(|&b| kinds[b] == BlockKind::Output).collect();
    if outputs.len() != 1 {
        return Err(GraphError::Topology(format!("expected one output block, found {}", outputs.len())));
    }
    let inputs: Vec<usize> = (0..n).filter(|&b| kinds[b] == BlockKind::Input).collect();

    // Kahn's algorithm over the non-recurrent edges, lowest index first
    let mut indegree = vec![0usize; n];
    for e in edges.iter().filter(|e| !e.recurrent) {
        indegree[e.to] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&b| indegree[b] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(b) = ready.pop_first() {
        order.push(b);
        for e in edges.iter().filter(|e| !e.recurrent && e.from == b) {
            indegree[e.to] -= 1;
            if indegree[e.to] == 0 {
                ready.insert(e.to);
            }
        }
    }
    if order.len() != n {
        let stuck: Vec<&str> = (0..n)
            .filter(|&b| indegree[b] > 0)
            .map(|b| spec.blocks[b].name.as_str())
            .collect();
        return Err(GraphError::Cycle(stuck.join(", ")));
    }

    // widths; recurrent sources may come later in the order, so iterate
    let mut out_w: Vec<Option<usize>> = vec![None; n];
    let mut in_w: Vec<Option<usize>> = vec![None; n];
    for _ in 0..=n {
        for &b in &order {
            if out_w[b].is_some() {
                continue;
            }
            let srcs: Option<Vec<usize>> = in_edges[b].iter().map(|&id| out_w[edges[id].from]).collect();
            let iw = srcs.map(|v| v.iter().sum::<usize>());
            in_w[b] = iw;
            let decl = spec.blocks[b].width;
            out_w[b] = match kinds[b] {
                BlockKind::Input => {
                    in_w[b] = Some(0);
                    Some(decl.ok_or_else(|| block_err(&spec.blocks[b].name, "missing `width`"))?)
                }
                BlockKind::Output | BlockKind::Dense(_) => {
                    Some(decl.ok_or_else(|| block_err(&spec.blocks[b].name, "missing `width`"))?)
                }
                BlockKind::Transform(TransformFn::Slice { len, .. }) => Some(len),
                BlockKind::Concat | BlockKind::Transform(TransformFn::Identity) => iw,
                BlockKind::DelayLine { depth } | BlockKind::RecurrentBuffer { depth, .. } => iw.map(|w| w * depth),
            };
        }
        // inputs of blocks with declared widths resolve once sources do
        for b in 0..n {
            if in_w[b].is_none() {
                in_w[b] = in_edges[b]
                    .iter()
                    .map(|&id| out_w[edges[id].from])
                    .collect::<Option<Vec<_>>>()
                    .map(|v| v.iter().sum());
            }
        }
        if out_w.iter().all(Option::is_some) && in_w.iter().all(Option::is_some) {
            break;
        }
    }
    let mut blocks = Vec::with_capacity(n);
    for b in 0..n {
        let name = &spec.blocks[b].name;
        let (Some(iw), Some(ow)) = (in_w[b], out_w[b]) else {
            return Err(block_err(name, "width cannot be resolved"));
        };
        let edge_msg = |expected: usize| {
            let labels: Vec<String> = in_edges[b].iter().map(|&id| spec.edges[id].label()).collect();
            GraphError::Edge {
                edge: labels.join(" + "),
                message: format!("carries {iw} values, `{name}` expects {expected}"),
            }
        };
        match kinds[b] {
            BlockKind::Dense(_) => {
                let declared = spec.blocks[b]
                    .inputs
                    .ok_or_else(|| block_err(name, "missing `inputs`"))?;
                if declared != iw {
                    return Err(edge_msg(declared));
                }
            }
            BlockKind::Output if ow != iw => return Err(edge_msg(ow)),
            BlockKind::Transform(TransformFn::Slice { offset, len }) if offset + len > iw => {
                return Err(edge_msg(offset + len))
            }
            BlockKind::RecurrentBuffer { teacher_forced: true, .. } => {
                let e = edges[in_edges[b][0]];
                if !e.recurrent {
                    return Err(block_err(name, "a teacher-forced buffer needs a recurrent input edge"));
                }
                if iw != out_w[outputs[0]].unwrap() {
                    return Err(block_err(name, "a teacher-forced buffer must match the output width"));
                }
            }
            _ => {}
        }
        if ow == 0 {
            return Err(block_err(name, "zero width"));
        }
        blocks.push(Block {
            name: name.clone(),
            kind: kinds[b],
            in_width: iw,
            out_width: ow,
            weights: Vec::new(),
            biases: Vec::new(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut param_offset = vec![0; n];
    let mut n_params = 0;
    for (b, block) in blocks.iter_mut().enumerate() {
        if let BlockKind::Dense(_) = block.kind {
            let bound = 1.0 / (block.in_width as f64).sqrt();
            block.weights = (0..block.out_width * block.in_width)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            block.biases = vec![0.0; block.out_width];
            param_offset[b] = n_params;
            n_params += block.weights.len() + block.biases.len();
        }
    }

    // a block's input gradient matters if any source is or depends on a weight
    let mut upstream = vec![false; n];
    let mut grad_in = vec![false; n];
    loop {
        let mut changed = false;
        for b in 0..n {
            let g = in_edges[b].iter().any(|&id| {
                let s = edges[id].from;
                matches!(blocks[s].kind, BlockKind::Dense(_)) || upstream[s]
            });
            if g && !grad_in[b] {
                grad_in[b] = true;
                upstream[b] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    Ok(BlockGraph {
        spec: spec.clone(),
        blocks,
        edges,
        in_edges,
        order,
        inputs,
        output: outputs[0],
        grad_in,
        param_offset,
        n_params,
    })
}

impl BlockGraph {
    pub fn spec(&self) -> &TopologySpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut Block> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    /// Input blocks in declaration order; `forward` takes one vector per entry.
    pub fn input_blocks(&self) -> Vec<&Block> {
        self.inputs.iter().map(|&b| &self.blocks[b]).collect()
    }

    pub fn output_block(&self) -> &Block {
        &self.blocks[self.output]
    }

    pub fn output_width(&self) -> usize {
        self.blocks[self.output].out_width
    }

    /// Number of trainable values (dense weights and biases).
    pub fn parameter_count(&self) -> usize {
        self.n_params
    }

    /// All weights and biases, dense blocks in order, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params);
        for b in &self.blocks {
            p.extend_from_slice(&b.weights);
            p.extend_from_slice(&b.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params, "parameter count");
        let mut k = 0;
        for b in &mut self.blocks {
            let nw = b.weights.len();
            b.weights.copy_from_slice(&p[k..k + nw]);
            k += nw;
            let nb = b.biases.len();
            b.biases.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
    }

    /// Fresh state: empty histories and recurrent edges hold zeros.
    pub fn zero_state(&self) -> State {
        State {
            history: self
                .blocks
                .iter()
                .map(|b| match b.kind.history_depth() {
                    Some(d) => vec![vec![0.0; b.in_width]; d - 1],
                    None => Vec::new(),
                })
                .collect(),
            carry: self
                .edges
                .iter()
                .map(|e| {
                    if e.recurrent {
                        vec![0.0; self.blocks[e.from].out_width]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        }
    }

    /// Replaces the stored past inputs of a delay line or buffer, oldest
    /// first. There must be `depth - 1` entries of the block's input width.
    pub fn set_history(&self, state: &mut State, block: &str, entries: Vec<Vec<f64>>) -> Result<(), GraphError> {
        let b = self
            .block_index(block)
            .ok_or_else(|| GraphError::Input(format!("no block `{block}`")))?;
        let blk = &self.blocks[b];
        let Some(depth) = blk.kind.history_depth() else {
            return Err(block_err(block, "has no history"));
        };
        if entries.len() != depth - 1 || entries.iter().any(|e| e.len() != blk.in_width) {
            return Err(block_err(
                block,
                format!("history needs {} entries of width {}", depth - 1, blk.in_width),
            ));
        }
        state.history[b] = entries;
        Ok(())
    }

    /// Feeds `target` to every teacher-forced buffer at the next step.
    pub fn teacher_force(&self, state: &mut State, target: &[f64]) {
        for (id, e) in self.edges.iter().enumerate() {
            if e.recurrent && matches!(self.blocks[e.to].kind, BlockKind::RecurrentBuffer { teacher_forced: true, .. }) {
                state.carry[id].clear();
                state.carry[id].extend_from_slice(target);
            }
        }
    }

    pub(crate) fn check_inputs<T: AsRef<[f64]>>(&self, inputs: &[T]) -> Result<(), GraphError> {
        if inputs.len() != self.inputs.len() {
            return Err(GraphError::Input(format!(
                "expected {} input vectors, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        for (x, &b) in inputs.iter().zip(&self.inputs) {
            if x.as_ref().len() != self.blocks[b].out_width {
                return Err(GraphError::Input(format!(
                    "input `{}` takes {} values, got {}",
                    self.blocks[b].name,
                    self.blocks[b].out_width,
                    x.as_ref().len()
                )));
            }
        }
        Ok(())
    }

    /// Evaluates one step, updating `state` in place. Returns every block's
    /// output, and every dense block's input when `keep_inputs` is set.
    pub(crate) fn run_step<T: AsRef<[f64]>>(
        &self,
        inputs: &[T],
        state: &mut State,
        keep_inputs: bool,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.blocks.len();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut dense_inputs: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut nz: Vec<usize> = Vec::new();
        for &b in &self.order {
            let blk = &self.blocks[b];
            if blk.kind == BlockKind::Input {
                let k = self.inputs.iter().position(|&i| i == b).unwrap();
                values[b] = inputs[k].as_ref().to_vec();
                continue;
            }
            let mut x = Vec::with_capacity(blk.in_width);
            for &id in &self.in_edges[b] {
                let e = &self.edges[id];
                x.extend_from_slice(if e.recurrent { &state.carry[id] } else { &values[e.from] });
            }
            values[b] = match blk.kind {
                BlockKind::Input => unreachable!(),
                BlockKind::Output | BlockKind::Concat | BlockKind::Transform(TransformFn::Identity) => x.clone(),
                BlockKind::Transform(TransformFn::Slice { offset, len }) => x[offset..offset + len].to_vec(),
                BlockKind::Dense(act) => {
                    let iw = blk.in_width;
                    nz.clear();
                    nz.extend((0..iw).filter(|&i| x[i] != 0.0));
                    let sparse = nz.len() * 2 < iw;
                    (0..blk.out_width)
                        .map(|o| {
                            let row = &blk.weights[o * iw..(o + 1) * iw];
                            let z = if sparse {
                                nz.iter().map(|&i| row[i] * x[i]).sum::<f64>()
                            } else {
                                dot(row, &x)
                            };
                            act.apply(z + blk.biases[o])
                        })
                        .collect()
                }
                BlockKind::DelayLine { .. } | BlockKind::RecurrentBuffer { .. } => {
                    let hist = &mut state.history[b];
                    let mut out = Vec::with_capacity(blk.out_width);
                    for h in hist.iter() {
                        out.extend_from_slice(h);
                    }
                    out.extend_from_slice(&x);
                    if !hist.is_empty() {
                        hist.remove(0);
                        hist.push(x.clone());
                    }
                    out
                }
            };
            if keep_inputs && matches!(blk.kind, BlockKind::Dense(_)) {
                dense_inputs[b] = x;
            }
        }
        for (id, e) in self.edges.iter().enumerate() {
            if e.recurrent {
                state.carry[id].clone_from(&values[e.from]);
            }
        }
        (values, dense_inputs)
    }

    /// One step: the output block's value and the successor state.
    pub fn forward<T: AsRef<[f64]>>(&self, inputs: &[T], state: &State) -> Result<(Vec<f64>, State), GraphError> {
        let mut next = state.clone();
        let y = self.step(inputs, &mut next)?;
        Ok((y, next))
    }

    /// [`forward`](Self::forward) updating `state` in place.
    pub fn step<T: AsRef<[f64]>>(&self, inputs: &[T], state: &mut State) -> Result<Vec<f64>, GraphError> {
        self.check_inputs(inputs)?;
        let (mut values, _) = self.run_step(inputs, state, false);
        Ok(std::mem::take(&mut values[self.output]))
    }

    /// Runs a whole sequence from `state`, returning the output of every step.
    pub fn forward_sequence<T: AsRef<[f64]>>(
        &self,
        inputs: &[Vec<T>],
        state: &mut State,
    ) -> Result<Vec<Vec<f64>>, GraphError> {
        inputs.iter().map(|x| self.step(x, state)).collect()
    }
}

/// Dot product with four independent partial sums, which the compiler can
/// keep in vector registers.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
