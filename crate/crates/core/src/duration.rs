//! Duration network: per-segment log-duration prediction.
//!
//! Stream 2 carries every segment's phone code through a shift register that
//! shows the network `K` segments on each side; stream 3 carries context used
//! only for the current segment. A recurrent buffer feeds the most recent
//! normalized log durations back into the last hidden layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PhoneSegment, PhoneSet, SyntacticAnnotation};
use crate::encoding::{Encoder, EncodingError};
use crate::netgraph::{
    build_graph, inverse_variance_weights, train, Activation, BlockGraph, GraphError, Normalizer, Sequence,
    SparseVec, State, TopologySpec, TrainReport, TrainingSchedule,
};
use crate::vocoder::VocoderError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Vocoder(#[from] VocoderError),
    #[error("{0}")]
    Data(String),
}

/// Stream 2 input, its shift register and the output block.
pub const STREAM2: &str = "stream2";
pub const STREAM3: &str = "stream3";
pub const SHIFT_REGISTER: &str = "shift_register";
pub const DURATION_OUTPUT: &str = "block6";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DurationNetConfig {
    /// Widths of dense blocks 3, 4 and 5.
    pub hidden: [usize; 3],
    /// Past outputs held by the recurrent buffer.
    pub recurrent_depth: usize,
    pub seed: u64,
}

impl Default for DurationNetConfig {
    fn default() -> Self {
        DurationNetConfig {
            hidden: [64, 32, 16],
            recurrent_depth: 2,
            seed: 1,
        }
    }
}

/// Topology of the duration network for an encoder's layouts.
pub fn duration_topology(cfg: &DurationNetConfig, enc: &Encoder) -> Result<TopologySpec, ModelError> {
    if cfg.recurrent_depth == 0 {
        return Err(ModelError::Data("recurrent depth must be at least 1".into()));
    }
    let code = enc.phone_code_width();
    let window = 2 * enc.config().context + 1;
    let ctx = enc.context_layout().width();
    let [h3, h4, h5] = cfg.hidden;
    let d = cfg.recurrent_depth;
    let mut s = TopologySpec::new(cfg.seed);
    s.input(STREAM2, code)
        .input(STREAM3, ctx)
        .delay_line(SHIFT_REGISTER, window)
        .dense("block3", window * code, h3, Activation::Sigmoid)
        .dense("block4", ctx, h4, Activation::Sigmoid)
        .identity("block7")
        .recurrent_buffer("recurrent_buffer", d, true)
        .identity("block8")
        .concat("merge")
        .dense("block5", h3 + h4 + d, h5, Activation::Sigmoid)
        .dense("block5_out", h5, 1, Activation::Linear)
        .output(DURATION_OUTPUT, 1)
        .edge(STREAM2, SHIFT_REGISTER)
        .edge(SHIFT_REGISTER, "block3")
        .edge(STREAM3, "block4")
        .edge_port("block3", "merge", 0)
        .edge_port("block4", "merge", 1)
        .edge_port("block7", "merge", 2)
        .edge("recurrent_buffer", "block7")
        .edge("merge", "block5")
        .edge("block5", "block5_out")
        .edge("block5_out", DURATION_OUTPUT)
        .edge(DURATION_OUTPUT, "block8")
        .recurrent_edge("block8", "recurrent_buffer");
    Ok(s)
}

pub fn build_duration_net(cfg: &DurationNetConfig, enc: &Encoder) -> Result<BlockGraph, ModelError> {
    Ok(build_graph(&duration_topology(cfg, enc)?)?)
}

/// Natural log of the segment's duration in seconds.
pub fn duration_target(segment: &PhoneSegment, sample_rate: u32) -> f64 {
    (segment.len() as f64 / sample_rate as f64).ln()
}

/// Whole frames for a duration: nearest frame, at least one.
pub fn duration_frames(seconds: f64, frame_seconds: f64) -> usize {
    ((seconds / frame_seconds).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationModel {
    pub graph: BlockGraph,
    /// Maps log durations onto the network's output range.
    pub normalizer: Normalizer,
}

/// Inputs of every step for an utterance, and the state that primes the
/// shift register with padding and the first `K` segments.
fn inputs_for(
    graph: &BlockGraph,
    enc: &Encoder,
    segments: &[PhoneSegment],
    syntax: &SyntacticAnnotation,
) -> Result<(Vec<Vec<Vec<f64>>>, State), ModelError> {
    let ue = enc.prepare(segments, syntax)?;
    let k = enc.config().context as isize;
    let mut state = graph.zero_state();
    let history = (-k..k).map(|i| ue.phone_code(i).to_vec()).collect();
    graph.set_history(&mut state, SHIFT_REGISTER, history)?;
    let steps = (0..segments.len())
        .map(|t| vec![ue.phone_code(t as isize + k).to_vec(), ue.context(t).to_vec()])
        .collect();
    Ok((steps, state))
}

/// Labelled utterance used for training.
pub struct LabelledSegments<'a> {
    pub segments: &'a [PhoneSegment],
    pub syntax: &'a SyntacticAnnotation,
    pub sample_rate: u32,
}

pub fn train_duration_model(
    data: &[LabelledSegments<'_>],
    enc: &Encoder,
    cfg: &DurationNetConfig,
    schedule: &TrainingSchedule,
    loss_weights: Option<&[f64]>,
) -> Result<(DurationModel, TrainReport), ModelError> {
    let mut graph = build_duration_net(cfg, enc)?;
    let raw: Vec<Vec<f64>> = data
        .iter()
        .map(|u| u.segments.iter().map(|s| duration_target(s, u.sample_rate)).collect())
        .collect();
    let rows: Vec<[f64; 1]> = raw.iter().flatten().map(|&v| [v]).collect();
    let normalizer = Normalizer::fit(rows.iter().map(|r| &r[..]))
        .ok_or_else(|| ModelError::Data("no segments to train on".into()))?;
    let mut seqs = Vec::with_capacity(data.len());
    for (u, r) in data.iter().zip(&raw) {
        let (steps, initial) = inputs_for(&graph, enc, u.segments, u.syntax)?;
        seqs.push(Sequence {
            inputs: steps
                .into_iter()
                .map(|s| s.into_iter().map(SparseVec::from).collect())
                .collect(),
            targets: r.iter().map(|&v| normalizer.normalize(&[v])).collect(),
            initial: Some(initial),
        });
    }
    let w = match loss_weights {
        Some(w) => w.to_vec(),
        None => inverse_variance_weights(seqs.iter().flat_map(|s| s.targets.iter().map(Vec::as_slice)), 1, 1e-6),
    };
    let report = train(&mut graph, &seqs, &w, schedule)?;
    Ok((DurationModel { graph, normalizer }, report))
}

impl DurationModel {
    /// Unquantized durations in seconds, predicted in time order with the
    /// network's own outputs fed back.
    pub fn predict_seconds(
        &self,
        segments: &[PhoneSegment],
        syntax: &SyntacticAnnotation,
        enc: &Encoder,
    ) -> Result<Vec<f64>, ModelError> {
        let (steps, mut state) = inputs_for(&self.graph, enc, segments, syntax)?;
        steps
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let y = self
                    .graph
                    .step(x, &mut state)
                    .map_err(|e| ModelError::Data(format!("segment {i}: {e}")))?;
                Ok(self.normalizer.denormalize(&y)[0].exp())
            })
            .collect()
    }
}

/// Predicted durations in seconds, each a whole number of frames (at least one).
pub fn predict_durations(
    segments: &[PhoneSegment],
    syntax: &SyntacticAnnotation,
    model: &DurationModel,
    enc: &Encoder,
    frame_seconds: f64,
) -> Result<Vec<f64>, ModelError> {
    Ok(model
        .predict_seconds(segments, syntax, enc)?
        .into_iter()
        .map(|s| duration_frames(s, frame_seconds) as f64 * frame_seconds)
        .collect())
}

/// One `index phone duration_ms` line per segment.
pub fn write_durations(segments: &[PhoneSegment], durations: &[f64], phones: &PhoneSet) -> String {
    segments
        .iter()
        .zip(durations)
        .enumerate()
        .map(|(i, (s, d))| format!("{i} {} {}\n", phones.name(s.phone), (d * 1000.0).round() as i64))
        .collect()
}

/// Parses a duration file into `(phone, milliseconds)` pairs in order.
pub fn parse_durations(text: &str) -> Result<Vec<(String, u64)>, ModelError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .enumerate()
        .map(|(expected, (n, line))| {
            let err = |m: &str| ModelError::Data(format!("line {}: {m}", n + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err("expected `index phone duration_ms`"));
            }
            let idx: usize = f[0].parse().map_err(|_| err("bad index"))?;
            if idx != expected {
                return Err(err("indices must count up from 0"));
            }
            let ms: u64 = f[2].parse().map_err(|_| err("bad duration"))?;
            Ok((f[1].to_string(), ms))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncodingConfig;
    use crate::netgraph::{quantize, BlockKind};

    fn enc() -> Encoder {
        Encoder::new(EncodingConfig::default(), 160).unwrap()
    }

    #[test]
    fn structure() {
        let g = build_duration_net(&DurationNetConfig::default(), &enc()).unwrap();
        assert_eq!(g.input_blocks().len(), 2);
        assert_eq!(g.output_width(), 1);
        assert_eq!(g.block(SHIFT_REGISTER).unwrap().out_width, 7 * 93);
        assert!(g
            .blocks()
            .iter()
            .any(|b| matches!(b.kind, BlockKind::RecurrentBuffer { depth: 2, teacher_forced: true })));
        assert!(quantize(&g).byte_size() < 60_000);
    }

    #[test]
    fn target_closed_forms() {
        let phone = PhoneSet::timit().label("aa").unwrap();
        let seg = |n| PhoneSegment { start: 0, end: n, phone };
        assert!((duration_target(&seg(1600), 16000) - 0.1f64.ln()).abs() < 1e-15);
        assert!((duration_target(&seg(160), 16000) + 4.605170185988091).abs() < 1e-12);
        let a = duration_target(&seg(1000), 16000);
        let b = duration_target(&seg((1000.0 * std::f64::consts::E) as usize), 16000);
        assert!((b - a - 1.0).abs() < 1e-3);
    }

    #[test]
    fn frame_rounding() {
        assert_eq!(duration_frames(0.014, 0.01), 1);
        assert_eq!(duration_frames(0.001, 0.01), 1);
        assert_eq!(duration_frames(0.016, 0.01), 2);
    }

    #[test]
    fn cold_start_on_one_segment() {
        let e = enc();
        let g = build_duration_net(&DurationNetConfig::default(), &e).unwrap();
        let model = DurationModel { graph: g, normalizer: Normalizer { lo: vec![-5.0], hi: vec![-1.0] } };
        let segs = [PhoneSegment { start: 0, end: 800, phone: PhoneSet::timit().label("aa").unwrap() }];
        let d = predict_durations(&segs, &SyntacticAnnotation::default(), &model, &e, 0.01).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0] >= 0.01);
    }

    #[test]
    fn duration_file_round_trip() {
        let phones = PhoneSet::timit();
        let segs: Vec<PhoneSegment> = ["h#", "aa"]
            .iter()
            .enumerate()
            .map(|(i, p)| PhoneSegment { start: i * 800, end: (i + 1) * 800, phone: phones.label(p).unwrap() })
            .collect();
        let text = write_durations(&segs, &[0.05, 0.12], phones);
        assert_eq!(text, "0 h# 50\n1 aa 120\n");
        assert_eq!(parse_durations(&text).unwrap(), vec![("h#".into(), 50), ("aa".into(), 120)]);
        assert!(parse_durations("1 aa 10\n").is_err());
    }
}
