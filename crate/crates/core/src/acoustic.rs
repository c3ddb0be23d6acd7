//! Phonetic network: per-frame acoustic parameters from phonetic context.
//!
//! Each frame's input holds the phone ids and features seen at every tap of a
//! time-delay window, plus timing and syntactic codes. Slice transforms route
//! past and future taps to separate dense blocks, a merge trunk combines them
//! with the last two fed-back output frames, and a linear block emits the
//! normalized parameter vector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::corpus::{PhoneSegment, Span, SyntacticAnnotation};
use crate::duration::ModelError;
use crate::encoding::Encoder;
use crate::netgraph::{
    build_graph, inverse_variance_weights, train, Activation, BlockGraph, Normalizer, Sequence, SparseVec,
    TopologySpec, TrainReport, TrainingSchedule,
};
use crate::vocoder::{AcousticFrame, VocoderConfig};

pub const FRAME_INPUT: &str = "frame";
pub const ACOUSTIC_OUTPUT: &str = "output";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhoneticNetConfig {
    /// Width of each phone-id block (past and future taps).
    pub phone_width: usize,
    /// Width of each phone-feature block.
    pub feature_width: usize,
    /// Widths of the dense blocks behind the timing and syntax codes.
    pub timing_width: usize,
    pub syntax_width: usize,
    pub trunk: [usize; 2],
    pub recurrent_depth: usize,
    /// Feed the current frame's phone id straight into the output layer next
    /// to the trunk.
    pub current_phone_skip: bool,
    /// Smallest gap kept between neighbouring LSFs, radians.
    pub lsf_gap: f64,
    /// Frames with F0 within this many Hz of the clamp are unvoiced.
    pub voicing_margin: f64,
    pub seed: u64,
}

impl Default for PhoneticNetConfig {
    fn default() -> Self {
        PhoneticNetConfig {
            phone_width: 16,
            feature_width: 16,
            timing_width: 16,
            syntax_width: 16,
            trunk: [128, 64],
            recurrent_depth: 2,
            current_phone_skip: true,
            lsf_gap: 0.005,
            voicing_margin: 20.0,
            seed: 2,
        }
    }
}

pub fn phonetic_topology(cfg: &PhoneticNetConfig, enc: &Encoder, order: usize) -> Result<TopologySpec, ModelError> {
    if cfg.recurrent_depth == 0 {
        return Err(ModelError::Data("recurrent depth must be at least 1".into()));
    }
    let g = enc.frame_groups();
    let out = order + 3;
    let d = cfg.recurrent_depth;
    let mut s = TopologySpec::new(cfg.seed);
    s.input(FRAME_INPUT, enc.frame_layout().width());
    let streams = [
        ("past_phones", &g.past_phones, "block5", cfg.phone_width),
        ("future_phones", &g.future_phones, "block21", cfg.phone_width),
        ("past_features", &g.past_features, "block6", cfg.feature_width),
        ("future_features", &g.future_features, "block20", cfg.feature_width),
        ("block7", &g.timing, "block9", cfg.timing_width),
        ("block8", &g.syntax, "block10", cfg.syntax_width),
    ];
    s.concat("block11");
    let mut merged = 0;
    for (port, (sel, range, dense, width)) in streams.iter().enumerate() {
        if range.is_empty() {
            return Err(ModelError::Data(format!("input group `{sel}` is empty")));
        }
        s.slice(sel, range.start, range.len())
            .dense(dense, range.len(), *width, Activation::Sigmoid)
            .edge(FRAME_INPUT, sel)
            .edge(sel, dense)
            .edge_port(dense, "block11", port);
        merged += width;
    }
    let [t1, t2] = cfg.trunk;
    s.identity("block15")
        .recurrent_buffer("block16", d, true)
        .edge_port("block16", "block11", streams.len())
        .dense("block12", merged + d * out, t1, Activation::Sigmoid)
        .dense("block13", t1, t2, Activation::Sigmoid)
        .output(ACOUSTIC_OUTPUT, out)
        .edge("block11", "block12")
        .edge("block12", "block13")
        .edge("block14", ACOUSTIC_OUTPUT)
        .edge(ACOUSTIC_OUTPUT, "block15")
        .recurrent_edge("block15", "block16");
    if cfg.current_phone_skip {
        let current = enc
            .frame_layout()
            .range("phone@0")
            .ok_or_else(|| ModelError::Data("the tap schedule has no centre tap".into()))?;
        s.slice("current_phone", current.start, current.len())
            .concat("block23")
            .dense("block14", t2 + current.len(), out, Activation::Linear)
            .edge(FRAME_INPUT, "current_phone")
            .edge_port("block13", "block23", 0)
            .edge_port("current_phone", "block23", 1)
            .edge("block23", "block14");
    } else {
        s.dense("block14", t2, out, Activation::Linear).edge("block13", "block14");
    }
    Ok(s)
}

pub fn build_phonetic_net(cfg: &PhoneticNetConfig, enc: &Encoder, order: usize) -> Result<BlockGraph, ModelError> {
    Ok(build_graph(&phonetic_topology(cfg, enc, order)?)?)
}

/// `[lsf..., f0, power_db, voicing_boundary]`.
pub fn frame_vector(f: &AcousticFrame) -> Vec<f64> {
    let mut v = f.lsf.clone();
    v.extend([f.f0, f.power_db, f.voicing_boundary]);
    v
}

/// Raw target vectors of an utterance, one per labelled frame.
pub fn acoustic_targets(frames: &[AcousticFrame], label_frames: usize) -> Result<Vec<Vec<f64>>, ModelError> {
    if frames.len() != label_frames {
        return Err(ModelError::Data(format!(
            "audio gives {} frames but the labels cover {label_frames}",
            frames.len()
        )));
    }
    Ok(frames.iter().map(frame_vector).collect())
}

/// Repairs a raw parameter vector into a valid frame: LSFs sorted and pushed
/// at least `gap` apart inside `(0, pi)`, F0 clamped to `[f0_min, clamp]`,
/// voicing decided by F0 lying below `clamp - margin`, the voicing boundary
/// clipped to `[0, nyquist]` and zeroed when unvoiced.
pub fn project_frame(raw: &[f64], cfg: &VocoderConfig, gap: f64, margin: f64) -> AcousticFrame {
    let p = cfg.order;
    let mut lsf: Vec<f64> = raw[..p]
        .iter()
        .enumerate()
        .map(|(k, &w)| if w.is_finite() { w } else { (k + 1) as f64 * PI / (p + 1) as f64 })
        .collect();
    lsf.sort_by(f64::total_cmp);
    let gap = gap.min(PI / (p + 1) as f64 / 2.0);
    lsf[0] = lsf[0].max(gap);
    for k in 1..p {
        lsf[k] = lsf[k].max(lsf[k - 1] + gap);
    }
    lsf[p - 1] = lsf[p - 1].min(PI - gap);
    for k in (0..p - 1).rev() {
        lsf[k] = lsf[k].min(lsf[k + 1] - gap);
    }
    let f0_raw = if raw[p].is_finite() { raw[p] } else { cfg.clamp_f0 };
    let f0 = f0_raw.clamp(cfg.f0_min, cfg.clamp_f0);
    let voiced = f0 < cfg.clamp_f0 - margin;
    let power_db = if raw[p + 1].is_finite() { raw[p + 1] } else { cfg.power_floor_db };
    let vb = if raw[p + 2].is_finite() { raw[p + 2].clamp(0.0, cfg.nyquist()) } else { 0.0 };
    AcousticFrame {
        lsf,
        f0: if voiced { f0 } else { cfg.clamp_f0 },
        power_db: power_db.max(cfg.power_floor_db),
        voicing_boundary: if voiced { vb } else { 0.0 },
        voiced,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticModel {
    pub graph: BlockGraph,
    pub normalizer: Normalizer,
}

/// Labelled utterance with its analysed target frames.
pub struct AcousticExample<'a> {
    pub segments: &'a [PhoneSegment],
    pub syntax: &'a SyntacticAnnotation,
    pub frames: &'a [AcousticFrame],
}

/// Encoded frames of an utterance as training inputs.
fn frame_inputs(enc: &Encoder, segments: &[PhoneSegment], syntax: &SyntacticAnnotation) -> Result<Vec<Vec<SparseVec>>, ModelError> {
    let ue = enc.prepare(segments, syntax)?;
    (0..ue.n_frames())
        .map(|t| Ok(vec![SparseVec::from_dense(&ue.frame(t)?.values)]))
        .collect()
}

pub fn train_acoustic_model(
    data: &[AcousticExample<'_>],
    enc: &Encoder,
    cfg: &PhoneticNetConfig,
    vcfg: &VocoderConfig,
    schedule: &TrainingSchedule,
    loss_weights: Option<&[f64]>,
) -> Result<(AcousticModel, TrainReport), ModelError> {
    let mut graph = build_phonetic_net(cfg, enc, vcfg.order)?;
    let mut raw = Vec::with_capacity(data.len());
    for ex in data {
        let label_frames = ex.segments.last().map_or(0, |s| s.end) / enc.frame_len();
        raw.push(acoustic_targets(ex.frames, label_frames)?);
    }
    let normalizer = Normalizer::fit(raw.iter().flatten().map(Vec::as_slice))
        .ok_or_else(|| ModelError::Data("no frames to train on".into()))?;
    let mut seqs = Vec::with_capacity(data.len());
    for (ex, r) in data.iter().zip(&raw) {
        seqs.push(Sequence {
            inputs: frame_inputs(enc, ex.segments, ex.syntax)?,
            targets: r.iter().map(|v| normalizer.normalize(v)).collect(),
            initial: None,
        });
    }
    let w = match loss_weights {
        Some(w) => w.to_vec(),
        None => inverse_variance_weights(
            seqs.iter().flat_map(|s| s.targets.iter().map(Vec::as_slice)),
            vcfg.order + 3,
            1e-4,
        ),
    };
    let report = train(&mut graph, &seqs, &w, schedule)?;
    Ok((AcousticModel { graph, normalizer }, report))
}

/// Parameter frames for an utterance whose segments already span whole frames.
pub fn predict_frames(
    segments: &[PhoneSegment],
    syntax: &SyntacticAnnotation,
    model: &AcousticModel,
    enc: &Encoder,
    cfg: &PhoneticNetConfig,
    vcfg: &VocoderConfig,
) -> Result<Vec<AcousticFrame>, ModelError> {
    let ue = enc.prepare(segments, syntax)?;
    let mut state = model.graph.zero_state();
    (0..ue.n_frames())
        .map(|t| {
            let x = ue.frame(t).map_err(|e| ModelError::Data(format!("frame {t}: {e}")))?;
            let y = model.graph.step(&[x.values], &mut state)?;
            Ok(project_frame(&model.normalizer.denormalize(&y), vcfg, cfg.lsf_gap, cfg.voicing_margin))
        })
        .collect()
}

/// Moves segment boundaries so that segment `i` lasts `frames[i]` frames of
/// `frame_len` samples. Syntactic positions move piecewise linearly with the
/// segment that contains them.
pub fn retime(
    segments: &[PhoneSegment],
    syntax: &SyntacticAnnotation,
    frames: &[usize],
    frame_len: usize,
) -> Result<(Vec<PhoneSegment>, SyntacticAnnotation), ModelError> {
    if frames.len() != segments.len() {
        return Err(ModelError::Data(format!(
            "{} durations for {} segments",
            frames.len(),
            segments.len()
        )));
    }
    let mut out = Vec::with_capacity(segments.len());
    let mut pos = 0;
    for (s, &n) in segments.iter().zip(frames) {
        let len = n.max(1) * frame_len;
        out.push(PhoneSegment { start: pos, end: pos + len, phone: s.phone });
        pos += len;
    }
    let map = |p: usize| -> usize {
        let i = segments.partition_point(|s| s.end <= p);
        if i >= segments.len() {
            return pos;
        }
        let (a, b) = (&segments[i], &out[i]);
        let frac = (p.saturating_sub(a.start)) as f64 / a.len() as f64;
        b.start + (frac * b.len() as f64).round() as usize
    };
    let span = |s: &Span| Span::new(map(s.start), map(s.end));
    let mut y = syntax.clone();
    y.syllables.iter_mut().for_each(|s| s.span = span(&s.span));
    y.words.iter_mut().for_each(|w| w.span = span(&w.span));
    for list in [&mut y.phrases, &mut y.clauses, &mut y.sentences] {
        list.iter_mut().for_each(|s| *s = span(s));
    }
    y.tobi.iter_mut().for_each(|m| m.position = map(m.position));
    Ok((out, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, PhoneSet, Rulebook};
    use crate::encoding::EncodingConfig;
    use crate::netgraph::{quantize, BlockKind, TransformFn};
    use proptest::prelude::*;

    fn enc() -> Encoder {
        Encoder::new(EncodingConfig::default(), 160).unwrap()
    }

    #[test]
    fn structure() {
        let g = build_phonetic_net(&PhoneticNetConfig::default(), &enc(), 10).unwrap();
        assert_eq!(g.output_width(), 13);
        assert_eq!(g.input_blocks().len(), 1);
        let buf = g.block("block16").unwrap();
        assert_eq!(buf.kind, BlockKind::RecurrentBuffer { depth: 2, teacher_forced: true });
        assert_eq!(buf.in_width, 13);
        assert!(quantize(&g).byte_size() < 50_000);
    }

    #[test]
    fn current_phone_skip_reaches_the_output_layer() {
        let e = enc();
        let n_ph = PhoneSet::timit().len();
        let with = build_phonetic_net(&PhoneticNetConfig::default(), &e, 10).unwrap();
        let cfg = PhoneticNetConfig { current_phone_skip: false, ..Default::default() };
        let without = build_phonetic_net(&cfg, &e, 10).unwrap();
        assert_eq!(with.block("block14").unwrap().in_width, 64 + n_ph);
        assert_eq!(without.block("block14").unwrap().in_width, 64);
        assert!(without.block("current_phone").is_none());
        // the skip reads exactly the centre tap's phone id
        let range = e.frame_layout().range("phone@0").unwrap();
        assert_eq!(
            with.block("current_phone").unwrap().kind,
            BlockKind::Transform(TransformFn::Slice { offset: range.start, len: n_ph })
        );
        assert_eq!(
            quantize(&with).byte_size() - quantize(&without).byte_size(),
            n_ph * 13,
            "one byte per added weight"
        );
    }

    #[test]
    fn cold_start_frame_zero() {
        let e = enc();
        let vcfg = VocoderConfig::default();
        let cfg = PhoneticNetConfig::default();
        let g = build_phonetic_net(&cfg, &e, 10).unwrap();
        let model = AcousticModel { graph: g, normalizer: Normalizer::identity(13) };
        let u = &generate_synthetic_corpus(1, 1, &Rulebook::default())[0];
        let frames = predict_frames(&u.segments, &u.syntax, &model, &e, &cfg, &vcfg).unwrap();
        assert_eq!(frames.len(), u.labelled_len() / 160);
        for f in &frames {
            f.check(&vcfg).unwrap();
        }
    }

    #[test]
    fn target_count_mismatch_reports_counts() {
        let vcfg = VocoderConfig::default();
        let frames = vec![AcousticFrame::silent(&vcfg); 100];
        assert_eq!(acoustic_targets(&frames, 100).unwrap().len(), 100);
        let err = acoustic_targets(&frames, 98).unwrap_err().to_string();
        assert!(err.contains("100") && err.contains("98"));
    }

    #[test]
    fn retiming_keeps_structure() {
        let rb = Rulebook::default();
        let u = &generate_synthetic_corpus(4, 1, &rb)[0];
        let frames: Vec<usize> = (0..u.segments.len()).map(|i| 3 + i % 4).collect();
        let (s, y) = retime(&u.segments, &u.syntax, &frames, 160).unwrap();
        assert_eq!(s.last().unwrap().end, frames.iter().sum::<usize>() * 160);
        crate::corpus::validate_segments(&s, PhoneSet::timit()).unwrap();
        for (w, w0) in y.words.iter().zip(&u.syntax.words) {
            // word edges sit on segment edges and stay there
            let i = u.segments.iter().position(|x| x.start == w0.span.start).unwrap();
            assert_eq!(w.span.start, s[i].start);
        }
        let same: Vec<usize> = u.segments.iter().map(|x| x.len() / 160).collect();
        let (s2, y2) = retime(&u.segments, &u.syntax, &same, 160).unwrap();
        assert_eq!(s2, u.segments);
        assert_eq!(y2, u.syntax);
    }

    proptest! {
        #[test]
        fn projection_always_yields_valid_frames(raw in prop::collection::vec(prop_oneof![
            -1e4f64..1e4,
            Just(f64::NAN),
            Just(f64::INFINITY),
            Just(0.0),
            Just(400.0),
        ], 13)) {
            let vcfg = VocoderConfig::default();
            let f = project_frame(&raw, &vcfg, 0.005, 20.0);
            prop_assert!(f.check(&vcfg).is_ok(), "{:?}", f.check(&vcfg));
            prop_assert!(f.lsf.windows(2).all(|w| w[1] - w[0] >= 0.005 - 1e-12));
        }
    }
}
