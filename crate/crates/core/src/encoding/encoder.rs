use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{bar_code, one_of_n, FeatureTable, FeatureVector, FieldKind, Layout, TapSchedule};
use super::{default_tap_schedule, EncodingError};
use crate::corpus::{align_frames, FrameLabel, PhoneSegment, PhoneSet, SyntacticAnnotation, UnitKind, MAX_WORD_LEVEL};

/// Units whose boundary distances are measured in frames, finest first.
pub const FRAME_UNITS: [&str; 6] = ["segment", "syllable", "word", "phrase", "clause", "sentence"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    /// Neighbouring segments seen on each side by the segment encoder.
    pub context: usize,
    /// Width of every distance bar code; larger distances saturate.
    pub saturation: usize,
    pub tobi_labels: Vec<String>,
    pub window_ms: f64,
    pub frame_ms: f64,
    /// Explicit tap offsets in frames; the default schedule when absent.
    pub taps: Option<Vec<i32>>,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            context: 3,
            saturation: 7,
            tobi_labels: ["H*", "L*", "L+H*", "L-", "H-", "L%", "H%"].map(String::from).to_vec(),
            window_ms: 300.0,
            frame_ms: 10.0,
            taps: None,
        }
    }
}

/// Builds segment and frame encodings for one phone inventory and feature
/// table.
#[derive(Debug, Clone)]
pub struct Encoder {
    phones: PhoneSet,
    table: FeatureTable,
    config: EncodingConfig,
    taps: TapSchedule,
    frame_len: usize,
    /// Phone id code followed by its feature row, per inventory entry.
    codes: Vec<Vec<f64>>,
    context_layout: Arc<Layout>,
    segment_layout: Arc<Layout>,
    frame_layout: Arc<Layout>,
}

impl Encoder {
    /// Encoder over the TIMIT inventory and feature table. `frame_len` is the
    /// frame hop in samples.
    pub fn new(config: EncodingConfig, frame_len: usize) -> Result<Self, EncodingError> {
        Self::with_inventory(config, frame_len, PhoneSet::timit().clone(), FeatureTable::timit().clone())
    }

    pub fn with_inventory(
        config: EncodingConfig,
        frame_len: usize,
        phones: PhoneSet,
        table: FeatureTable,
    ) -> Result<Self, EncodingError> {
        let taps = match &config.taps {
            Some(t) => TapSchedule::new(t.clone())?,
            None => default_tap_schedule(config.window_ms, config.frame_ms),
        };
        taps.fits((config.window_ms / config.frame_ms).round() as usize)?;
        if config.saturation == 0 {
            return Err(EncodingError::Taps("saturation must be positive".into()));
        }
        let codes = phones
            .phones()
            .map(|p| {
                let mut c = one_of_n(p.index(), phones.len())?;
                c.extend(table.phone_features(p, &phones)?);
                Ok(c)
            })
            .collect::<Result<Vec<_>, EncodingError>>()?;

        let n_ph = phones.len();
        let n_feat = table.width();
        let sat = config.saturation;
        let mut context = Layout::default();
        context
            .push("stress", FieldKind::OneOfN, 3)
            .push("word_class", FieldKind::Binary, 1)
            .push("word_level", FieldKind::Bar, MAX_WORD_LEVEL as usize);
        for kind in UnitKind::ALL {
            context
                .push(format!("{}_left", kind.name()), FieldKind::Bar, sat)
                .push(format!("{}_right", kind.name()), FieldKind::Bar, sat);
        }
        context.push("tobi", FieldKind::Binary, config.tobi_labels.len());

        let k = config.context as i64;
        let mut segment = Layout::default();
        segment.push("phone", FieldKind::OneOfN, n_ph).push("features", FieldKind::Binary, n_feat);
        for o in (-k..=k).filter(|&o| o != 0) {
            segment
                .push(format!("phone{o:+}"), FieldKind::OneOfN, n_ph)
                .push(format!("features{o:+}"), FieldKind::Binary, n_feat);
        }
        for f in context.fields() {
            segment.push(f.name.clone(), f.kind, f.width);
        }

        let mut frame = Layout::default();
        for o in taps.offsets() {
            frame.push(format!("phone@{o}"), FieldKind::OneOfN, n_ph);
        }
        for o in taps.offsets() {
            frame.push(format!("features@{o}"), FieldKind::Binary, n_feat);
        }
        frame.push("duration", FieldKind::Bar, sat).push("position", FieldKind::Real, 1);
        for unit in FRAME_UNITS {
            frame
                .push(format!("{unit}_left_frames"), FieldKind::Bar, sat)
                .push(format!("{unit}_right_frames"), FieldKind::Bar, sat);
        }
        for f in context.fields() {
            frame.push(f.name.clone(), f.kind, f.width);
        }

        Ok(Encoder {
            phones,
            table,
            config,
            taps,
            frame_len,
            codes,
            context_layout: Arc::new(context),
            segment_layout: Arc::new(segment),
            frame_layout: Arc::new(frame),
        })
    }

    pub fn phones(&self) -> &PhoneSet {
        &self.phones
    }

    pub fn table(&self) -> &FeatureTable {
        &self.table
    }

    pub fn config(&self) -> &EncodingConfig {
        &self.config
    }

    pub fn taps(&self) -> &TapSchedule {
        &self.taps
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Width of one phone code (id plus features).
    pub fn phone_code_width(&self) -> usize {
        self.codes[0].len()
    }

    pub fn pad_code(&self) -> &[f64] {
        &self.codes[self.phones.pad().index()]
    }

    /// Layout of the per-segment prosodic and syntactic context.
    pub fn context_layout(&self) -> &Arc<Layout> {
        &self.context_layout
    }

    pub fn segment_layout(&self) -> &Arc<Layout> {
        &self.segment_layout
    }

    pub fn frame_layout(&self) -> &Arc<Layout> {
        &self.frame_layout
    }

    /// Contiguous parts of a frame vector: phone ids of past (offset <= 0) and
    /// future taps, their features, the timing codes and the syntactic context.
    pub fn frame_groups(&self) -> FrameGroups {
        let n_ph = self.phones.len();
        let n_feat = self.table.width();
        let (t, past) = (self.taps.len(), self.taps.past());
        let feat0 = t * n_ph;
        let timing0 = feat0 + t * n_feat;
        let syntax0 = self.frame_layout.width() - self.context_layout.width();
        FrameGroups {
            past_phones: 0..past * n_ph,
            future_phones: past * n_ph..feat0,
            past_features: feat0..feat0 + past * n_feat,
            future_features: feat0 + past * n_feat..timing0,
            timing: timing0..syntax0,
            syntax: syntax0..self.frame_layout.width(),
        }
    }

    /// Input ranges of a frame vector belonging to each tap, in tap order.
    pub fn tap_ranges(&self) -> Vec<Vec<Range<usize>>> {
        self.taps
            .offsets()
            .iter()
            .map(|o| {
                vec![
                    self.frame_layout.range(&format!("phone@{o}")).unwrap(),
                    self.frame_layout.range(&format!("features@{o}")).unwrap(),
                ]
            })
            .collect()
    }

    /// Precomputes what the encoders need for one utterance.
    pub fn prepare<'a>(
        &'a self,
        segments: &'a [PhoneSegment],
        syntax: &'a SyntacticAnnotation,
    ) -> Result<UtteranceEncoding<'a>, EncodingError> {
        for s in segments {
            if s.phone.index() >= self.phones.len() {
                return Err(EncodingError::OutOfRange {
                    what: "phone",
                    value: s.phone.index(),
                    limit: self.phones.len(),
                });
            }
        }
        let end = segments.last().map_or(0, |s| s.end);
        let with_edges = |mut b: Vec<usize>| {
            b.push(0);
            b.push(end);
            b.sort_unstable();
            b.dedup();
            b
        };
        let segment_bounds = with_edges(segments.iter().map(|s| s.start).collect());
        let mut bounds = vec![segment_bounds];
        bounds.extend(UnitKind::ALL.iter().map(|&k| with_edges(syntax.boundaries(k))));
        let mut ue = UtteranceEncoding {
            enc: self,
            segments,
            syntax,
            labels: align_frames(segments, self.frame_len),
            bounds,
            contexts: Vec::new(),
        };
        ue.contexts = (0..segments.len()).map(|i| ue.compute_context(i)).collect::<Result<_, _>>()?;
        Ok(ue)
    }

    /// Full encoding of segment `index`.
    pub fn encode_segment(
        &self,
        index: usize,
        segments: &[PhoneSegment],
        syntax: &SyntacticAnnotation,
    ) -> Result<FeatureVector, EncodingError> {
        self.prepare(segments, syntax)?.segment(index)
    }

    /// Encoding of frame `index` of the frame grid over `segments`.
    pub fn encode_frame(
        &self,
        index: usize,
        segments: &[PhoneSegment],
        syntax: &SyntacticAnnotation,
    ) -> Result<FeatureVector, EncodingError> {
        self.prepare(segments, syntax)?.frame(index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameGroups {
    pub past_phones: Range<usize>,
    pub future_phones: Range<usize>,
    pub past_features: Range<usize>,
    pub future_features: Range<usize>,
    pub timing: Range<usize>,
    pub syntax: Range<usize>,
}

/// Per-utterance encoder state: frame labels, unit boundaries with the
/// utterance edges added, and the cached context code of every segment.
#[derive(Debug, Clone)]
pub struct UtteranceEncoding<'a> {
    enc: &'a Encoder,
    segments: &'a [PhoneSegment],
    syntax: &'a SyntacticAnnotation,
    labels: Vec<FrameLabel>,
    /// Boundary positions per entry of [`FRAME_UNITS`].
    bounds: Vec<Vec<usize>>,
    contexts: Vec<Vec<f64>>,
}

impl UtteranceEncoding<'_> {
    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn n_frames(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[FrameLabel] {
        &self.labels
    }

    /// Phone code of segment `index`, the padding code outside the utterance.
    pub fn phone_code(&self, index: isize) -> &[f64] {
        if index < 0 || index as usize >= self.segments.len() {
            self.enc.pad_code()
        } else {
            &self.enc.codes[self.segments[index as usize].phone.index()]
        }
    }

    /// Prosodic and syntactic context code of segment `index`.
    pub fn context(&self, index: usize) -> &[f64] {
        &self.contexts[index]
    }

    pub fn segment(&self, index: usize) -> Result<FeatureVector, EncodingError> {
        self.check_segment(index)?;
        let k = self.enc.config.context as isize;
        let i = index as isize;
        let mut values = Vec::with_capacity(self.enc.segment_layout.width());
        values.extend_from_slice(self.phone_code(i));
        for o in (-k..=k).filter(|&o| o != 0) {
            values.extend_from_slice(self.phone_code(i + o));
        }
        values.extend_from_slice(&self.contexts[index]);
        Ok(FeatureVector {
            values,
            layout: self.enc.segment_layout.clone(),
        })
    }

    pub fn frame(&self, index: usize) -> Result<FeatureVector, EncodingError> {
        let n = self.labels.len();
        if index >= n {
            return Err(EncodingError::OutOfRange {
                what: "frame",
                value: index,
                limit: n,
            });
        }
        let enc = self.enc;
        let sat = enc.config.saturation;
        let n_ph = enc.phones.len();
        let tap_code = |o: i32| {
            let t = index as i64 + o as i64;
            if t < 0 || t >= n as i64 {
                enc.pad_code()
            } else {
                &enc.codes[self.labels[t as usize].phone.index()]
            }
        };
        let mut values = Vec::with_capacity(enc.frame_layout.width());
        for &o in enc.taps.offsets() {
            values.extend_from_slice(&tap_code(o)[..n_ph]);
        }
        for &o in enc.taps.offsets() {
            values.extend_from_slice(&tap_code(o)[n_ph..]);
        }
        let label = &self.labels[index];
        let seg = &self.segments[label.segment];
        let frames = ((seg.len() as f64 / enc.frame_len as f64).round() as usize).max(1);
        let log_q = (frames.ilog2() as usize + 1).min(sat);
        values.extend(bar_code(log_q, sat)?);
        values.push(label.position);
        let center = index * enc.frame_len + enc.frame_len / 2;
        for b in &self.bounds {
            let left = b[b.partition_point(|&x| x <= center) - 1];
            let right = b[b.partition_point(|&x| x <= center)];
            values.extend(bar_code(((center - left) / enc.frame_len).min(sat), sat)?);
            values.extend(bar_code(((right - center) / enc.frame_len).min(sat), sat)?);
        }
        values.extend_from_slice(&self.contexts[label.segment]);
        Ok(FeatureVector {
            values,
            layout: enc.frame_layout.clone(),
        })
    }

    fn check_segment(&self, index: usize) -> Result<(), EncodingError> {
        if index >= self.segments.len() {
            return Err(EncodingError::OutOfRange {
                what: "segment",
                value: index,
                limit: self.segments.len(),
            });
        }
        Ok(())
    }

    fn compute_context(&self, index: usize) -> Result<Vec<f64>, EncodingError> {
        self.check_segment(index)?;
        let sat = self.enc.config.saturation;
        let seg = &self.segments[index];
        let stress = self.syntax.syllable_at(seg.start).map_or(0, |s| s.stress.code() as usize);
        let word = self.syntax.word_at(seg.start);
        let mut values = Vec::with_capacity(self.enc.context_layout.width());
        values.extend(one_of_n(stress, 3)?);
        values.push(word.map_or(0.0, |w| if w.class == crate::corpus::WordClass::Content { 1.0 } else { 0.0 }));
        let level = word.map_or(0, |w| w.level.min(MAX_WORD_LEVEL)) as usize;
        values.extend(bar_code(level, MAX_WORD_LEVEL as usize)?);
        for b in &self.bounds[1..] {
            // segments between the nearest boundary at or before the segment
            // start, and after the segment up to the nearest boundary at or
            // beyond its end
            let left = b[b.partition_point(|&x| x <= seg.start) - 1];
            let first = self.segments.partition_point(|s| s.start < left);
            let right = b[b.partition_point(|&x| x < seg.end)];
            let past_end = self.segments.partition_point(|s| s.end <= right);
            values.extend(bar_code((index - first).min(sat), sat)?);
            values.extend(bar_code((past_end - 1 - index).min(sat), sat)?);
        }
        let mut tobi = vec![0.0; self.enc.config.tobi_labels.len()];
        for mark in &self.syntax.tobi {
            if seg.span().contains(mark.position) {
                if let Some(j) = self.enc.config.tobi_labels.iter().position(|l| *l == mark.label) {
                    tobi[j] = 1.0;
                }
            }
        }
        values.extend(tobi);
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, Rulebook, Span, Stress, Syllable, Word, WordClass};
    use proptest::prelude::*;

    fn encoder() -> Encoder {
        Encoder::new(EncodingConfig::default(), 160).unwrap()
    }

    fn segs(names: &[&str], len: usize) -> Vec<PhoneSegment> {
        let phones = PhoneSet::timit();
        names
            .iter()
            .enumerate()
            .map(|(i, n)| PhoneSegment {
                start: i * len,
                end: (i + 1) * len,
                phone: phones.label(n).unwrap(),
            })
            .collect()
    }

    fn bar_value(v: &[f64]) -> usize {
        v.iter().take_while(|&&x| x == 1.0).count()
    }

    #[test]
    fn layout_widths() {
        let e = encoder();
        assert_eq!(e.phone_code_width(), 62 + 31);
        assert_eq!(e.context_layout().width(), 3 + 1 + 15 + 5 * 2 * 7 + 7);
        assert_eq!(e.segment_layout().width(), 7 * 93 + e.context_layout().width());
        let g = e.frame_groups();
        assert_eq!(g.past_phones, 0..6 * 62);
        assert_eq!(g.syntax.end, e.frame_layout().width());
        assert_eq!(g.timing.len(), 7 + 1 + 6 * 2 * 7);
    }

    #[test]
    fn every_phone_code_is_distinct() {
        let e = encoder();
        let codes: Vec<&Vec<f64>> = e.codes.iter().collect();
        for i in 0..codes.len() {
            for j in i + 1..codes.len() {
                assert_ne!(codes[i], codes[j], "{} {}", e.phones.name(crate::corpus::Phone(i as u16)), j);
            }
        }
        // the padding code is distinct from silence
        let sil = e.phones.get("h#").unwrap().index();
        assert_ne!(e.pad_code(), &e.codes[sil][..]);
    }

    #[test]
    fn first_segment_sees_padding_and_zero_start_distance() {
        let e = encoder();
        let s = segs(&["h#", "s", "aa", "h#"], 800);
        let syntax = SyntacticAnnotation {
            sentences: vec![Span::new(0, 3200)],
            ..Default::default()
        };
        let v = e.encode_segment(0, &s, &syntax).unwrap();
        v.check().unwrap();
        for o in 1..=3 {
            assert_eq!(v.field(&format!("phone-{o}")), &e.pad_code()[..62]);
        }
        assert_eq!(bar_value(v.field("sentence_left")), 0);
        assert_eq!(bar_value(v.field("sentence_right")), 3);
    }

    #[test]
    fn middle_of_five_segment_word() {
        let e = encoder();
        let s = segs(&["h#", "s", "aa", "m", "iy", "l", "h#"], 800);
        let syntax = SyntacticAnnotation {
            words: vec![Word {
                span: Span::new(800, 4800),
                class: WordClass::Content,
                level: 4,
            }],
            syllables: vec![
                Syllable { span: Span::new(800, 2400), stress: Stress::Primary },
                Syllable { span: Span::new(2400, 4800), stress: Stress::None },
            ],
            sentences: vec![Span::new(800, 4800)],
            ..Default::default()
        };
        let v = e.encode_segment(3, &s, &syntax).unwrap();
        v.check().unwrap();
        // direct scan: word spans segments 1..=5, segment 3 has two on each side
        assert_eq!(bar_value(v.field("word_left")), 2);
        assert_eq!(bar_value(v.field("word_right")), 2);
        assert_eq!(bar_value(v.field("syllable_left")), 0);
        assert_eq!(bar_value(v.field("syllable_right")), 2);
        assert_eq!(bar_value(v.field("word_level")), 4);
        assert_eq!(v.field("word_class"), &[1.0]);
        assert_eq!(v.field("stress"), &[1.0, 0.0, 0.0]);
        let v2 = e.encode_segment(2, &s, &syntax).unwrap();
        assert_eq!(v2.field("stress"), &[0.0, 1.0, 0.0]);
        assert!(e.encode_segment(7, &s, &syntax).is_err());
    }

    #[test]
    fn long_segment_gives_constant_taps() {
        let e = encoder();
        let s = segs(&["aa"], 16000);
        let syntax = SyntacticAnnotation::default();
        let ue = e.prepare(&s, &syntax).unwrap();
        let v = ue.frame(50).unwrap();
        let first = v.field("phone@0").to_vec();
        for o in e.taps().offsets() {
            assert_eq!(v.field(&format!("phone@{o}")), &first[..]);
        }
    }

    #[test]
    fn frame_zero_pads_the_past() {
        let e = encoder();
        let s = segs(&["h#", "aa", "h#"], 1600);
        let v = e.encode_frame(0, &s, &SyntacticAnnotation::default()).unwrap();
        for o in e.taps().offsets().iter().filter(|&&o| o < 0) {
            assert_eq!(v.field(&format!("phone@{o}")), &e.pad_code()[..62]);
            assert!(v.field(&format!("features@{o}")).iter().all(|&x| x == 0.0));
        }
        assert_ne!(v.field("phone@0"), &e.pad_code()[..62]);
    }

    #[test]
    fn position_fraction_matches_alignment() {
        let e = encoder();
        let s = segs(&["s", "aa", "s"], 1600);
        let syntax = SyntacticAnnotation::default();
        let ue = e.prepare(&s, &syntax).unwrap();
        // segment 1 covers frames 10..20; its middle frame is 15
        let v = ue.frame(15).unwrap();
        let pos = v.field("position")[0];
        assert!((pos - 0.5).abs() <= 0.1 + 1e-12, "{pos}");
        assert_eq!(pos, ue.labels()[15].position);
        assert_eq!(bar_value(v.field("duration")), 4);
    }

    #[test]
    fn locality_of_frame_encodings() {
        let e = encoder();
        let phones = PhoneSet::timit();
        let u = &generate_synthetic_corpus(17, 1, &Rulebook::default())[0];
        let before = e.prepare(&u.segments, &u.syntax).unwrap();
        for edit in 0..u.segments.len() {
            let mut s2 = u.segments.clone();
            s2[edit].phone = if phones.name(s2[edit].phone) == "zh" {
                phones.get("sh").unwrap()
            } else {
                phones.get("zh").unwrap()
            };
            let after = e.prepare(&s2, &u.syntax).unwrap();
            for t in 0..before.n_frames() {
                let c = t * 160 + 80;
                let seg = &s2[edit];
                let gap = if c < seg.start { seg.start - c } else { c.saturating_sub(seg.end - 1) };
                if gap > 2400 {
                    assert_eq!(before.frame(t).unwrap(), after.frame(t).unwrap(), "edit {edit} frame {t}");
                }
            }
        }
    }

    #[test]
    fn translation_by_one_frame() {
        let e = encoder();
        let u = &generate_synthetic_corpus(5, 1, &Rulebook::default())[0];
        let shift = |x: usize| x + 160;
        let mut s2 = u.segments.clone();
        for (i, s) in s2.iter_mut().enumerate() {
            if i > 0 {
                s.start = shift(s.start);
            }
            s.end = shift(s.end);
        }
        let mut y2 = u.syntax.clone();
        let sh = |sp: &mut Span| *sp = Span::new(shift(sp.start), shift(sp.end));
        y2.syllables.iter_mut().for_each(|s| sh(&mut s.span));
        y2.words.iter_mut().for_each(|w| sh(&mut w.span));
        y2.phrases.iter_mut().for_each(sh);
        y2.clauses.iter_mut().for_each(sh);
        y2.sentences.iter_mut().for_each(sh);
        y2.tobi.iter_mut().for_each(|m| m.position = shift(m.position));
        let a = e.prepare(&u.segments, &u.syntax).unwrap();
        let b = e.prepare(&s2, &y2).unwrap();
        assert_eq!(b.n_frames(), a.n_frames() + 1);
        let first_end = u.segments[0].end / 160;
        for t in first_end + 15..a.n_frames() - 15 {
            assert_eq!(a.frame(t).unwrap().values, b.frame(t + 1).unwrap().values, "frame {t}");
        }
    }

    proptest! {
        #[test]
        fn encodings_match_their_layouts(seed in 0u64..1000) {
            let e = encoder();
            let u = &generate_synthetic_corpus(seed, 1, &Rulebook::default())[0];
            let ue = e.prepare(&u.segments, &u.syntax).unwrap();
            for i in 0..ue.n_segments() {
                let v = ue.segment(i).unwrap();
                prop_assert!(v.check().is_ok(), "{:?}", v.check());
            }
            for t in (0..ue.n_frames()).step_by(3) {
                let v = ue.frame(t).unwrap();
                prop_assert!(v.check().is_ok(), "{:?}", v.check());
            }
        }
    }
}
