//! Labelled speech: phone segments, syntactic and prosodic marks, waveforms.
//!
//! Label files follow the TIMIT `.phn` convention (sample-indexed
//! `start end label` lines). Syntax files use a line format of the same
//! flavour, see [`parse_syntax_labels`].

mod align;
mod labels;
mod phones;
mod power;
mod syntax;
mod synthetic;

pub use align::{align_frames, FrameLabel};
pub use labels::{parse_phone_labels, write_phone_labels};
pub use phones::{Phone, PhoneSet, PAD_LABEL, TIMIT_FEATURE_TABLE};
pub use power::{frame_powers, normalize_power, normalize_power_i16, DEFAULT_SILENCE_THRESHOLD_DB};
pub use syntax::{parse_syntax_labels, write_syntax_labels};
pub use synthetic::{generate_synthetic_corpus, PhoneRule, Rulebook};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
    #[error("line {line}: unknown phone label `{label}`")]
    UnknownPhone { line: usize, label: String },
}

/// Half-open sample range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.start <= pos && pos < self.end
    }

    pub fn encloses(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// One labelled phonetic interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhoneSegment {
    pub start: usize,
    pub end: usize,
    pub phone: Phone,
}

impl PhoneSegment {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Midpoint sample, used to decide which syntactic unit owns the segment.
    pub fn midpoint(&self) -> usize {
        self.start + (self.end - self.start) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stress {
    #[default]
    None,
    Primary,
    Secondary,
}

impl Stress {
    /// Code used in syntax files: 0 none, 1 primary, 2 secondary.
    pub fn code(self) -> u8 {
        match self {
            Stress::None => 0,
            Stress::Primary => 1,
            Stress::Secondary => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Stress::None),
            1 => Some(Stress::Primary),
            2 => Some(Stress::Secondary),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass {
    Function,
    Content,
}

/// Largest word level; levels are bar coded with this many positions.
pub const MAX_WORD_LEVEL: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Syllable {
    pub span: Span,
    pub stress: Stress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Word {
    pub span: Span,
    pub class: WordClass,
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TobiMark {
    pub position: usize,
    pub label: String,
}

/// Syntactic and prosodic marks for one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SyntacticAnnotation {
    pub syllables: Vec<Syllable>,
    pub words: Vec<Word>,
    pub phrases: Vec<Span>,
    pub clauses: Vec<Span>,
    pub sentences: Vec<Span>,
    pub tobi: Vec<TobiMark>,
}

/// The unit kinds whose boundaries feed the encoders, finest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Syllable,
    Word,
    Phrase,
    Clause,
    Sentence,
}

impl UnitKind {
    pub const ALL: [UnitKind; 5] = [
        UnitKind::Syllable,
        UnitKind::Word,
        UnitKind::Phrase,
        UnitKind::Clause,
        UnitKind::Sentence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnitKind::Syllable => "syllable",
            UnitKind::Word => "word",
            UnitKind::Phrase => "phrase",
            UnitKind::Clause => "clause",
            UnitKind::Sentence => "sentence",
        }
    }
}

impl SyntacticAnnotation {
    pub fn spans(&self, kind: UnitKind) -> Vec<Span> {
        match kind {
            UnitKind::Syllable => self.syllables.iter().map(|s| s.span).collect(),
            UnitKind::Word => self.words.iter().map(|w| w.span).collect(),
            UnitKind::Phrase => self.phrases.clone(),
            UnitKind::Clause => self.clauses.clone(),
            UnitKind::Sentence => self.sentences.clone(),
        }
    }

    pub fn syllable_at(&self, pos: usize) -> Option<&Syllable> {
        self.syllables.iter().find(|s| s.span.contains(pos))
    }

    pub fn word_at(&self, pos: usize) -> Option<&Word> {
        self.words.iter().find(|w| w.span.contains(pos))
    }

    /// Sorted, deduplicated start and end positions of every unit of `kind`.
    pub fn boundaries(&self, kind: UnitKind) -> Vec<usize> {
        let mut b: Vec<usize> = self
            .spans(kind)
            .iter()
            .flat_map(|s| [s.start, s.end])
            .collect();
        b.sort_unstable();
        b.dedup();
        b
    }
}

/// A sentence recording with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub name: String,
    pub sample_rate: u32,
    pub samples: Vec<i16>,
    pub segments: Vec<PhoneSegment>,
    pub syntax: SyntacticAnnotation,
}

impl Utterance {
    /// End of the last labelled segment, zero when unlabelled.
    pub fn labelled_len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end)
    }

    /// Checks every structural invariant of the utterance and its labels.
    pub fn validate(&self, phones: &PhoneSet) -> Result<(), CorpusError> {
        validate_segments(&self.segments, phones)?;
        if self.labelled_len() > self.samples.len() {
            return Err(CorpusError::Structure {
                line: 0,
                message: format!(
                    "labels end at sample {} but audio has {} samples",
                    self.labelled_len(),
                    self.samples.len()
                ),
            });
        }
        syntax::validate_annotation(&self.syntax, self.samples.len())
    }
}

/// Sorted, gap-free, non-empty segments drawn from the inventory.
pub fn validate_segments(segments: &[PhoneSegment], phones: &PhoneSet) -> Result<(), CorpusError> {
    for (i, seg) in segments.iter().enumerate() {
        let line = i + 1;
        if seg.start >= seg.end {
            return Err(CorpusError::Structure {
                line,
                message: format!("empty segment {}..{}", seg.start, seg.end),
            });
        }
        if seg.phone.index() >= phones.len() || seg.phone == phones.pad() {
            return Err(CorpusError::UnknownPhone {
                line,
                label: seg.phone.to_string(),
            });
        }
        if i == 0 {
            if seg.start != 0 {
                return Err(CorpusError::Structure {
                    line,
                    message: format!("first segment starts at {} instead of 0", seg.start),
                });
            }
        } else {
            let prev = segments[i - 1].end;
            if seg.start != prev {
                let what = if seg.start < prev { "overlaps" } else { "leaves a gap after" };
                return Err(CorpusError::Structure {
                    line,
                    message: format!("segment starting at {} {} previous end {}", seg.start, what, prev),
                });
            }
        }
    }
    Ok(())
}
