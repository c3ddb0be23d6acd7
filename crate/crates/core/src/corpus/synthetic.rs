//! Seeded synthetic corpora with known duration and spectral rules.
//!
//! Every phone has a fixed parameter frame and every segment lasts a whole
//! number of frames fixed by its class, so a model trained on the corpus can be
//! checked against the rules that generated it.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    PhoneSegment, PhoneSet, Span, Stress, Syllable, SyntacticAnnotation, TobiMark, Utterance, Word, WordClass,
    MAX_WORD_LEVEL,
};
use crate::vocoder::{lpc_to_lsf, synthesize_i16, AcousticFrame, LpcModel, VocoderConfig};

/// Spectral rule for one phone.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneRule {
    pub phone: String,
    pub vowel: bool,
    pub voiced: bool,
    /// Resonances `(frequency Hz, bandwidth Hz)` of the phone's filter.
    pub formants: Vec<(f64, f64)>,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rulebook {
    pub consonants: Vec<PhoneRule>,
    pub vowels: Vec<PhoneRule>,
    /// Phone used before and after every sentence.
    pub silence: String,
    pub consonant_frames: usize,
    /// Vowels last exactly this many times as long as consonants.
    pub vowel_ratio: usize,
    pub silence_frames: usize,
    pub f0: f64,
    pub words: (usize, usize),
    pub syllables_per_word: (usize, usize),
}

fn rule(phone: &str, vowel: bool, voiced: bool, f: &[(f64, f64)], power_db: f64) -> PhoneRule {
    PhoneRule {
        phone: phone.to_string(),
        vowel,
        voiced,
        formants: f.to_vec(),
        power_db,
    }
}

impl Default for Rulebook {
    fn default() -> Self {
        // upper resonances shared by every phone
        let hi = [(3500.0, 200.0), (4500.0, 250.0)];
        let with_hi = |f: &[(f64, f64)]| -> Vec<(f64, f64)> { f.iter().chain(&hi).copied().collect() };
        Rulebook {
            consonants: vec![
                rule("s", false, false, &with_hi(&[(300.0, 300.0), (1700.0, 300.0), (2600.0, 200.0)]), -32.0),
                rule("sh", false, false, &with_hi(&[(400.0, 300.0), (1600.0, 250.0), (2500.0, 200.0)]), -30.0),
                rule("f", false, false, &with_hi(&[(350.0, 400.0), (1400.0, 400.0), (2400.0, 300.0)]), -36.0),
                rule("m", false, true, &with_hi(&[(250.0, 60.0), (1100.0, 150.0), (2300.0, 200.0)]), -26.0),
                rule("n", false, true, &with_hi(&[(280.0, 60.0), (1500.0, 150.0), (2500.0, 200.0)]), -26.0),
                rule("l", false, true, &with_hi(&[(360.0, 80.0), (1000.0, 120.0), (2700.0, 200.0)]), -24.0),
            ],
            vowels: vec![
                rule("aa", true, true, &with_hi(&[(730.0, 80.0), (1090.0, 90.0), (2440.0, 120.0)]), -18.0),
                rule("iy", true, true, &with_hi(&[(270.0, 60.0), (2290.0, 100.0), (3010.0, 150.0)]), -20.0),
                rule("uw", true, true, &with_hi(&[(300.0, 60.0), (870.0, 80.0), (2240.0, 120.0)]), -20.0),
                rule("eh", true, true, &with_hi(&[(530.0, 70.0), (1840.0, 100.0), (2480.0, 120.0)]), -18.0),
                rule("ae", true, true, &with_hi(&[(660.0, 80.0), (1720.0, 100.0), (2410.0, 120.0)]), -17.0),
            ],
            silence: "h#".to_string(),
            consonant_frames: 6,
            vowel_ratio: 2,
            silence_frames: 10,
            f0: 120.0,
            words: (2, 5),
            syllables_per_word: (1, 3),
        }
    }
}

impl Rulebook {
    /// Frames a segment of `phone` lasts.
    pub fn frames_for(&self, phone: &str) -> usize {
        if phone == self.silence {
            self.silence_frames
        } else if self.vowels.iter().any(|r| r.phone == phone) {
            self.consonant_frames * self.vowel_ratio
        } else {
            self.consonant_frames
        }
    }

    pub fn rule(&self, phone: &str) -> Option<&PhoneRule> {
        self.consonants.iter().chain(&self.vowels).find(|r| r.phone == phone)
    }

    /// The fixed parameter frame of `phone`. Silence and unknown phones get a
    /// quiet unvoiced flat frame.
    pub fn frame_for(&self, phone: &str, cfg: &VocoderConfig) -> AcousticFrame {
        let Some(rule) = self.rule(phone) else {
            let mut f = AcousticFrame::silent(cfg);
            f.power_db = -100.0;
            return f;
        };
        let sr = cfg.sample_rate as f64;
        let mut poly = vec![1.0];
        for &(f, bw) in &rule.formants {
            let r = (-PI * bw / sr).exp();
            let th = 2.0 * PI * f / sr;
            let quad = [1.0, -2.0 * r * th.cos(), r * r];
            let mut next = vec![0.0; poly.len() + 2];
            for (i, a) in poly.iter().enumerate() {
                for (j, b) in quad.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            poly = next;
        }
        poly.resize(cfg.order + 1, 0.0);
        let model = LpcModel {
            coefficients: poly[1..=cfg.order].iter().map(|c| -c).collect(),
            gain: 1.0,
        };
        let lsf = lpc_to_lsf(&model).expect("rulebook formants form a stable filter");
        AcousticFrame {
            lsf,
            f0: if rule.voiced { self.f0 } else { cfg.clamp_f0 },
            power_db: rule.power_db,
            voicing_boundary: if rule.voiced { cfg.nyquist() } else { 0.0 },
            voiced: rule.voiced,
        }
    }

    /// Parameter track the generator renders for a labelled utterance.
    pub fn frames(&self, segments: &[PhoneSegment], phones: &PhoneSet, cfg: &VocoderConfig) -> Vec<AcousticFrame> {
        crate::corpus::align_frames(segments, cfg.hop)
            .iter()
            .map(|l| self.frame_for(phones.name(l.phone), cfg))
            .collect()
    }
}

/// Generates `n_utterances` labelled utterances, deterministic in `seed`.
pub fn generate_synthetic_corpus(seed: u64, n_utterances: usize, rulebook: &Rulebook) -> Vec<Utterance> {
    let phones = PhoneSet::timit();
    let cfg = VocoderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_utterances)
        .map(|index| {
            let mut segments = Vec::new();
            let mut syntax = SyntacticAnnotation::default();
            let mut pos = 0;
            let push = |segments: &mut Vec<PhoneSegment>, pos: &mut usize, name: &str| {
                let len = rulebook.frames_for(name) * cfg.hop;
                let phone = phones.label(name).expect("rulebook phone in the TIMIT inventory");
                segments.push(PhoneSegment { start: *pos, end: *pos + len, phone });
                *pos += len;
            };
            push(&mut segments, &mut pos, &rulebook.silence);
            let sentence_start = pos;
            let n_words = rng.gen_range(rulebook.words.0..=rulebook.words.1);
            let mut phrase_start = pos;
            for w in 0..n_words {
                let word_start = pos;
                let class = if rng.gen_bool(0.6) { WordClass::Content } else { WordClass::Function };
                let n_syl = rng.gen_range(rulebook.syllables_per_word.0..=rulebook.syllables_per_word.1);
                let stressed = rng.gen_range(0..n_syl);
                for s in 0..n_syl {
                    let syl_start = pos;
                    let onset = rulebook.consonants.choose(&mut rng).unwrap().phone.clone();
                    let nucleus = rulebook.vowels.choose(&mut rng).unwrap().phone.clone();
                    push(&mut segments, &mut pos, &onset);
                    push(&mut segments, &mut pos, &nucleus);
                    if rng.gen_bool(0.4) {
                        let coda = rulebook.consonants.choose(&mut rng).unwrap().phone.clone();
                        push(&mut segments, &mut pos, &coda);
                    }
                    let stress = match (class, s == stressed) {
                        (WordClass::Content, true) => Stress::Primary,
                        (_, false) if rng.gen_bool(0.2) => Stress::Secondary,
                        _ => Stress::None,
                    };
                    if stress == Stress::Primary && rng.gen_bool(0.5) {
                        syntax.tobi.push(TobiMark { position: syl_start, label: "H*".into() });
                    }
                    syntax.syllables.push(Syllable { span: Span::new(syl_start, pos), stress });
                }
                syntax.words.push(Word {
                    span: Span::new(word_start, pos),
                    class,
                    level: rng.gen_range(0..=MAX_WORD_LEVEL),
                });
                if w + 1 == n_words || rng.gen_bool(0.35) {
                    syntax.phrases.push(Span::new(phrase_start, pos));
                    phrase_start = pos;
                }
            }
            syntax.clauses.push(Span::new(sentence_start, pos));
            syntax.sentences.push(Span::new(sentence_start, pos));
            syntax.tobi.push(TobiMark { position: pos, label: "L%".into() });
            push(&mut segments, &mut pos, &rulebook.silence);

            let mut vcfg = cfg.clone();
            vcfg.noise_seed = seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
            let frames = rulebook.frames(&segments, phones, &vcfg);
            let samples = synthesize_i16(&frames, &vcfg).expect("rulebook frames satisfy the frame invariants");
            Utterance {
                name: format!("synth{index:04}"),
                sample_rate: cfg.sample_rate,
                samples,
                segments,
                syntax,
            }
        })
        .collect()
}
