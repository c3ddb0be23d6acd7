use std::path::{Path, PathBuf};

use super::{read_wav, write_wav, PipelineError};
use crate::corpus::{
    parse_phone_labels, parse_syntax_labels, write_phone_labels, write_syntax_labels, PhoneSegment, PhoneSet,
    SyntacticAnnotation, Utterance,
};
use crate::vocoder::{analyze_i16, AcousticFrame, VocoderConfig};

fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

/// Reads `NAME.phn` and, when present, `NAME.syn` beside it. Syntax positions
/// may not run past `len` samples (the labelled length when `None`).
pub fn load_labels(
    phn: &Path,
    phones: &PhoneSet,
    len: Option<usize>,
) -> Result<(Vec<PhoneSegment>, SyntacticAnnotation), PipelineError> {
    let at = |e: &dyn std::fmt::Display, p: &Path| PipelineError::Labels(format!("{}: {e}", p.display()));
    let segments = parse_phone_labels(&read_text(phn)?, phones).map_err(|e| at(&e, phn))?;
    if segments.is_empty() {
        return Err(PipelineError::Labels(format!("{}: no segments", phn.display())));
    }
    let syn = phn.with_extension("syn");
    let syntax = if syn.exists() {
        let len = len.unwrap_or(segments.last().map_or(0, |s| s.end));
        parse_syntax_labels(&read_text(&syn)?, len).map_err(|e| at(&e, &syn))?
    } else {
        SyntacticAnnotation::default()
    };
    Ok((segments, syntax))
}

/// Writes `NAME.wav`, `NAME.phn` and `NAME.syn` into `dir`.
pub fn write_utterance(dir: &Path, utt: &Utterance, phones: &PhoneSet) -> Result<(), PipelineError> {
    let base = dir.join(&utt.name);
    write_wav(&base.with_extension("wav"), &utt.samples, utt.sample_rate)?;
    let phn = base.with_extension("phn");
    std::fs::write(&phn, write_phone_labels(&utt.segments, phones)).map_err(|e| PipelineError::io(&phn, e))?;
    let syn = base.with_extension("syn");
    std::fs::write(&syn, write_syntax_labels(&utt.syntax)).map_err(|e| PipelineError::io(&syn, e))
}

fn load_one(wav: &Path, sample_rate: u32, phones: &PhoneSet) -> Result<Utterance, String> {
    let samples = read_wav(wav, sample_rate).map_err(|e| e.to_string())?;
    let phn = wav.with_extension("phn");
    if !phn.exists() {
        return Err(format!("missing {}", phn.display()));
    }
    let (segments, syntax) = load_labels(&phn, phones, Some(samples.len())).map_err(|e| e.to_string())?;
    let utt = Utterance {
        name: wav.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
        sample_rate,
        samples,
        segments,
        syntax,
    };
    utt.validate(phones).map_err(|e| format!("{}: {e}", wav.display()))?;
    Ok(utt)
}

/// Every `NAME.wav` with its labels, in name order. All broken files are
/// reported together.
pub fn load_corpus(dir: &Path, sample_rate: u32, phones: &PhoneSet) -> Result<Vec<Utterance>, PipelineError> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut wavs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "wav"))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(PipelineError::Corpus(vec![format!("{}: no .wav files", dir.display())]));
    }
    let mut utts = Vec::with_capacity(wavs.len());
    let mut errors = Vec::new();
    for w in &wavs {
        match load_one(w, sample_rate, phones) {
            Ok(u) => utts.push(u),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(utts)
    } else {
        Err(PipelineError::Corpus(errors))
    }
}

/// Analyses every utterance, spreading files over the available cores.
/// Results keep corpus order.
pub fn analyze_corpus(utts: &[Utterance], cfg: &VocoderConfig) -> Result<Vec<Vec<AcousticFrame>>, PipelineError> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(utts.len().max(1));
    let chunk = utts.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<AcousticFrame>, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = utts
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|u| analyze_i16(&u.samples, cfg).map_err(|e| format!("{}: {e}", u.name)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("analysis thread")).collect()
    });
    let errors: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    if !errors.is_empty() {
        return Err(PipelineError::Corpus(errors));
    }
    Ok(results.into_iter().map(Result::unwrap).collect())
}
