use std::fmt::Write;

use super::{validate_segments, CorpusError, PhoneSegment, PhoneSet};

/// Parses TIMIT-style `.phn` content: one `start end label` line per segment,
/// sample units. Blank lines are ignored.
pub fn parse_phone_labels(text: &str, phones: &PhoneSet) -> Result<Vec<PhoneSegment>, CorpusError> {
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut fields = raw.split_whitespace();
        let Some(first) = fields.next() else { continue };
        let (Some(second), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(CorpusError::Parse {
                line,
                message: format!("expected `start end label`, got `{}`", raw.trim()),
            });
        };
        let start = parse_index(first, line)?;
        let end = parse_index(second, line)?;
        let phone = phones.label(label).ok_or_else(|| CorpusError::UnknownPhone {
            line,
            label: label.to_string(),
        })?;
        segments.push(PhoneSegment { start, end, phone });
    }
    validate_segments(&segments, phones).map_err(|e| match e {
        // validation counts segments, remap to file lines
        CorpusError::Structure { line, message } => CorpusError::Structure {
            line: line_of_segment(text, line),
            message,
        },
        other => other,
    })?;
    Ok(segments)
}

fn line_of_segment(text: &str, nth: usize) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .nth(nth.saturating_sub(1))
        .map_or(nth, |(i, _)| i + 1)
}

fn parse_index(field: &str, line: usize) -> Result<usize, CorpusError> {
    field.parse().map_err(|_| CorpusError::Parse {
        line,
        message: format!("`{field}` is not a sample index"),
    })
}

/// Serializes segments in the `.phn` format read by [`parse_phone_labels`].
pub fn write_phone_labels(segments: &[PhoneSegment], phones: &PhoneSet) -> String {
    let mut out = String::new();
    for seg in segments {
        let _ = writeln!(out, "{} {} {}", seg.start, seg.end, phones.name(seg.phone));
    }
    out
}
