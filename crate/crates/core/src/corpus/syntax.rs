use std::fmt::Write;

use super::{CorpusError, Span, Stress, Syllable, SyntacticAnnotation, TobiMark, Word, WordClass, MAX_WORD_LEVEL};

/// Source line of every record, parallel to the annotation's lists.
#[derive(Default)]
struct Lines {
    syllables: Vec<usize>,
    words: Vec<usize>,
    phrases: Vec<usize>,
    clauses: Vec<usize>,
    sentences: Vec<usize>,
    tobi: Vec<usize>,
}

/// Parses the line-based syntax format:
///
/// ```text
/// SYL start end stress=0|1|2
/// WRD start end class=function|content level=N
/// PHR start end
/// CLS start end
/// SEN start end
/// TOBI position LABEL
/// ```
///
/// `utterance_len` is the sample count every span must fit within.
pub fn parse_syntax_labels(text: &str, utterance_len: usize) -> Result<SyntacticAnnotation, CorpusError> {
    let mut ann = SyntacticAnnotation::default();
    let mut lines = Lines::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some(&tag) = fields.first() else { continue };
        let parse_err = |message: String| CorpusError::Parse { line, message };
        match tag {
            "TOBI" => {
                let [_, pos, label] = fields[..] else {
                    return Err(parse_err(format!("expected `TOBI position LABEL`, got `{}`", raw.trim())));
                };
                ann.tobi.push(TobiMark {
                    position: parse_num(pos, line)?,
                    label: label.to_string(),
                });
                lines.tobi.push(line);
            }
            "SYL" | "WRD" | "PHR" | "CLS" | "SEN" => {
                if fields.len() < 3 {
                    return Err(parse_err(format!("`{tag}` record needs start and end")));
                }
                let span = Span::new(parse_num(fields[1], line)?, parse_num(fields[2], line)?);
                let attrs = &fields[3..];
                match tag {
                    "SYL" => {
                        let code: u8 = parse_num(attr(attrs, "stress", line)?, line)?;
                        let stress = Stress::from_code(code).ok_or_else(|| CorpusError::Structure {
                            line,
                            message: format!("unknown stress code {code}"),
                        })?;
                        ann.syllables.push(Syllable { span, stress });
                        lines.syllables.push(line);
                    }
                    "WRD" => {
                        let class = match attr(attrs, "class", line)? {
                            "function" => WordClass::Function,
                            "content" => WordClass::Content,
                            other => return Err(parse_err(format!("unknown word class `{other}`"))),
                        };
                        let level: u8 = parse_num(attr(attrs, "level", line)?, line)?;
                        if level > MAX_WORD_LEVEL {
                            return Err(CorpusError::Structure {
                                line,
                                message: format!("word level {level} exceeds {MAX_WORD_LEVEL}"),
                            });
                        }
                        ann.words.push(Word { span, class, level });
                        lines.words.push(line);
                    }
                    _ => {
                        if !attrs.is_empty() {
                            return Err(parse_err(format!("unexpected attributes on `{tag}`")));
                        }
                        let (list, l) = match tag {
                            "PHR" => (&mut ann.phrases, &mut lines.phrases),
                            "CLS" => (&mut ann.clauses, &mut lines.clauses),
                            _ => (&mut ann.sentences, &mut lines.sentences),
                        };
                        list.push(span);
                        l.push(line);
                    }
                }
            }
            other => return Err(parse_err(format!("unknown record type `{other}`"))),
        }
    }
    validate(&ann, utterance_len, &lines)?;
    Ok(ann)
}

fn attr<'a>(attrs: &[&'a str], key: &str, line: usize) -> Result<&'a str, CorpusError> {
    attrs
        .iter()
        .find_map(|a| a.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| CorpusError::Parse {
            line,
            message: format!("missing `{key}=` attribute"),
        })
}

fn parse_num<T: std::str::FromStr>(field: &str, line: usize) -> Result<T, CorpusError> {
    field.parse().map_err(|_| CorpusError::Parse {
        line,
        message: format!("`{field}` is not a number"),
    })
}

/// Checks the annotation invariants without source line information.
pub(crate) fn validate_annotation(ann: &SyntacticAnnotation, utterance_len: usize) -> Result<(), CorpusError> {
    validate(ann, utterance_len, &Lines::default())
}

fn validate(ann: &SyntacticAnnotation, utterance_len: usize, lines: &Lines) -> Result<(), CorpusError> {
    let at = |v: &Vec<usize>, i: usize| v.get(i).copied().unwrap_or(0);
    let check_span = |span: &Span, line: usize, what: &str| {
        if span.start >= span.end || span.end > utterance_len {
            Err(CorpusError::Structure {
                line,
                message: format!(
                    "{what} span {}..{} is empty or outside the utterance (0..{utterance_len})",
                    span.start, span.end
                ),
            })
        } else {
            Ok(())
        }
    };
    for (i, s) in ann.syllables.iter().enumerate() {
        check_span(&s.span, at(&lines.syllables, i), "syllable")?;
    }
    for (i, w) in ann.words.iter().enumerate() {
        check_span(&w.span, at(&lines.words, i), "word")?;
    }
    for (list, l, what) in [
        (&ann.phrases, &lines.phrases, "phrase"),
        (&ann.clauses, &lines.clauses, "clause"),
        (&ann.sentences, &lines.sentences, "sentence"),
    ] {
        for (i, s) in list.iter().enumerate() {
            check_span(s, at(l, i), what)?;
        }
    }
    for (i, t) in ann.tobi.iter().enumerate() {
        if t.position > utterance_len {
            return Err(CorpusError::Structure {
                line: at(&lines.tobi, i),
                message: format!("ToBI mark at {} is outside the utterance", t.position),
            });
        }
    }
    for (i, s) in ann.syllables.iter().enumerate() {
        let owners = ann.words.iter().filter(|w| w.span.encloses(&s.span)).count();
        if owners != 1 {
            return Err(CorpusError::Structure {
                line: at(&lines.syllables, i),
                message: format!(
                    "syllable {}..{} lies within {owners} word spans, expected exactly one",
                    s.span.start, s.span.end
                ),
            });
        }
    }
    for (i, w) in ann.words.iter().enumerate() {
        let owners = ann.sentences.iter().filter(|s| s.encloses(&w.span)).count();
        if owners != 1 {
            return Err(CorpusError::Structure {
                line: at(&lines.words, i),
                message: format!(
                    "word {}..{} lies within {owners} sentence spans, expected exactly one",
                    w.span.start, w.span.end
                ),
            });
        }
    }
    Ok(())
}

/// Serializes an annotation in the format read by [`parse_syntax_labels`].
pub fn write_syntax_labels(ann: &SyntacticAnnotation) -> String {
    let mut out = String::new();
    for s in &ann.syllables {
        let _ = writeln!(out, "SYL {} {} stress={}", s.span.start, s.span.end, s.stress.code());
    }
    for w in &ann.words {
        let class = match w.class {
            WordClass::Function => "function",
            WordClass::Content => "content",
        };
        let _ = writeln!(out, "WRD {} {} class={class} level={}", w.span.start, w.span.end, w.level);
    }
    for (tag, list) in [("PHR", &ann.phrases), ("CLS", &ann.clauses), ("SEN", &ann.sentences)] {
        for s in list {
            let _ = writeln!(out, "{tag} {} {}", s.start, s.end);
        }
    }
    for t in &ann.tobi {
        let _ = writeln!(out, "TOBI {} {}", t.position, t.label);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "SYL 0 3200 stress=1\nWRD 0 3200 class=content level=3\nSEN 0 3200\n";

    #[test]
    fn single_nesting() {
        let ann = parse_syntax_labels(BASIC, 3200).unwrap();
        assert_eq!(ann.syllables, vec![Syllable { span: Span::new(0, 3200), stress: Stress::Primary }]);
        assert_eq!(ann.words, vec![Word { span: Span::new(0, 3200), class: WordClass::Content, level: 3 }]);
        assert_eq!(ann.sentences, vec![Span::new(0, 3200)]);
    }

    #[test]
    fn syllable_crossing_word_is_rejected() {
        let text = "SYL 0 5000 stress=0\nWRD 0 3200 class=content level=3\nSEN 0 5000\n";
        let err = parse_syntax_labels(text, 5000).unwrap_err();
        assert!(matches!(err, CorpusError::Structure { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn tobi_passes_through() {
        let ann = parse_syntax_labels(&format!("{BASIC}TOBI 1500 H*\n"), 3200).unwrap();
        assert_eq!(ann.tobi, vec![TobiMark { position: 1500, label: "H*".into() }]);
    }

    #[test]
    fn structural_errors() {
        // outside the utterance
        assert!(matches!(parse_syntax_labels(BASIC, 3000), Err(CorpusError::Structure { .. })));
        // unknown stress code
        assert!(matches!(
            parse_syntax_labels("SYL 0 10 stress=7\n", 10),
            Err(CorpusError::Structure { line: 1, .. })
        ));
        // word outside any sentence
        assert!(matches!(
            parse_syntax_labels("WRD 0 10 class=function level=0\n", 10),
            Err(CorpusError::Structure { line: 1, .. })
        ));
        assert!(matches!(parse_syntax_labels("FOO 1 2\n", 10), Err(CorpusError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_syntax_labels("WRD 0 10 class=noun level=1\nSEN 0 10\n", 10),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn writer_round_trips() {
        let text = format!("{BASIC}PHR 0 3200\nCLS 0 3200\nTOBI 1500 H*\n");
        let ann = parse_syntax_labels(&text, 3200).unwrap();
        assert_eq!(parse_syntax_labels(&write_syntax_labels(&ann), 3200).unwrap(), ann);
    }
}
