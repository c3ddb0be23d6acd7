//! Numeric input codes for the two networks.
//!
//! Categorical values become 1-out-of-n codes, small integers become bar
//! (thermometer) codes, and phones expand to their id code followed by a row of
//! the articulatory feature table. Every vector is described by a [`Layout`]
//! naming its fields and their widths.

mod encoder;
mod table;
mod taps;

use std::ops::Range;
use std::sync::Arc;

pub use encoder::{EncodingConfig, Encoder, FrameGroups, UtteranceEncoding, FRAME_UNITS};
pub use table::FeatureTable;
pub use taps::{default_tap_schedule, TapSchedule};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("{what} {value} out of range 0..{limit}")]
    OutOfRange { what: &'static str, value: usize, limit: usize },
    #[error("unknown phone `{0}`")]
    UnknownPhone(String),
    #[error("feature table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("invalid tap schedule: {0}")]
    Taps(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("vector has {got} values, layout declares {expected}")]
    Width { expected: usize, got: usize },
}

/// How the values of a field are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Exactly one 1.0, the rest 0.0.
    OneOfN,
    /// `1...1 0...0`.
    Bar,
    /// Each value 0.0 or 1.0.
    Binary,
    /// Each value in `[0, 1]`.
    Real,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub kind: FieldKind,
    pub offset: usize,
    pub width: usize,
}

impl Field {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.width
    }
}

/// Ordered named fields of a vector.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layout {
    fields: Vec<Field>,
    width: usize,
}

impl Layout {
    pub fn push(&mut self, name: impl Into<String>, kind: FieldKind, width: usize) -> &mut Self {
        self.fields.push(Field {
            name: name.into(),
            kind,
            offset: self.width,
            width,
        });
        self.width += width;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn range(&self, name: &str) -> Option<Range<usize>> {
        self.field(name).map(Field::range)
    }

    /// Checks the width and the per-field value patterns of `values`.
    pub fn check(&self, values: &[f64]) -> Result<(), EncodingError> {
        if values.len() != self.width {
            return Err(EncodingError::Width {
                expected: self.width,
                got: values.len(),
            });
        }
        for f in &self.fields {
            let v = &values[f.range()];
            let bad = |message: &str| {
                Err(EncodingError::Field {
                    field: f.name.clone(),
                    message: message.to_string(),
                })
            };
            let binary = v.iter().all(|&x| x == 0.0 || x == 1.0);
            match f.kind {
                FieldKind::OneOfN => {
                    if !binary || v.iter().filter(|&&x| x == 1.0).count() != 1 {
                        return bad("not a 1-out-of-n code");
                    }
                }
                FieldKind::Bar => {
                    let ones = v.iter().take_while(|&&x| x == 1.0).count();
                    if v[ones..].iter().any(|&x| x != 0.0) {
                        return bad("not a bar code");
                    }
                }
                FieldKind::Binary => {
                    if !binary {
                        return bad("non-binary value");
                    }
                }
                FieldKind::Real => {
                    if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                        return bad("value outside [0, 1]");
                    }
                }
            }
        }
        Ok(())
    }
}

/// An encoded vector together with the layout that names its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Arc<Layout>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values of the named field. Panics on an unknown name.
    pub fn field(&self, name: &str) -> &[f64] {
        let r = self
            .layout
            .range(name)
            .unwrap_or_else(|| panic!("no field `{name}` in layout"));
        &self.values[r]
    }

    pub fn check(&self) -> Result<(), EncodingError> {
        self.layout.check(&self.values)
    }
}

pub fn one_of_n(index: usize, n: usize) -> Result<Vec<f64>, EncodingError> {
    if index >= n {
        return Err(EncodingError::OutOfRange {
            what: "index",
            value: index,
            limit: n,
        });
    }
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    Ok(v)
}

/// Thermometer code of width `max_value`: `value` ones then zeros.
pub fn bar_code(value: usize, max_value: usize) -> Result<Vec<f64>, EncodingError> {
    if value > max_value {
        return Err(EncodingError::OutOfRange {
            what: "bar value",
            value,
            limit: max_value + 1,
        });
    }
    let mut v = vec![0.0; max_value];
    v[..value].fill(1.0);
    Ok(v)
}
