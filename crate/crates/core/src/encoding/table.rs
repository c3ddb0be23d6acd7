use std::collections::HashMap;

use std::sync::LazyLock;

use super::EncodingError;
use crate::corpus::{Phone, PhoneSet, TIMIT_FEATURE_TABLE};

/// Articulatory feature rows keyed by phone, loaded from a tab-separated file
/// whose header names the columns. Phones absent from the file (the padding
/// entry) encode as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<String>,
    rows: HashMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn parse(text: &str) -> Result<Self, EncodingError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(EncodingError::Table { line: 1, message: "empty table".into() });
        };
        let columns: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_string()).collect();
        let mut rows = HashMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let err = |message: String| EncodingError::Table { line: line_no, message };
            let mut cells = line.split('\t');
            let phone = cells.next().unwrap_or_default().trim().to_string();
            let values: Vec<f64> = cells
                .map(|c| c.trim().parse::<f64>().map_err(|e| err(format!("`{c}`: {e}"))))
                .collect::<Result<_, _>>()?;
            if values.len() != columns.len() {
                return Err(err(format!("{} values for {} columns", values.len(), columns.len())));
            }
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(err("values must lie in [0, 1]".into()));
            }
            if rows.insert(phone.clone(), values).is_some() {
                return Err(err(format!("duplicate phone `{phone}`")));
            }
        }
        Ok(FeatureTable { columns, rows })
    }

    /// The checked-in TIMIT table.
    pub fn timit() -> &'static FeatureTable {
        static TABLE: LazyLock<FeatureTable> =
            LazyLock::new(|| FeatureTable::parse(TIMIT_FEATURE_TABLE).expect("checked-in feature table parses"));
        &TABLE
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, phone: &str) -> Option<&[f64]> {
        self.rows.get(phone).map(Vec::as_slice)
    }

    /// Feature row of an inventory phone.
    pub fn phone_features(&self, phone: Phone, phones: &PhoneSet) -> Result<Vec<f64>, EncodingError> {
        if phone.index() >= phones.len() {
            return Err(EncodingError::OutOfRange {
                what: "phone",
                value: phone.index(),
                limit: phones.len(),
            });
        }
        if phone == phones.pad() {
            return Ok(vec![0.0; self.width()]);
        }
        let name = phones.name(phone);
        self.get(name)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| EncodingError::UnknownPhone(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(name: &str) -> Vec<f64> {
        let phones = PhoneSet::timit();
        FeatureTable::timit().phone_features(phones.get(name).unwrap(), phones).unwrap()
    }

    #[test]
    fn every_labelled_phone_has_a_row() {
        let phones = PhoneSet::timit();
        let t = FeatureTable::timit();
        assert_eq!(t.width(), 31);
        for p in phones.phones() {
            assert!(t.phone_features(p, phones).is_ok(), "{}", phones.name(p));
        }
    }

    #[test]
    fn silence_row_sets_only_the_silence_flag() {
        let t = FeatureTable::timit();
        let sil = t.columns().iter().position(|c| c == "sil").unwrap();
        for name in ["h#", "pau", "epi"] {
            let f = feats(name);
            assert_eq!(f[sil], 1.0);
            assert_eq!(f.iter().sum::<f64>(), 1.0, "{name}");
        }
    }

    #[test]
    fn sh_and_zh_differ_only_in_voicing() {
        let t = FeatureTable::timit();
        let (sh, zh) = (feats("sh"), feats("zh"));
        let diff: Vec<&str> = t
            .columns()
            .iter()
            .zip(sh.iter().zip(&zh))
            .filter(|(_, (a, b))| a != b)
            .map(|(c, _)| c.as_str())
            .collect();
        assert_eq!(diff, ["voiced"]);
    }

    #[test]
    fn voiced_pairs_match_standard_charts() {
        let t = FeatureTable::timit();
        let voiced = t.columns().iter().position(|c| c == "voiced").unwrap();
        for (unv, v) in [("p", "b"), ("t", "d"), ("k", "g"), ("f", "v"), ("s", "z"), ("th", "dh"), ("ch", "jh")] {
            let (a, b) = (feats(unv), feats(v));
            assert_eq!((a[voiced], b[voiced]), (0.0, 1.0), "{unv}/{v}");
            let others = a.iter().zip(&b).enumerate().filter(|&(i, (x, y))| i != voiced && x != y).count();
            assert_eq!(others, 0, "{unv}/{v}");
        }
        for vowel in ["aa", "iy", "uw", "ax", "er"] {
            assert_eq!(feats(vowel)[voiced], 1.0);
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(FeatureTable::parse("").is_err());
        assert!(FeatureTable::parse("phone\ta\tb\nx\t1\n").is_err());
        assert!(FeatureTable::parse("phone\ta\nx\t2\n").is_err());
        assert!(FeatureTable::parse("phone\ta\nx\t1\nx\t0\n").is_err());
        assert!(matches!(
            FeatureTable::parse("phone\ta\nx\tq\n"),
            Err(EncodingError::Table { line: 2, .. })
        ));
    }
}
