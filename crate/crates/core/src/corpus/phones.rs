use std::collections::HashMap;
use std::fmt;

use std::sync::LazyLock;

/// The checked-in articulatory feature table. Its first column doubles as the
/// phone inventory.
pub const TIMIT_FEATURE_TABLE: &str = include_str!("../../data/phone_features.tsv");

/// Reserved label used beyond utterance edges. Never appears in label files.
pub const PAD_LABEL: &str = "<pad>";

/// Index of a phone in a [`PhoneSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phone(pub u16);

impl Phone {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Phone inventory: the labelled phones followed by the reserved padding entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneSet {
    names: Vec<String>,
    lookup: HashMap<String, Phone>,
}

impl PhoneSet {
    /// Builds an inventory from label names. The padding entry is appended.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all: Vec<String> = names.into_iter().map(Into::into).collect();
        all.retain(|n| n != PAD_LABEL);
        all.push(PAD_LABEL.to_string());
        let lookup = all
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), Phone(i as u16)))
            .collect();
        PhoneSet { names: all, lookup }
    }

    /// The 61-phone TIMIT inventory plus padding.
    pub fn timit() -> &'static PhoneSet {
        static SET: LazyLock<PhoneSet> = LazyLock::new(|| {
            PhoneSet::new(
                TIMIT_FEATURE_TABLE
                    .lines()
                    .skip(1)
                    .filter_map(|l| l.split('\t').next())
                    .filter(|n| !n.is_empty()),
            )
        });
        &SET
    }

    /// Number of entries including padding.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<Phone> {
        self.lookup.get(name).copied()
    }

    /// Looks up a label that may appear in a label file (padding excluded).
    pub fn label(&self, name: &str) -> Option<Phone> {
        self.get(name).filter(|&p| p != self.pad())
    }

    pub fn name(&self, phone: Phone) -> &str {
        &self.names[phone.index()]
    }

    pub fn pad(&self) -> Phone {
        Phone((self.names.len() - 1) as u16)
    }

    /// Every phone, padding last.
    pub fn phones(&self) -> impl Iterator<Item = Phone> + '_ {
        (0..self.names.len()).map(|i| Phone(i as u16))
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timit_inventory_has_61_phones_and_pad() {
        let set = PhoneSet::timit();
        assert_eq!(set.len(), 62);
        assert_eq!(set.name(set.pad()), PAD_LABEL);
        assert!(set.label("h#").is_some());
        assert!(set.label("sh").is_some());
        assert!(set.label(PAD_LABEL).is_none());
        assert!(set.get("xx").is_none());
    }
}
