//! Appearance attributes used to compose referring descriptions.
//!
//! The vocabulary has eight categories. Each category lists its allowed
//! words plus the `"null"` marker for "not annotated".

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ValidationReport, Violation};

pub const NULL_WORD: &str = "null";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttributeCategory {
    HeadwearColor,
    HeadwearStyle,
    Coat,
    Trousers,
    Shoes,
    HeldItemColor,
    HeldItemStyle,
    Transportation,
}

impl AttributeCategory {
    pub const ALL: [AttributeCategory; 8] = [
        AttributeCategory::HeadwearColor,
        AttributeCategory::HeadwearStyle,
        AttributeCategory::Coat,
        AttributeCategory::Trousers,
        AttributeCategory::Shoes,
        AttributeCategory::HeldItemColor,
        AttributeCategory::HeldItemStyle,
        AttributeCategory::Transportation,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            AttributeCategory::HeadwearColor => "headwear_color",
            AttributeCategory::HeadwearStyle => "headwear_style",
            AttributeCategory::Coat => "coat",
            AttributeCategory::Trousers => "trousers",
            AttributeCategory::Shoes => "shoes",
            AttributeCategory::HeldItemColor => "held_item_color",
            AttributeCategory::HeldItemStyle => "held_item_style",
            AttributeCategory::Transportation => "transportation",
        }
    }
}

impl fmt::Display for AttributeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for AttributeCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttributeCategory::ALL
            .into_iter()
            .find(|c| c.key() == s)
            .ok_or_else(|| format!("unknown attribute category `{s}`"))
    }
}

const COLORS: [&str; 11] =
    ["white", "black", "gray", "green", "pink", "red", "yellow", "blue", "orange", "purple", NULL_WORD];

fn colored(noun: &str) -> Vec<String> {
    COLORS.iter().map(|c| if *c == NULL_WORD { NULL_WORD.to_string() } else { format!("{c} {noun}") }).collect()
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Allowed words per category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeVocabulary {
    words: BTreeMap<AttributeCategory, Vec<String>>,
}

impl AttributeVocabulary {
    /// The 8-category, 74-word vocabulary (each category's list includes `"null"`).
    pub fn standard() -> Self {
        let mut words_by_cat = BTreeMap::new();
        words_by_cat.insert(AttributeCategory::HeadwearColor, words(&COLORS));
        words_by_cat.insert(AttributeCategory::HeadwearStyle, words(&["with cap", "with helmet", NULL_WORD]));
        words_by_cat.insert(AttributeCategory::Coat, colored("coat"));
        words_by_cat.insert(AttributeCategory::Trousers, colored("trousers"));
        words_by_cat.insert(AttributeCategory::Shoes, colored("shoes"));
        words_by_cat.insert(AttributeCategory::HeldItemColor, words(&COLORS));
        words_by_cat.insert(
            AttributeCategory::HeldItemStyle,
            words(&[
                "a bag",
                "a plastic bag",
                "a handbag",
                "a schoolbag",
                "a cart",
                "a box",
                "a child",
                "a stick",
                "a book",
                "a mobile phone",
                "a can",
                NULL_WORD,
            ]),
        );
        words_by_cat.insert(
            AttributeCategory::Transportation,
            words(&["a bicycle", "an electric bike", "a tricycle", NULL_WORD]),
        );
        AttributeVocabulary { words: words_by_cat }
    }

    pub fn words(&self, category: AttributeCategory) -> &[String] {
        self.words.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, category: AttributeCategory, word: &str) -> bool {
        self.words(category).iter().any(|w| w == word)
    }

    /// Total number of listed words, counting `"null"` once per category.
    pub fn total_words(&self) -> usize {
        self.words.values().map(Vec::len).sum()
    }

    pub fn num_categories(&self) -> usize {
        self.words.len()
    }
}

impl Default for AttributeVocabulary {
    fn default() -> Self {
        Self::standard()
    }
}

/// Attribute values keyed by category name.
///
/// Keys are kept as text so that files naming unknown categories can still be
/// loaded and reported on. A missing key and the value `"null"` both mean the
/// attribute is unspecified; `"null"` values are dropped on insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct AttributeSet {
    values: BTreeMap<String, String>,
}

impl From<BTreeMap<String, String>> for AttributeSet {
    fn from(map: BTreeMap<String, String>) -> Self {
        let mut set = AttributeSet::default();
        for (k, v) in map {
            set.insert_raw(k, v);
        }
        set
    }
}

impl From<AttributeSet> for BTreeMap<String, String> {
    fn from(set: AttributeSet) -> Self {
        set.values
    }
}

impl AttributeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, category: AttributeCategory, word: &str) -> Self {
        self.set(category, word);
        self
    }

    pub fn set(&mut self, category: AttributeCategory, word: &str) {
        self.insert_raw(category.key().to_string(), word.to_string());
    }

    fn insert_raw(&mut self, key: String, value: String) {
        if value == NULL_WORD {
            self.values.remove(&key);
        } else {
            self.values.insert(key, value);
        }
    }

    pub fn get(&self, category: AttributeCategory) -> Option<&str> {
        self.values.get(category.key()).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Non-null `(category name, value)` entries in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// True when every non-null value of `self` is also set, identically, in `other`.
    pub fn is_satisfied_by(&self, other: &AttributeSet) -> bool {
        self.values.iter().all(|(k, v)| other.values.get(k) == Some(v))
    }
}

pub fn validate_attributes(attrs: &AttributeSet, vocab: &AttributeVocabulary) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (key, value) in attrs.entries() {
        match key.parse::<AttributeCategory>() {
            Err(_) => report.push(Violation::UnknownAttributeCategory { category: key.to_string() }),
            Ok(cat) if !vocab.contains(cat, value) => {
                report.push(Violation::UnknownAttributeWord { category: key.to_string(), word: value.to_string() })
            }
            Ok(_) => {}
        }
    }
    report
}
