//! Bundled English stoplist.
//!
//! Keyword extraction depends on the exact stoplist contents, so the list is
//! versioned: any edit to [`DEFAULT_STOPWORDS`] must bump
//! [`STOPLIST_VERSION`], and golden transcripts pin the version they were
//! produced with.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Version tag of the bundled list below.
pub const STOPLIST_VERSION: &str = "en-1";

/// Common English function words, lowercase, sorted, deduplicated.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "cannot", "could", "couldn", "did", "didn", "do", "does", "doesn",
    "doing", "don", "down", "during", "each", "few", "for", "from", "further", "had", "hadn",
    "has", "hasn", "have", "haven", "having", "he", "her", "here", "hers", "herself", "him",
    "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just",
    "ll", "me", "might", "mightn", "more", "most", "must", "mustn", "my", "myself", "need",
    "needn", "no", "nor", "not", "now", "o", "of", "off", "on", "once", "only", "or", "other",
    "ought", "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same", "shall", "shan",
    "she", "should", "shouldn", "so", "some", "such", "t", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through",
    "to", "too", "under", "until", "up", "upon", "ve", "very", "was", "wasn", "we", "were",
    "weren", "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
    "won", "would", "wouldn", "y", "you", "your", "yours", "yourself", "yourselves",
];

/// A set of lowercase tokens removed before keyword ranking.
///
/// Invariant: all entries lowercase, no duplicates (enforced by the set
/// representation and checked at construction).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopList {
    words: BTreeSet<String>,
}

impl StopList {
    /// The bundled English list, version [`STOPLIST_VERSION`].
    pub fn default_english() -> Self {
        StopList {
            words: DEFAULT_STOPWORDS.iter().map(|w| w.to_string()).collect(),
        }
    }

    /// Builds a stoplist from arbitrary words, lowercasing them.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopList {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.as_str())
    }
}
