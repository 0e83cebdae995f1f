//! Corpus loading, tokenization, and chunk segmentation.
//!
//! Tokenization is rule-based and fully deterministic: a token is a maximal
//! run of Unicode alphanumeric characters, lowercased. Splitting on the
//! character class (rather than only on whitespace) makes dashes, semicolons
//! and other joining punctuation act as separators, so `"war—peace; war."`
//! tokenizes to `["war", "peace", "war"]`. No stemming or lemmatization is
//! applied; surface forms stay distinct.
//!
//! All spans are **character** offsets (Unicode scalar values) into the
//! normalized document text, not byte offsets.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::stopwords::StopList;

/// Default chunk size in tokens used by the ingest pipeline.
pub const DEFAULT_CHUNK_TOKENS: usize = 180;
/// Default overlap between consecutive chunks.
pub const DEFAULT_OVERLAP_TOKENS: usize = 0;

/// One source text of a philosopher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub philosopher_id: String,
    pub title: String,
    /// NFC-normalized text with `\n` line endings.
    pub text: String,
}

/// A contiguous fragment of a document; the retrieval unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    /// `doc_id` of the document this chunk was cut from.
    pub doc_ref: String,
    /// Character offsets `(start, end)` into the document text; half-open.
    pub span: (usize, usize),
    /// The document substring at `span`.
    pub text: String,
    /// Normalized tokens of the chunk, in order.
    pub tokens: Vec<String>,
}

/// A philosopher's documents plus their segmented chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub philosopher_id: String,
    pub documents: Vec<Document>,
    pub chunks: Vec<Chunk>,
}

/// Manifest file schema: JSON with `philosopher_id`, optional
/// `display_label`, and a list of document descriptors whose `path`s are
/// resolved relative to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub philosopher_id: String,
    #[serde(default)]
    pub display_label: Option<String>,
    pub documents: Vec<ManifestDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestDocument {
    pub doc_id: String,
    pub title: String,
    pub path: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::parse(format!("manifest {}: {e}", path.display())))
    }
}

/// True for characters that belong to tokens.
fn is_token_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Lowercases and splits `text` into tokens: maximal alphanumeric runs.
/// Empty input yields an empty list.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_spans(text)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// A token with its `(start, end)` character span in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Like [`tokenize`] but keeps character offsets, so chunk boundaries can be
/// mapped back to the source text.
pub fn tokenize_with_spans(text: &str) -> Vec<TokenSpan> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    for (i, c) in text.chars().enumerate() {
        if is_token_char(c) {
            if current.is_empty() {
                start = i;
            }
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            out.push(TokenSpan {
                text: std::mem::take(&mut current),
                start,
                end: i,
            });
        }
    }
    if !current.is_empty() {
        let end = text.chars().count();
        out.push(TokenSpan {
            text: current,
            start,
            end,
        });
    }
    out
}

/// Removes stoplisted tokens, preserving order.
pub fn filter_stopwords(tokens: &[String], stoplist: &StopList) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t))
        .cloned()
        .collect()
}

/// Cuts `text` after its first `max_tokens` tokens. Text with fewer tokens
/// is returned unchanged; trailing punctuation after the cut token is
/// dropped.
pub fn truncate_to_tokens(text: &str, max_tokens: usize) -> String {
    let spans = tokenize_with_spans(text);
    if spans.len() <= max_tokens {
        return text.to_string();
    }
    if max_tokens == 0 {
        return String::new();
    }
    let end = spans[max_tokens - 1].end;
    text.chars().take(end).collect()
}

fn substring_by_chars(text: &str, start: usize, end: usize) -> String {
    text.chars().take(end).skip(start).collect()
}

/// Normalizes raw file content: NFC, unified `\n` line endings.
fn normalize_text(raw: &str) -> String {
    let unified = raw.replace("\r\n", "\n").replace('\r', "\n");
    unified.nfc().collect()
}

/// Loads a corpus from a manifest file. Document paths are resolved
/// relative to the manifest's directory. The returned corpus has no chunks
/// yet; call [`Corpus::segment_all`] to populate them.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    corpus_from_manifest(&manifest, base)
}

/// Builds a corpus from an already-parsed manifest.
pub fn corpus_from_manifest(manifest: &Manifest, base_dir: &Path) -> Result<Corpus> {
    if manifest.philosopher_id.trim().is_empty() {
        return Err(Error::validation("manifest: philosopher_id is empty"));
    }
    if manifest.documents.is_empty() {
        return Err(Error::validation(format!(
            "manifest for {:?} declares no documents",
            manifest.philosopher_id
        )));
    }
    let mut seen = BTreeSet::new();
    let mut documents = Vec::with_capacity(manifest.documents.len());
    for entry in &manifest.documents {
        if !seen.insert(entry.doc_id.clone()) {
            return Err(Error::validation(format!(
                "duplicate doc_id {:?} in manifest",
                entry.doc_id
            )));
        }
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base_dir.join(&entry.path)
        };
        let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let text = normalize_text(&raw);
        if text.trim().is_empty() {
            return Err(Error::validation(format!(
                "document {:?} is empty after whitespace normalization",
                entry.doc_id
            )));
        }
        documents.push(Document {
            doc_id: entry.doc_id.clone(),
            philosopher_id: manifest.philosopher_id.clone(),
            title: entry.title.clone(),
            text,
        });
    }
    Ok(Corpus {
        philosopher_id: manifest.philosopher_id.clone(),
        documents,
        chunks: Vec::new(),
    })
}

/// Splits a document into token windows of at most `target_tokens` tokens,
/// consecutive windows sharing exactly `overlap_tokens` tokens (the final
/// window may be shorter). Chunk ids are `{doc_id}#{seq:04}`.
pub fn segment(
    document: &Document,
    target_tokens: usize,
    overlap_tokens: usize,
) -> Result<Vec<Chunk>> {
    if target_tokens == 0 {
        return Err(Error::validation("segment: target_tokens must be positive"));
    }
    if overlap_tokens >= target_tokens {
        return Err(Error::validation(format!(
            "segment: overlap_tokens ({overlap_tokens}) must be smaller than target_tokens ({target_tokens})"
        )));
    }
    let spans = tokenize_with_spans(&document.text);
    if spans.is_empty() {
        return Err(Error::validation(format!(
            "document {:?} has no tokens",
            document.doc_id
        )));
    }
    let step = target_tokens - overlap_tokens;
    let n = spans.len();
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let end = usize::min(start + target_tokens, n);
        let char_start = spans[start].start;
        let char_end = spans[end - 1].end;
        chunks.push(Chunk {
            chunk_id: format!("{}#{:04}", document.doc_id, chunks.len()),
            doc_ref: document.doc_id.clone(),
            span: (char_start, char_end),
            text: substring_by_chars(&document.text, char_start, char_end),
            tokens: spans[start..end].iter().map(|s| s.text.clone()).collect(),
        });
        if start + target_tokens >= n {
            break;
        }
        start += step;
    }
    Ok(chunks)
}

impl Corpus {
    /// Segments every document and replaces the corpus chunk list. Chunks
    /// keep document order, then window order.
    pub fn segment_all(&mut self, target_tokens: usize, overlap_tokens: usize) -> Result<()> {
        let mut chunks = Vec::new();
        for doc in &self.documents {
            chunks.extend(segment(doc, target_tokens, overlap_tokens)?);
        }
        self.chunks = chunks;
        Ok(())
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.chunks.iter().find(|c| c.chunk_id == chunk_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn doc(text: &str) -> Document {
        Document {
            doc_id: "d".into(),
            philosopher_id: "p".into(),
            title: "t".into(),
            text: text.into(),
        }
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn tokenize_basic() {
        assert_eq!(
            tokenize("The Gospels were read"),
            vec!["the", "gospels", "were", "read"]
        );
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_punctuation_separates() {
        // character-class oracle: keep alphanumeric runs, drop the rest
        let input = "war—peace; war.";
        let oracle: Vec<String> = {
            let mut toks = Vec::new();
            let mut cur = String::new();
            for c in input.chars() {
                if c.is_alphanumeric() {
                    cur.push(c);
                } else if !cur.is_empty() {
                    toks.push(cur.to_lowercase());
                    cur = String::new();
                }
            }
            if !cur.is_empty() {
                toks.push(cur.to_lowercase());
            }
            toks
        };
        assert_eq!(tokenize(input), oracle);
        assert_eq!(tokenize(input), vec!["war", "peace", "war"]);
    }

    #[test]
    fn tokenize_spans_are_char_offsets() {
        let spans = tokenize_with_spans("héllo, wörld");
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].text, "héllo");
        assert_eq!((spans[0].start, spans[0].end), (0, 5));
        assert_eq!(spans[1].text, "wörld");
        assert_eq!((spans[1].start, spans[1].end), (7, 12));
    }

    #[test]
    fn filter_stopwords_examples() {
        let sl = StopList::from_words(["the", "of"]);
        let toks: Vec<String> = ["the", "book", "of", "malice"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(filter_stopwords(&toks, &sl), vec!["book", "malice"]);
        assert!(filter_stopwords(&[], &sl).is_empty());
    }

    #[test]
    fn filter_stopwords_against_set_difference_oracle() {
        let para = "The thinker held that every settled custom conceals a struggle, \
                    and that the worth of a custom is proven only when it is questioned.";
        let sl = StopList::default_english();
        let toks = tokenize(para);
        let filtered = filter_stopwords(&toks, &sl);
        let oracle: Vec<&String> = toks.iter().filter(|t| !sl.contains(t)).collect();
        assert_eq!(filtered.iter().collect::<Vec<_>>(), oracle);
        assert!(filtered.iter().all(|t| !sl.contains(t)));
    }

    #[test]
    fn segment_exact_division() {
        let d = doc(&words(1000));
        let chunks = segment(&d, 200, 0).unwrap();
        assert_eq!(chunks.len(), 5);
        assert!(chunks.iter().all(|c| c.tokens.len() == 200));
    }

    #[test]
    fn segment_short_document() {
        let d = doc(&words(100));
        let chunks = segment(&d, 200, 0).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].tokens.len(), 100);
    }

    #[test]
    fn segment_overlap_matches_window_enumeration_oracle() {
        let d = doc(&words(1000));
        let chunks = segment(&d, 200, 50).unwrap();
        // step-by-window oracle: starts 0, 150, 300, ... while a window adds tokens
        let mut starts = vec![0usize];
        while starts.last().unwrap() + 200 < 1000 {
            starts.push(starts.last().unwrap() + 150);
        }
        assert_eq!(chunks.len(), starts.len());
        assert_eq!(chunks.len(), 7); // ceil((1000-200)/150) + 1
        for (chunk, s) in chunks.iter().zip(&starts) {
            let e = usize::min(s + 200, 1000);
            assert_eq!(chunk.tokens.len(), e - s);
            assert_eq!(chunk.tokens[0], format!("w{s}"));
        }
        // consecutive chunks share exactly 50 tokens
        for pair in chunks.windows(2) {
            let a = &pair[0].tokens;
            let b = &pair[1].tokens;
            let shared = usize::min(50, b.len());
            assert_eq!(&a[a.len() - shared..], &b[..shared]);
        }
    }

    #[test]
    fn segment_rejects_empty_and_bad_overlap() {
        assert!(segment(&doc("—;,."), 10, 0).is_err());
        assert!(segment(&doc("a b c"), 10, 10).is_err());
    }

    #[test]
    fn chunk_text_matches_span_substring() {
        let d = doc("One, two; three. Four five—six seven eight nine ten.");
        for chunk in segment(&d, 4, 1).unwrap() {
            assert_eq!(
                chunk.text,
                substring_by_chars(&d.text, chunk.span.0, chunk.span.1)
            );
            assert_eq!(tokenize(&chunk.text), chunk.tokens);
        }
    }

    #[test]
    fn truncate_to_tokens_cuts_after_nth() {
        assert_eq!(truncate_to_tokens("one two three", 2), "one two");
        assert_eq!(truncate_to_tokens("one two", 5), "one two");
        assert_eq!(truncate_to_tokens("one, two, three.", 2), "one, two");
    }

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.json");
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn load_corpus_four_documents() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in ["ethics", "poetics", "politics", "metaphysics"]
            .iter()
            .enumerate()
        {
            std::fs::write(dir.path().join(format!("{name}.txt")), format!("text {i}\n")).unwrap();
        }
        let manifest = write_manifest(
            dir.path(),
            r#"{
              "philosopher_id": "aristotle",
              "display_label": "AI-clone of Aristotle",
              "documents": [
                {"doc_id": "ethics", "title": "Ethics", "path": "ethics.txt"},
                {"doc_id": "poetics", "title": "Poetics", "path": "poetics.txt"},
                {"doc_id": "politics", "title": "Politics", "path": "politics.txt"},
                {"doc_id": "metaphysics", "title": "Metaphysics", "path": "metaphysics.txt"}
              ]
            }"#,
        );
        let corpus = load_corpus(&manifest).unwrap();
        assert_eq!(corpus.philosopher_id, "aristotle");
        assert_eq!(corpus.documents.len(), 4);
    }

    #[test]
    fn load_corpus_rejects_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(
            dir.path(),
            r#"{"philosopher_id": "x", "documents": []}"#,
        );
        assert!(matches!(
            load_corpus(&manifest),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn load_corpus_rejects_duplicate_doc_ids() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "alpha").unwrap();
        let manifest = write_manifest(
            dir.path(),
            r#"{"philosopher_id": "x", "documents": [
                {"doc_id": "a", "title": "A", "path": "a.txt"},
                {"doc_id": "a", "title": "A again", "path": "a.txt"}
            ]}"#,
        );
        assert!(matches!(load_corpus(&manifest), Err(Error::Validation(_))));
    }

    #[test]
    fn load_corpus_names_missing_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(
            dir.path(),
            r#"{"philosopher_id": "x", "documents": [
                {"doc_id": "a", "title": "A", "path": "nope.txt"}
            ]}"#,
        );
        match load_corpus(&manifest) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("nope.txt")),
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn load_corpus_rejects_whitespace_only_document() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), " \n \r\n ").unwrap();
        let manifest = write_manifest(
            dir.path(),
            r#"{"philosopher_id": "x", "documents": [
                {"doc_id": "a", "title": "A", "path": "a.txt"}
            ]}"#,
        );
        assert!(matches!(load_corpus(&manifest), Err(Error::Validation(_))));
    }

    #[test]
    fn load_corpus_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "alpha beta\r\ngamma").unwrap();
        let manifest = write_manifest(
            dir.path(),
            r#"{"philosopher_id": "x", "documents": [
                {"doc_id": "a", "title": "A", "path": "a.txt"}
            ]}"#,
        );
        let c1 = load_corpus(&manifest).unwrap();
        let c2 = load_corpus(&manifest).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1.documents[0].text, "alpha beta\ngamma");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn token_strategy() -> impl Strategy<Value = String> {
            proptest::string::string_regex("[a-z0-9]{1,8}").unwrap()
        }

        proptest! {
            #[test]
            fn tokenize_idempotent_on_own_output(tokens in proptest::collection::vec(token_strategy(), 0..40)) {
                let joined = tokens.join(" ");
                prop_assert_eq!(tokenize(&joined), tokens);
            }

            #[test]
            fn segment_reconstructs_token_sequence(
                n in 1usize..400,
                target in 1usize..60,
                overlap_frac in 0usize..60,
            ) {
                let overlap = overlap_frac % target; // keep overlap < target
                let d = doc(&words(n));
                let all = tokenize(&d.text);
                let chunks = segment(&d, target, overlap).unwrap();
                let mut rebuilt = chunks[0].tokens.clone();
                for c in &chunks[1..] {
                    rebuilt.extend_from_slice(&c.tokens[overlap..]);
                }
                prop_assert_eq!(rebuilt, all);
                for c in &chunks {
                    prop_assert!(c.tokens.len() <= target);
                    prop_assert!(!c.tokens.is_empty());
                }
            }
        }
    }
}
