//! Tagged sentences, the BIO label schema, vocabulary, CoNLL I/O and the
//! synthetic corpus generator.

mod conll;
mod generator;
mod lexicon;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use conll::{format_conll, parse_conll, read_conll, write_conll};
pub use generator::{generate, GeneratorConfig, SplitSizes, Splits, SPLIT_NAMES};
pub use lexicon::{default_id_lexicons, default_id_templates, default_ood_lexicon, default_ood_templates, Lexicon};

/// Where a sentence comes from relative to the training distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// In-domain.
    Id,
    /// Training entities with a character-level typo.
    OovTypo,
    /// Entities never seen in training.
    OovUnseen,
    /// Different domain: unseen templates and entities.
    Ood,
}

impl Origin {
    pub const ALL: [Origin; 4] = [Origin::Id, Origin::OovTypo, Origin::OovUnseen, Origin::Ood];

    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Id => "id",
            Origin::OovTypo => "oov_typo",
            Origin::OovUnseen => "oov_unseen",
            Origin::Ood => "ood",
        }
    }

    pub fn is_shifted(&self) -> bool {
        *self != Origin::Id
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Origin::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown origin `{s}` (expected id, oov_typo, oov_unseen or ood)")))
    }
}

/// A sentence with one BIO tag per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
    pub origin: Origin,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, labels: Vec<String>, origin: Origin) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != labels.len() {
            return Err(Error::Data(format!(
                "sentence has {} tokens and {} labels",
                tokens.len(),
                labels.len()
            )));
        }
        Ok(TaggedSentence {
            tokens,
            labels,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A decoded BIO tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Begin(usize),
    Inside(usize),
}

/// Entity types and the derived closed tag set `[O, B-T1, I-T1, …]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    entity_types: Vec<String>,
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for LabelSchema {
    fn default() -> Self {
        LabelSchema::new(["PER", "LOC", "ORG", "MISC"]).expect("default schema is valid")
    }
}

impl LabelSchema {
    /// Id of the `O` tag in every schema.
    pub const OUTSIDE: usize = 0;

    pub fn new<S: AsRef<str>>(entity_types: impl IntoIterator<Item = S>) -> Result<Self> {
        let entity_types: Vec<String> = entity_types.into_iter().map(|s| s.as_ref().to_string()).collect();
        if entity_types.is_empty() {
            return Err(Error::Data("label schema needs at least one entity type".into()));
        }
        let mut tags = vec!["O".to_string()];
        for t in &entity_types {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("invalid entity type `{t}`")));
            }
            tags.push(format!("B-{t}"));
            tags.push(format!("I-{t}"));
        }
        let mut index = HashMap::new();
        for (i, t) in tags.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate tag `{t}`")));
            }
        }
        Ok(LabelSchema {
            entity_types,
            tags,
            index,
        })
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    /// Number of classes, `1 + 2 × entity types`.
    pub fn num_classes(&self) -> usize {
        self.tags.len()
    }

    pub fn tag_id(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag_name(&self, id: usize) -> &str {
        &self.tags[id]
    }

    pub fn decode(&self, id: usize) -> Tag {
        match id {
            0 => Tag::Outside,
            i if i % 2 == 1 => Tag::Begin((i - 1) / 2),
            i => Tag::Inside((i - 2) / 2),
        }
    }

    pub fn encode(&self, tag: Tag) -> usize {
        match tag {
            Tag::Outside => 0,
            Tag::Begin(t) => 1 + 2 * t,
            Tag::Inside(t) => 2 + 2 * t,
        }
    }

    pub fn type_id(&self, name: &str) -> Option<usize> {
        self.entity_types.iter().position(|t| t == name)
    }

    /// Tag ids for a sentence's labels.
    pub fn label_ids(&self, sentence: &TaggedSentence) -> Result<Vec<usize>> {
        sentence
            .labels
            .iter()
            .map(|l| {
                self.tag_id(l)
                    .ok_or_else(|| Error::Data(format!("tag `{l}` is not in the label schema")))
            })
            .collect()
    }
}

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Token ↔ id map with reserved padding (0) and unknown (1) ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Rebuilds a vocabulary from its id-ordered token list, which must start
    /// with the two reserved entries.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_ID] != PAD_TOKEN || tokens[UNK_ID] != UNK_TOKEN {
            return Err(Error::Data("vocabulary must start with <pad>, <unk>".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// SHA-256 over the id-ordered token list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

/// Builds the vocabulary from training sentences. Tokens seen fewer than
/// `min_count` times are left out and encode as unknown. Ids are assigned by
/// descending count, ties in lexicographic order.
pub fn build_vocab(train: &[TaggedSentence], min_count: usize) -> Result<Vocab> {
    if train.is_empty() {
        return Err(Error::Data("cannot build a vocabulary from an empty training set".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in train {
        for t in &s.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_count.max(1) && *t != PAD_TOKEN && *t != UNK_TOKEN)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend(entries.into_iter().map(|(t, _)| t.to_string()));
    Vocab::from_tokens(tokens)
}

/// SHA-256 of a sentence list's CoNLL rendering.
pub fn fingerprint(sentences: &[TaggedSentence]) -> Result<String> {
    let text = format_conll(sentences)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(tokens: &[&str]) -> TaggedSentence {
        TaggedSentence::new(
            tokens.iter().map(|s| s.to_string()).collect(),
            vec!["O".to_string(); tokens.len()],
            Origin::Id,
        )
        .unwrap()
    }

    #[test]
    fn schema_layout() {
        let s = LabelSchema::default();
        assert_eq!(s.num_classes(), 9);
        assert_eq!(s.tags()[0], "O");
        assert_eq!(s.tag_id("B-LOC"), Some(3));
        assert_eq!(s.decode(3), Tag::Begin(1));
        assert_eq!(s.decode(8), Tag::Inside(3));
        for id in 0..9 {
            assert_eq!(s.encode(s.decode(id)), id);
        }
        assert_eq!(s.tag_id("B-XYZ"), None);
    }

    #[test]
    fn vocab_sizes_and_unknowns() {
        let v = build_vocab(&[sent(&["a", "b", "c"])], 1).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.id("zzz"), UNK_ID);
    }

    #[test]
    fn vocab_orders_by_count_then_lexicographically() {
        let v = build_vocab(&[sent(&["b", "a", "c", "c"])], 1).unwrap();
        assert_eq!(v.tokens()[2..], ["c", "a", "b"]);
        let v = build_vocab(&[sent(&["b", "a", "c", "c"])], 2).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("a"), UNK_ID);
    }

    #[test]
    fn vocab_hash_depends_on_order() {
        let a = Vocab::from_tokens(vec!["<pad>".into(), "<unk>".into(), "x".into(), "y".into()]).unwrap();
        let b = Vocab::from_tokens(vec!["<pad>".into(), "<unk>".into(), "y".into(), "x".into()]).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert!(build_vocab(&[], 1).is_err());
    }
}
