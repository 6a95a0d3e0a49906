//! Two-column CoNLL text: one `token tag` pair per line, blank line between
//! sentences, UTF-8 with LF line endings.
//!
//! Extra middle columns (as in the four-column CoNLL-2003 files) are
//! accepted and ignored; the token is the first column and the tag the last.
//! `-DOCSTART-` lines are skipped. Tags are kept verbatim, so I- tags without
//! a preceding B- survive reading and are only repaired at decode time.

use std::fs;
use std::path::Path;

use super::{LabelSchema, Origin, TaggedSentence};
use crate::error::{Error, Result};

/// Parses CoNLL text. `source` names the input in error messages.
pub fn parse_conll(
    text: &str,
    schema: &LabelSchema,
    origin: Origin,
    source: &str,
) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut saw_content = false;

    let flush = |tokens: &mut Vec<String>, labels: &mut Vec<String>, out: &mut Vec<TaggedSentence>| {
        if !tokens.is_empty() {
            out.push(TaggedSentence {
                tokens: std::mem::take(tokens),
                labels: std::mem::take(labels),
                origin,
            });
        }
    };

    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let line_no = i + 1;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut labels, &mut sentences);
            continue;
        }
        saw_content = true;
        let mut cols = line.split_whitespace();
        let token = cols.next().unwrap_or_default();
        if token == "-DOCSTART-" {
            continue;
        }
        let Some(tag) = cols.last() else {
            return Err(Error::Parse {
                path: source.to_string(),
                line: line_no,
                message: format!("expected `token tag`, found a single column `{token}`"),
            });
        };
        if schema.tag_id(tag).is_none() {
            return Err(Error::Parse {
                path: source.to_string(),
                line: line_no,
                message: format!("unknown tag `{tag}`"),
            });
        }
        tokens.push(token.to_string());
        labels.push(tag.to_string());
    }
    flush(&mut tokens, &mut labels, &mut sentences);

    if !saw_content {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 0,
            message: "file contains no sentences".into(),
        });
    }
    Ok(sentences)
}

pub fn read_conll(path: impl AsRef<Path>, schema: &LabelSchema, origin: Origin) -> Result<Vec<TaggedSentence>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;
    parse_conll(&text, schema, origin, &path.display().to_string())
}

/// Renders sentences as CoNLL text. Tokens or tags containing whitespace
/// cannot be represented and are rejected.
pub fn format_conll(sentences: &[TaggedSentence]) -> Result<String> {
    let mut out = String::new();
    for (si, s) in sentences.iter().enumerate() {
        if s.tokens.is_empty() || s.tokens.len() != s.labels.len() {
            return Err(Error::Data(format!("sentence {si} is empty or ragged")));
        }
        for (tok, tag) in s.tokens.iter().zip(&s.labels) {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!(
                    "sentence {si}: token {tok:?} is empty or contains whitespace"
                )));
            }
            if tag.is_empty() || tag.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("sentence {si}: tag {tag:?} contains whitespace")));
            }
            if tok == "-DOCSTART-" {
                return Err(Error::Data(format!("sentence {si}: token -DOCSTART- is reserved")));
            }
            out.push_str(tok);
            out.push(' ');
            out.push_str(tag);
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_conll(sentences: &[TaggedSentence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_conll(sentences)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
