use crate::corpus::{LabelSchema, Tag};
use crate::error::{Error, Result};

/// An entity mention covering tokens `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub entity_type: usize,
}

/// Decodes BIO tag ids into maximal spans. An `I-X` that does not continue
/// an `X` span opens a new one, as if it were `B-X`.
pub fn decode_entities(schema: &LabelSchema, tags: &[usize]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, &id) in tags.iter().enumerate() {
        match schema.decode(id) {
            Tag::Outside => {
                spans.extend(open.take());
            }
            Tag::Begin(t) => {
                spans.extend(open.take());
                open = Some(Span {
                    start: i,
                    end: i,
                    entity_type: t,
                });
            }
            Tag::Inside(t) => match open.as_mut() {
                Some(s) if s.entity_type == t => s.end = i,
                _ => {
                    spans.extend(open.take());
                    open = Some(Span {
                        start: i,
                        end: i,
                        entity_type: t,
                    });
                }
            },
        }
    }
    spans.extend(open);
    spans
}

/// Tag ids for a set of non-overlapping spans over `len` tokens.
pub fn encode_entities(schema: &LabelSchema, spans: &[Span], len: usize) -> Vec<usize> {
    let mut tags = vec![0; len];
    for s in spans {
        tags[s.start] = schema.encode(Tag::Begin(s.entity_type));
        for t in &mut tags[s.start + 1..=s.end] {
            *t = schema.encode(Tag::Inside(s.entity_type));
        }
    }
    tags
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Micro-averaged exact-match span scores.
///
/// Precision is 0 when nothing is predicted and recall is 0 when the gold
/// side has no entities; when both sides are empty all three scores are 1.
pub fn span_f1(schema: &LabelSchema, gold: &[Vec<usize>], predicted: &[Vec<usize>]) -> Result<SpanScores> {
    if gold.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} gold sentences but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    let mut n_gold = 0usize;
    let mut n_pred = 0usize;
    let mut n_hit = 0usize;
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Shape(format!(
                "sentence {i}: {} gold tags but {} predicted",
                g.len(),
                p.len()
            )));
        }
        let gs = decode_entities(schema, g);
        let ps = decode_entities(schema, p);
        n_gold += gs.len();
        n_pred += ps.len();
        // Both lists are sorted by start and non-overlapping.
        n_hit += ps.iter().filter(|s| gs.binary_search(s).is_ok()).count();
    }
    if n_gold == 0 && n_pred == 0 {
        return Ok(SpanScores {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        });
    }
    let precision = if n_pred == 0 { 0.0 } else { n_hit as f64 / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { n_hit as f64 / n_gold as f64 };
    let f1 = if n_hit == 0 {
        0.0
    } else {
        2.0 * n_hit as f64 / (n_gold + n_pred) as f64
    };
    Ok(SpanScores { precision, recall, f1 })
}
