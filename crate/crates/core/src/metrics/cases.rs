use std::cmp::Ordering;

use super::PredictionRecord;
use crate::corpus::LabelSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    HighUncertainty,
    ConfidentError,
}

impl CaseKind {
    fn as_str(&self) -> &'static str {
        match self {
            CaseKind::HighUncertainty => "high_uncertainty",
            CaseKind::ConfidentError => "confident_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub kind: CaseKind,
    pub sentence_id: usize,
    pub token_index: usize,
    pub token: String,
    pub gold: String,
    pub predicted: String,
    pub confidence: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseTable {
    pub rows: Vec<CaseRow>,
}

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

impl CaseTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fixed-width text table; percentages with one decimal.
    pub fn to_text(&self) -> String {
        if self.rows.is_empty() {
            return String::new();
        }
        let tw = self.rows.iter().map(|r| r.token.chars().count()).max().unwrap_or(0).max(5);
        let mut out = format!(
            "{:<16} {:>5} {:>5}  {:<tw$}  {:<8} {:<8} {:>6} {:>6}\n",
            "kind", "sent", "tok", "token", "gold", "pred", "conf%", "unc%"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16} {:>5} {:>5}  {:<tw$}  {:<8} {:<8} {:>6} {:>6}\n",
                r.kind.as_str(),
                r.sentence_id,
                r.token_index,
                r.token,
                r.gold,
                r.predicted,
                pct(r.confidence),
                pct(r.uncertainty)
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,sentence_id,token_index,token,gold,predicted,confidence_pct,uncertainty_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.kind.as_str(),
                r.sentence_id,
                r.token_index,
                csv_field(&r.token),
                r.gold,
                r.predicted,
                pct(r.confidence),
                pct(r.uncertainty)
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn by_position(a: &PredictionRecord, b: &PredictionRecord) -> Ordering {
    (a.sentence_id, a.token_index).cmp(&(b.sentence_id, b.token_index))
}

/// The `top_k` most uncertain tokens followed by the `top_k` most confident
/// errors. Equal scores keep (sentence id, token index) order.
/// `tokens[sentence_id][token_index]` supplies the surface form.
pub fn dump_cases(
    records: &[PredictionRecord],
    tokens: &[Vec<String>],
    schema: &LabelSchema,
    top_k: usize,
) -> CaseTable {
    let mut uncertain: Vec<&PredictionRecord> = records.iter().collect();
    uncertain.sort_by(|a, b| b.uncertainty.total_cmp(&a.uncertainty).then_with(|| by_position(a, b)));
    let mut errors: Vec<&PredictionRecord> = records.iter().filter(|r| !r.is_correct()).collect();
    errors.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then_with(|| by_position(a, b)));

    let row = |kind, r: &PredictionRecord| CaseRow {
        kind,
        sentence_id: r.sentence_id,
        token_index: r.token_index,
        token: tokens
            .get(r.sentence_id)
            .and_then(|s| s.get(r.token_index))
            .cloned()
            .unwrap_or_default(),
        gold: schema.tag_name(r.gold).to_string(),
        predicted: schema.tag_name(r.predicted).to_string(),
        confidence: r.confidence,
        uncertainty: r.uncertainty,
    };
    let mut rows: Vec<CaseRow> = uncertain
        .into_iter()
        .take(top_k)
        .map(|r| row(CaseKind::HighUncertainty, r))
        .collect();
    rows.extend(errors.into_iter().take(top_k).map(|r| row(CaseKind::ConfidentError, r)));
    CaseTable { rows }
}
