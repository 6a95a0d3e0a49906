//! Span F1, calibration error, detection AUC and case-study dumps.

mod auc;
mod calibration;
mod cases;
mod spans;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSchema, Origin};
use crate::error::{Error, Result};

pub use auc::{auc, auc_pairwise, auc_ranked, detection_sets, DetectionSets, TieRule, BRUTE_FORCE_LIMIT};
pub use calibration::{ece, reliability_csv, ReliabilityBin, DEFAULT_BINS};
pub use cases::{dump_cases, CaseKind, CaseRow, CaseTable};
pub use spans::{decode_entities, encode_entities, span_f1, Span, SpanScores};

/// One token's prediction with its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sentence_id: usize,
    pub token_index: usize,
    pub gold: usize,
    pub predicted: usize,
    /// Largest expected class probability.
    pub confidence: f64,
    pub uncertainty: f64,
    pub origin: Origin,
}

impl PredictionRecord {
    pub fn validate(&self) -> Result<()> {
        let ok = self.confidence.is_finite()
            && self.confidence > 0.0
            && self.confidence <= 1.0
            && self.uncertainty.is_finite()
            && (0.0..=1.0).contains(&self.uncertainty);
        if ok {
            Ok(())
        } else {
            Err(Error::Numeric(format!(
                "record ({}, {}): confidence {} / uncertainty {} out of range",
                self.sentence_id, self.token_index, self.confidence, self.uncertainty
            )))
        }
    }

    pub fn is_correct(&self) -> bool {
        self.gold == self.predicted
    }

    /// Gold or predicted tag is an entity tag.
    pub fn is_entity_token(&self) -> bool {
        let outside = LabelSchema::OUTSIDE;
        self.gold != outside || self.predicted != outside
    }
}

/// Scores for one evaluated split. AUC entries are absent when the split
/// cannot populate both sides of a detection set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub ece: f64,
    pub auc_con: Option<f64>,
    pub auc_unc: Option<f64>,
}
