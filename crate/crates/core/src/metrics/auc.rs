use serde::{Deserialize, Serialize};

use super::PredictionRecord;
use crate::error::{Error, Result};

/// How a pair with equal scores counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Ties count 0: the indicator `1[f(t0) < f(t1)]` read literally.
    #[default]
    Literal,
    /// Ties count one half (Mann-Whitney convention).
    Standard,
}

/// Pair counts above which the rank-based path is used.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

fn check(negatives: &[f64], positives: &[f64]) -> Result<()> {
    if negatives.is_empty() || positives.is_empty() {
        return Err(Error::Data(format!(
            "AUC needs both classes; got {} negatives and {} positives",
            negatives.len(),
            positives.len()
        )));
    }
    if negatives.iter().chain(positives).any(|s| s.is_nan()) {
        return Err(Error::Domain("AUC scores contain NaN".into()));
    }
    Ok(())
}

fn finish(less: u64, equal: u64, n0: usize, n1: usize, ties: TieRule) -> f64 {
    let pairs = n0 as u64 * n1 as u64;
    match ties {
        TieRule::Literal => less as f64 / pairs as f64,
        TieRule::Standard => (2 * less + equal) as f64 / (2 * pairs) as f64,
    }
}

/// Share of (negative, positive) pairs in which the positive scores higher.
pub fn auc(negatives: &[f64], positives: &[f64], ties: TieRule) -> Result<f64> {
    check(negatives, positives)?;
    if negatives.len() as u64 * positives.len() as u64 <= BRUTE_FORCE_LIMIT {
        auc_pairwise(negatives, positives, ties)
    } else {
        auc_ranked(negatives, positives, ties)
    }
}

/// Direct enumeration of all pairs.
pub fn auc_pairwise(negatives: &[f64], positives: &[f64], ties: TieRule) -> Result<f64> {
    check(negatives, positives)?;
    let mut less = 0u64;
    let mut equal = 0u64;
    for &p in positives {
        for &n in negatives {
            if n < p {
                less += 1;
            } else if n == p {
                equal += 1;
            }
        }
    }
    Ok(finish(less, equal, negatives.len(), positives.len(), ties))
}

/// Sort-based evaluation in O((n0 + n1) log n0). Pair counts are integers,
/// so the result is bit-identical to [`auc_pairwise`].
pub fn auc_ranked(negatives: &[f64], positives: &[f64], ties: TieRule) -> Result<f64> {
    check(negatives, positives)?;
    let mut sorted = negatives.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut less = 0u64;
    let mut equal = 0u64;
    for &p in positives {
        let lo = sorted.partition_point(|&n| n < p);
        let hi = sorted.partition_point(|&n| n <= p);
        less += lo as u64;
        equal += (hi - lo) as u64;
    }
    Ok(finish(less, equal, negatives.len(), positives.len(), ties))
}

/// Detector scores for the two detection settings.
///
/// Con: confidences of correctly (positive) and wrongly (negative) tagged
/// entity tokens. Unc: uncertainties of wrong shifted-origin tokens
/// (positive) and correct in-domain tokens (negative). Entity tokens are
/// those whose gold or predicted tag is not `O`; the same filter applies to
/// both settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSets {
    pub con_negative: Vec<f64>,
    pub con_positive: Vec<f64>,
    pub unc_negative: Vec<f64>,
    pub unc_positive: Vec<f64>,
}

pub fn detection_sets(records: &[PredictionRecord]) -> DetectionSets {
    let mut d = DetectionSets::default();
    for r in records.iter().filter(|r| r.is_entity_token()) {
        if r.is_correct() {
            d.con_positive.push(r.confidence);
            if !r.origin.is_shifted() {
                d.unc_negative.push(r.uncertainty);
            }
        } else {
            d.con_negative.push(r.confidence);
            if r.origin.is_shifted() {
                d.unc_positive.push(r.uncertainty);
            }
        }
    }
    d
}

fn require<'a>(set: &'a [f64], what: &str) -> Result<&'a [f64]> {
    if set.is_empty() {
        Err(Error::Data(format!("detection set is empty: {what}")))
    } else {
        Ok(set)
    }
}

impl DetectionSets {
    pub fn con_auc(&self, ties: TieRule) -> Result<f64> {
        let neg = require(&self.con_negative, "Con negatives (wrong entity tokens)")?;
        let pos = require(&self.con_positive, "Con positives (correct entity tokens)")?;
        auc(neg, pos, ties)
    }

    pub fn unc_auc(&self, ties: TieRule) -> Result<f64> {
        let neg = require(&self.unc_negative, "Unc negatives (correct in-domain entity tokens)")?;
        let pos = require(&self.unc_positive, "Unc positives (wrong OOV/OOD entity tokens)")?;
        auc(neg, pos, ties)
    }
}
