use serde::Serialize;

use super::PredictionRecord;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

/// One equal-width confidence bin of a reliability diagram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean confidence of the bin, 0 when empty.
    pub avg_conf: f64,
    /// Share of correct tokens in the bin, 0 when empty.
    pub accuracy: f64,
}

/// Expected calibration error over `bins` equal-width confidence bins,
/// with the reliability table. Confidence 1.0 falls in the top bin.
pub fn ece(records: &[PredictionRecord], bins: usize) -> Result<(f64, Vec<ReliabilityBin>)> {
    if records.is_empty() {
        return Err(Error::Data("ECE of an empty record set".into()));
    }
    if bins == 0 {
        return Err(Error::Domain("ECE needs at least one bin".into()));
    }
    let mut count = vec![0usize; bins];
    let mut correct = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    for r in records {
        let b = ((r.confidence * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        correct[b] += usize::from(r.is_correct());
        conf_sum[b] += r.confidence;
    }
    let n = records.len() as f64;
    let mut total = 0.0;
    let mut table = Vec::with_capacity(bins);
    for b in 0..bins {
        // (N_b / N) |acc_b - conf_b| = |correct_b - Σ conf_b| / N
        total += (correct[b] as f64 - conf_sum[b]).abs() / n;
        let (avg_conf, accuracy) = if count[b] == 0 {
            (0.0, 0.0)
        } else {
            (conf_sum[b] / count[b] as f64, correct[b] as f64 / count[b] as f64)
        };
        table.push(ReliabilityBin {
            index: b,
            lo: b as f64 / bins as f64,
            hi: (b + 1) as f64 / bins as f64,
            count: count[b],
            avg_conf,
            accuracy,
        });
    }
    Ok((total, table))
}

/// Reliability table as CSV with a fixed six-decimal format.
pub fn reliability_csv(table: &[ReliabilityBin]) -> String {
    let mut out = String::from("bin,lo,hi,count,avg_conf,accuracy\n");
    for b in table {
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{:.6},{:.6}\n",
            b.index, b.lo, b.hi, b.count, b.avg_conf, b.accuracy
        ));
    }
    out
}
