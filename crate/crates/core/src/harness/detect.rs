use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Origin;
use crate::error::{Error, Result};
use crate::metrics::{detection_sets, PredictionRecord, TieRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRow {
    pub origin: Origin,
    pub con: f64,
    pub unc: f64,
}

/// Con and Unc AUC for each shifted origin against the in-domain split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectTable {
    pub rows: Vec<DetectRow>,
}

pub const DETECT_ROWS: [Origin; 3] = [Origin::OovTypo, Origin::OovUnseen, Origin::Ood];

impl DetectTable {
    pub fn row(&self, origin: Origin) -> Option<&DetectRow> {
        self.rows.iter().find(|r| r.origin == origin)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,con,unc\n");
        for r in &self.rows {
            writeln!(out, "{},{:.6},{:.6}", r.origin, r.con, r.unc).expect("write to string");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<12}{:>10}{:>10}\n", "split", "Con", "Unc");
        for r in &self.rows {
            writeln!(out, "{:<12}{:>10.4}{:>10.4}", r.origin.as_str(), r.con, r.unc).expect("write to string");
        }
        out
    }
}

/// Builds the 3×2 table. `id` holds in-domain records; `shifted` is one
/// record list per row of [`DETECT_ROWS`].
pub fn detect_table(id: &[PredictionRecord], shifted: [&[PredictionRecord]; 3], ties: TieRule) -> Result<DetectTable> {
    if id.is_empty() {
        return Err(Error::Data("detection needs in-domain records".into()));
    }
    if id.iter().any(|r| r.origin != Origin::Id) {
        return Err(Error::Data("in-domain record list holds shifted records".into()));
    }
    let mut rows = Vec::with_capacity(3);
    for (origin, recs) in DETECT_ROWS.into_iter().zip(shifted) {
        if let Some(r) = recs.iter().find(|r| r.origin != origin) {
            return Err(Error::Data(format!(
                "record of origin {} supplied for the {origin} row",
                r.origin
            )));
        }
        let mut pooled = id.to_vec();
        pooled.extend_from_slice(recs);
        let sets = detection_sets(&pooled);
        let wrap = |e: Error| Error::Data(format!("{origin} row: {e}"));
        rows.push(DetectRow {
            origin,
            con: sets.con_auc(ties).map_err(wrap)?,
            unc: sets.unc_auc(ties).map_err(wrap)?,
        });
    }
    Ok(DetectTable { rows })
}
