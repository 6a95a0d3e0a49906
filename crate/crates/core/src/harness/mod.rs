//! Experiment orchestration behind the command-line driver: data
//! generation, training, evaluation, detection, selection rounds and case
//! studies, each recorded in a manifest.

mod commands;
mod detect;
mod manifest;
mod selection;

pub use commands::{
    detect_cmd, eval_cmd, gen_data, inspect_cmd, origin_of_split, select_cmd, train_cmd, EvalOptions, EvalReport,
    Retrain, SelectOptions, SplitInput, CASES_FILE, CHECKPOINT_FILE, DETECT_FILE, LOG_FILE, MANIFEST_FILE,
    METRICS_FILE, SELECTION_FILE,
};
pub use detect::{detect_table, DetectRow, DetectTable, DETECT_ROWS};
pub use manifest::{Manifest, MANIFEST_SCHEMA_VERSION};
pub use selection::{
    active_learning_round, cross_domain_round, f1_on, select, selection_size, sentence_scores, top_k, Aggregation,
    RoundData, RoundOutcome, SelectionRound, Strategy,
};
