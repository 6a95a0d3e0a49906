//! One function per command-line subcommand. Each reads its inputs, writes
//! its outputs under `out` and returns the in-memory result.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::detect::{detect_table, DetectTable};
use super::manifest::{write_file, Manifest};
use super::selection::{active_learning_round, cross_domain_round, select, Aggregation, RoundData, SelectionRound, Strategy};
use crate::corpus::{build_vocab, fingerprint, generate, read_conll, write_conll, GeneratorConfig, LabelSchema, Origin, TaggedSentence, SPLIT_NAMES};
use crate::error::{Error, Result};
use crate::metrics::{detection_sets, dump_cases, ece, reliability_csv, span_f1, CaseTable, MetricsReport, PredictionRecord, TieRule, DEFAULT_BINS};
use crate::model::{evaluate, load_checkpoint, train, Checkpoint, Evaluation, TrainConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOG_FILE: &str = "log.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const DETECT_FILE: &str = "detect.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const CASES_FILE: &str = "cases.csv";

const TRAIN_SUBSTREAMS: [&str; 3] = ["model/init", "train/shuffle", "train/dropout"];

/// Origin implied by a generated split name; other names are in-domain.
pub fn origin_of_split(name: &str) -> Origin {
    match name {
        "test_oov_typo" => Origin::OovTypo,
        "test_oov_unseen" => Origin::OovUnseen,
        "test_ood" => Origin::Ood,
        _ => Origin::Id,
    }
}

/// A named data file. Written `NAME=PATH` or just `PATH`, in which case the
/// name is the file stem. The origin follows from the name.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitInput {
    pub name: String,
    pub origin: Origin,
    pub path: PathBuf,
}

impl SplitInput {
    pub fn new(name: &str, path: impl Into<PathBuf>) -> Self {
        SplitInput {
            name: name.to_string(),
            origin: origin_of_split(name),
            path: path.into(),
        }
    }

    pub fn parse(arg: &str) -> Result<Self> {
        let (name, path) = match arg.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let path = PathBuf::from(arg);
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| Error::Data(format!("cannot name split `{arg}`")))?
                    .to_string();
                (stem, path)
            }
        };
        if name.is_empty() {
            return Err(Error::Data(format!("empty split name in `{arg}`")));
        }
        Ok(SplitInput::new(&name, path))
    }

    pub fn read(&self, schema: &LabelSchema) -> Result<Vec<TaggedSentence>> {
        read_conll(&self.path, schema, self.origin)
    }
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn finish(mut manifest: Manifest, started: Instant, out: &Path) -> Result<Manifest> {
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.save(out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Generates the six corpus splits as `<split>.conll` files.
pub fn gen_data(config: &GeneratorConfig, out: &Path) -> Result<Manifest> {
    let started = Instant::now();
    let splits = generate(config)?;
    ensure_dir(out)?;
    let mut manifest = Manifest::new("gen-data", config.seed, config)?;
    manifest.substreams = SPLIT_NAMES.iter().map(|n| format!("generate/{n}")).collect();
    for (name, sentences) in splits.named() {
        write_conll(sentences, out.join(format!("{name}.conll")))?;
        manifest.corpus.insert(name.to_string(), fingerprint(sentences)?);
    }
    finish(manifest, started, out)
}

/// Trains a tagger and writes the best checkpoint, the per-epoch log as JSON
/// lines and the manifest.
pub fn train_cmd(
    train_path: &Path,
    dev_path: &Path,
    schema: &LabelSchema,
    config: &TrainConfig,
    out: &Path,
) -> Result<Manifest> {
    let started = Instant::now();
    config.validate()?;
    let train_set = read_conll(train_path, schema, Origin::Id)?;
    let dev_set = read_conll(dev_path, schema, Origin::Id)?;
    let outcome = train(&train_set, &dev_set, schema, config)?;
    ensure_dir(out)?;
    Checkpoint {
        tagger: outcome.tagger,
        config: config.clone(),
    }
    .save(out.join(CHECKPOINT_FILE))?;
    let mut log = String::new();
    for row in &outcome.log {
        log.push_str(&serde_json::to_string(row)?);
        log.push('\n');
    }
    write_file(out.join(LOG_FILE), log)?;

    let mut manifest = Manifest::new("train", config.seed, config)?;
    manifest.substreams = TRAIN_SUBSTREAMS.iter().map(|s| s.to_string()).collect();
    manifest.corpus.insert("train".into(), fingerprint(&train_set)?);
    manifest.corpus.insert("dev".into(), fingerprint(&dev_set)?);
    manifest.protocol = Some(format!("best dev span-F1 at epoch {}", outcome.best_epoch));
    manifest.log = outcome.log;
    finish(manifest, started, out)
}

/// Per-split metrics plus AUCs pooled over every supplied split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub splits: BTreeMap<String, MetricsReport>,
    pub pooled_auc_con: Option<f64>,
    pub pooled_auc_unc: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Training file whose vocabulary must match the checkpoint.
    pub train: Option<PathBuf>,
    /// Fail unless a pooled Unc AUC can be computed.
    pub require_unc: bool,
    pub ties: TieRule,
}

struct Evaluated {
    name: String,
    sentences: Vec<TaggedSentence>,
    eval: Evaluation,
}

fn evaluate_splits(ckpt: &Checkpoint, splits: &[SplitInput]) -> Result<Vec<Evaluated>> {
    let mut offset = 0;
    let mut out = Vec::with_capacity(splits.len());
    for split in splits {
        let sentences = split.read(&ckpt.tagger.schema)?;
        let eval = evaluate(&ckpt.tagger, &sentences, offset)?;
        offset += sentences.len();
        out.push(Evaluated {
            name: split.name.clone(),
            sentences,
            eval,
        });
    }
    Ok(out)
}

fn check_vocab(ckpt: &Checkpoint, train_path: &Path) -> Result<()> {
    let train_set = read_conll(train_path, &ckpt.tagger.schema, Origin::Id)?;
    let rebuilt = build_vocab(&train_set, ckpt.config.min_count)?;
    if rebuilt.hash() != ckpt.tagger.vocab.hash() {
        return Err(Error::Data(format!(
            "vocabulary hash of {} does not match the checkpoint",
            train_path.display()
        )));
    }
    Ok(())
}

pub fn eval_cmd(checkpoint: &Path, splits: &[SplitInput], options: &EvalOptions, out: &Path) -> Result<EvalReport> {
    if splits.is_empty() {
        return Err(Error::Data("no evaluation split supplied".into()));
    }
    let ckpt = load_checkpoint(checkpoint)?;
    if let Some(train_path) = &options.train {
        check_vocab(&ckpt, train_path)?;
    }
    let evaluated = evaluate_splits(&ckpt, splits)?;
    let schema = &ckpt.tagger.schema;
    let id_records: Vec<PredictionRecord> = evaluated
        .iter()
        .flat_map(|e| e.eval.records.iter().filter(|r| r.origin == Origin::Id).cloned())
        .collect();

    ensure_dir(out)?;
    let mut reports = BTreeMap::new();
    let mut pooled = Vec::new();
    for e in &evaluated {
        let gold: Vec<Vec<usize>> = e.sentences.iter().map(|s| schema.label_ids(s)).collect::<Result<_>>()?;
        let scores = span_f1(schema, &gold, &e.eval.predicted)?;
        let (ece_value, table) = ece(&e.eval.records, DEFAULT_BINS)?;
        write_file(out.join(format!("reliability_{}.csv", e.name)), reliability_csv(&table))?;
        let auc_con = detection_sets(&e.eval.records).con_auc(options.ties).ok();
        let auc_unc = if e.eval.records.iter().any(|r| r.origin.is_shifted()) {
            let mut recs = id_records.clone();
            recs.extend_from_slice(&e.eval.records);
            detection_sets(&recs).unc_auc(options.ties).ok()
        } else {
            None
        };
        reports.insert(
            e.name.clone(),
            MetricsReport {
                f1: scores.f1,
                precision: scores.precision,
                recall: scores.recall,
                ece: ece_value,
                auc_con,
                auc_unc,
            },
        );
        pooled.extend_from_slice(&e.eval.records);
    }
    let sets = detection_sets(&pooled);
    let pooled_auc_unc = match sets.unc_auc(options.ties) {
        Ok(v) => Some(v),
        Err(_) if options.require_unc => {
            return Err(Error::Data(
                "Unc AUC needs correct in-domain entity tokens and wrong OOV/OOD entity tokens; \
                 supply an in-domain split and at least one shifted split"
                    .into(),
            ))
        }
        Err(_) => None,
    };
    let report = EvalReport {
        splits: reports,
        pooled_auc_con: sets.con_auc(options.ties).ok(),
        pooled_auc_unc,
    };
    write_file(out.join(METRICS_FILE), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// Detection table for a checkpoint over the in-domain split and the three
/// shifted splits, in typo, unseen, OOD order.
pub fn detect_cmd(checkpoint: &Path, id: &Path, shifted: [&Path; 3], ties: TieRule, out: &Path) -> Result<DetectTable> {
    let ckpt = load_checkpoint(checkpoint)?;
    let schema = &ckpt.tagger.schema;
    let id_set = read_conll(id, schema, Origin::Id)?;
    let id_records = evaluate(&ckpt.tagger, &id_set, 0)?.records;
    let mut offset = id_set.len();
    let mut records = Vec::with_capacity(3);
    for (path, origin) in shifted.into_iter().zip(super::detect::DETECT_ROWS) {
        let set = read_conll(path, schema, origin)?;
        records.push(evaluate(&ckpt.tagger, &set, offset)?.records);
        offset += set.len();
    }
    let table = detect_table(&id_records, [&records[0], &records[1], &records[2]], ties)?;
    ensure_dir(out)?;
    write_file(out.join(DETECT_FILE), table.to_csv())?;
    Ok(table)
}

/// What to do with a selection.
#[derive(Debug, Clone)]
pub enum Retrain {
    /// Merge into the labeled set and train a fresh model.
    InDomain {
        labeled: Option<PathBuf>,
        dev: PathBuf,
        test: PathBuf,
        config: TrainConfig,
    },
    /// Fine-tune the scoring checkpoint on the selection.
    CrossDomain {
        dev: PathBuf,
        test: PathBuf,
        config: TrainConfig,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct SelectOptions {
    pub strategy: Strategy,
    pub ratio: f64,
    pub aggregation: Aggregation,
    pub seed: u64,
}

pub fn select_cmd(
    checkpoint: &Path,
    pool_path: &Path,
    options: SelectOptions,
    retrain: Option<&Retrain>,
    out: &Path,
) -> Result<SelectionRound> {
    let started = Instant::now();
    let ckpt = load_checkpoint(checkpoint)?;
    let schema = &ckpt.tagger.schema;
    let pool = read_conll(pool_path, schema, Origin::Id)?;
    let SelectOptions {
        strategy,
        ratio,
        aggregation,
        seed,
    } = options;

    #[derive(Serialize)]
    struct Echo<'a> {
        strategy: Strategy,
        ratio: f64,
        aggregation: Aggregation,
        #[serde(skip_serializing_if = "Option::is_none")]
        retrain: Option<&'a TrainConfig>,
    }
    let retrain_config = retrain.map(|r| match r {
        Retrain::InDomain { config, .. } | Retrain::CrossDomain { config, .. } => config,
    });
    let mut manifest = Manifest::new(
        "select",
        seed,
        &Echo {
            strategy,
            ratio,
            aggregation,
            retrain: retrain_config,
        },
    )?;
    manifest.corpus.insert("pool".into(), fingerprint(&pool)?);

    let (round, tagger) = match retrain {
        None => {
            let selected = select(&ckpt.tagger, &pool, strategy, ratio, aggregation, seed)?;
            manifest.protocol = Some("selection only".into());
            (
                SelectionRound {
                    strategy,
                    ratio,
                    selected,
                    post_retrain_f1: None,
                },
                None,
            )
        }
        Some(Retrain::InDomain {
            labeled,
            dev,
            test,
            config,
        }) => {
            let labeled_set = match labeled {
                Some(p) => read_conll(p, schema, Origin::Id)?,
                None => Vec::new(),
            };
            let dev_set = read_conll(dev, schema, Origin::Id)?;
            let test_set = read_conll(test, schema, Origin::Id)?;
            manifest.corpus.insert("labeled".into(), fingerprint(&labeled_set)?);
            manifest.corpus.insert("dev".into(), fingerprint(&dev_set)?);
            manifest.corpus.insert("test".into(), fingerprint(&test_set)?);
            manifest.substreams = TRAIN_SUBSTREAMS.iter().map(|s| s.to_string()).collect();
            manifest.protocol = Some(
                "in-domain: score pool with the checkpoint, merge the selection into the labeled set, \
                 train a fresh model on the union, report span F1 on the test set"
                    .into(),
            );
            let data = RoundData {
                pool: &pool,
                dev: &dev_set,
                test: &test_set,
            };
            let r = active_learning_round(&ckpt.tagger, &labeled_set, data, strategy, ratio, aggregation, config)?;
            (r.round, Some((r.tagger, config.clone())))
        }
        Some(Retrain::CrossDomain { dev, test, config }) => {
            let dev_set = read_conll(dev, schema, Origin::Id)?;
            let test_set = read_conll(test, schema, Origin::Id)?;
            manifest.corpus.insert("dev".into(), fingerprint(&dev_set)?);
            manifest.corpus.insert("test".into(), fingerprint(&test_set)?);
            manifest.substreams = ["model/extend", "train/shuffle", "train/dropout"].map(String::from).to_vec();
            manifest.protocol = Some(
                "cross-domain: the checkpoint was trained on the source domain; score the target pool, \
                 extend the vocabulary with the selection, fine-tune the checkpoint on it, report span F1 \
                 on the target test set"
                    .into(),
            );
            let data = RoundData {
                pool: &pool,
                dev: &dev_set,
                test: &test_set,
            };
            let r = cross_domain_round(&ckpt.tagger, data, strategy, ratio, aggregation, config)?;
            (r.round, Some((r.tagger, config.clone())))
        }
    };
    if strategy == Strategy::Random {
        manifest.substreams.insert(0, "select/random".into());
    }

    ensure_dir(out)?;
    write_file(out.join(SELECTION_FILE), serde_json::to_string_pretty(&round)?)?;
    let chosen: Vec<TaggedSentence> = round.selected.iter().map(|&i| pool[i].clone()).collect();
    if !chosen.is_empty() {
        write_conll(&chosen, out.join("selected.conll"))?;
    }
    if let Some((tagger, config)) = tagger {
        Checkpoint { tagger, config }.save(out.join(CHECKPOINT_FILE))?;
    }
    finish(manifest, started, out)?;
    Ok(round)
}

/// Case-study table for one data file.
pub fn inspect_cmd(checkpoint: &Path, data: &SplitInput, top_k: usize, out: &Path) -> Result<CaseTable> {
    let ckpt = load_checkpoint(checkpoint)?;
    let sentences = data.read(&ckpt.tagger.schema)?;
    let eval = evaluate(&ckpt.tagger, &sentences, 0)?;
    let tokens: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
    let table = dump_cases(&eval.records, &tokens, &ckpt.tagger.schema, top_k);
    ensure_dir(out)?;
    write_file(out.join(CASES_FILE), table.to_csv())?;
    Ok(table)
}
