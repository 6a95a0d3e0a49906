use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ener::corpus::{generate, GeneratorConfig, LabelSchema, Splits};
use ener::harness::{
    active_learning_round, detect_cmd, eval_cmd, gen_data, inspect_cmd, select_cmd, train_cmd, Aggregation,
    EvalOptions, Retrain, RoundData, SelectOptions, SplitInput, Strategy,
};
use ener::metrics::{detection_sets, ece, span_f1, TieRule, DEFAULT_BINS};
use ener::model::{evaluate, predict_tags, train, Head, Tagger, TrainConfig};
use ener::rng::substream;
use rand::seq::SliceRandom;

use crate::Verdict;

pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    ENer,
    Softmax,
    NoUnm,
    NoIw,
}

impl Variant {
    const ALL: [Variant; 4] = [Variant::ENer, Variant::Softmax, Variant::NoUnm, Variant::NoIw];

    fn config(self, seed: u64) -> TrainConfig {
        let base = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        match self {
            Variant::ENer => base,
            Variant::Softmax => TrainConfig {
                head: Head::Softmax,
                ..base
            },
            Variant::NoUnm => TrainConfig {
                disable_unm: true,
                ..base
            },
            Variant::NoIw => TrainConfig {
                disable_iw: true,
                ..base
            },
        }
    }
}

/// Test-set scores of one trained model.
#[derive(Debug, Clone)]
pub struct Scores {
    pub f1: f64,
    pub ece: f64,
    /// Unc AUC on typo, unseen and OOD, each pooled with the in-domain test set.
    pub unc_auc: [f64; 3],
}

pub struct SeedRuns {
    scores: BTreeMap<(Variant, u64), Scores>,
}

impl SeedRuns {
    pub fn len(&self) -> usize {
        SEEDS.len()
    }

    fn mean(&self, variant: Variant, f: impl Fn(&Scores) -> f64) -> f64 {
        SEEDS.iter().map(|s| f(&self.scores[&(variant, *s)])).sum::<f64>() / SEEDS.len() as f64
    }
}

fn score(tagger: &Tagger, splits: &Splits) -> Scores {
    let schema = &tagger.schema;
    let id = evaluate(tagger, &splits.test_id, 0).unwrap();
    let gold: Vec<Vec<usize>> = splits.test_id.iter().map(|s| schema.label_ids(s).unwrap()).collect();
    let pred = predict_tags(tagger, &splits.test_id).unwrap();
    let f1 = span_f1(schema, &gold, &pred).unwrap().f1;
    let ece_value = ece(&id.records, DEFAULT_BINS).unwrap().0;
    let mut unc_auc = [0.0; 3];
    let shifted = [&splits.test_oov_typo, &splits.test_oov_unseen, &splits.test_ood];
    for (k, set) in shifted.into_iter().enumerate() {
        let mut records = id.records.clone();
        records.extend(evaluate(tagger, set, splits.test_id.len()).unwrap().records);
        unc_auc[k] = detection_sets(&records).unc_auc(TieRule::Literal).unwrap();
    }
    Scores {
        f1,
        ece: ece_value,
        unc_auc,
    }
}

/// Trains every variant on every seed's default corpus.
pub fn seed_runs() -> SeedRuns {
    let schema = LabelSchema::default();
    let mut scores = BTreeMap::new();
    for seed in SEEDS {
        let splits = generate(&GeneratorConfig {
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap();
        for variant in Variant::ALL {
            let tagger = train(&splits.train, &splits.dev, &schema, &variant.config(seed)).unwrap().tagger;
            let s = score(&tagger, &splits);
            println!(
                "     seed {seed} {variant:?}: F1 {:.4} ECE {:.4} Unc AUC {:.3}/{:.3}/{:.3}",
                s.f1, s.ece, s.unc_auc[0], s.unc_auc[1], s.unc_auc[2]
            );
            scores.insert((variant, seed), s);
        }
    }
    SeedRuns { scores }
}

pub fn calibration(runs: &SeedRuns) -> Verdict {
    let (ener_ece, soft_ece) = (runs.mean(Variant::ENer, |s| s.ece), runs.mean(Variant::Softmax, |s| s.ece));
    let (ener_f1, soft_f1) = (runs.mean(Variant::ENer, |s| s.f1), runs.mean(Variant::Softmax, |s| s.f1));
    Verdict::new(
        ener_ece < soft_ece && ener_f1 >= soft_f1 - 0.02,
        format!("ECE E-NER {ener_ece:.4} vs softmax {soft_ece:.4}; F1 E-NER {ener_f1:.4} vs softmax {soft_f1:.4}"),
    )
}

pub fn detection(runs: &SeedRuns) -> Verdict {
    let names = ["typo", "unseen", "ood"];
    let mut above_half = true;
    let mut wins = 0;
    let mut parts = Vec::new();
    for k in 0..3 {
        let e = runs.mean(Variant::ENer, |s| s.unc_auc[k]);
        let b = runs.mean(Variant::Softmax, |s| s.unc_auc[k]);
        above_half &= e > 0.5;
        wins += usize::from(e > b);
        parts.push(format!("{} {e:.3} vs {b:.3}", names[k]));
    }
    Verdict::new(
        above_half && wins >= 2,
        format!("Unc AUC E-NER vs entropy: {}; E-NER ahead on {wins} of 3", parts.join(", ")),
    )
}

pub fn ablations(runs: &SeedRuns) -> Verdict {
    let full_ece = runs.mean(Variant::ENer, |s| s.ece);
    let no_unm_ece = runs.mean(Variant::NoUnm, |s| s.ece);
    let full_f1 = runs.mean(Variant::ENer, |s| s.f1);
    let no_iw_f1 = runs.mean(Variant::NoIw, |s| s.f1);
    Verdict::new(
        no_unm_ece > full_ece && no_iw_f1 < full_f1,
        format!(
            "ECE −UNM {no_unm_ece:.4} vs full {full_ece:.4}; F1 −IW {no_iw_f1:.4} vs full {full_f1:.4}"
        ),
    )
}

/// Labeled seed set drawn from the training split; the rest is the pool.
const SEED_SET: usize = 500;
const BUDGET: f64 = 0.055;

pub fn selection() -> Verdict {
    let schema = LabelSchema::default();
    let mut strict = 0;
    let (mut ener_sum, mut random_sum) = (0.0, 0.0);
    let mut per_seed = Vec::new();
    for seed in SEEDS {
        let splits = generate(&GeneratorConfig {
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let mut order: Vec<usize> = (0..splits.train.len()).collect();
        order.shuffle(&mut substream(seed, "select/seed-set"));
        let labeled: Vec<_> = order[..SEED_SET].iter().map(|&i| splits.train[i].clone()).collect();
        let pool: Vec<_> = order[SEED_SET..].iter().map(|&i| splits.train[i].clone()).collect();
        let config = Variant::ENer.config(seed);
        let scorer = train(&labeled, &splits.dev, &schema, &config).unwrap().tagger;
        let data = RoundData {
            pool: &pool,
            dev: &splits.dev,
            test: &splits.test_id,
        };
        let f1 = |strategy| {
            active_learning_round(&scorer, &labeled, data, strategy, BUDGET, Aggregation::Mean, &config)
                .unwrap()
                .round
                .post_retrain_f1
                .unwrap()
        };
        let (e, r) = (f1(Strategy::ENer), f1(Strategy::Random));
        strict += usize::from(e > r);
        ener_sum += e;
        random_sum += r;
        per_seed.push(format!("{e:.4}/{r:.4}"));
    }
    let n = SEEDS.len() as f64;
    let (ener_mean, random_mean) = (ener_sum / n, random_sum / n);
    Verdict::new(
        ener_mean >= random_mean && strict >= 4,
        format!(
            "F1 E-NER {ener_mean:.4} vs random {random_mean:.4}; strictly better in {strict} of 5 (per seed {})",
            per_seed.join(" ")
        ),
    )
}

fn pipeline(root: &Path) {
    let data = root.join("data");
    gen_data(&GeneratorConfig::default(), &data).unwrap();
    let config = TrainConfig {
        epochs: 5,
        dropout: 0.1,
        ..TrainConfig::default()
    };
    let run = root.join("train");
    train_cmd(&data.join("train.conll"), &data.join("dev.conll"), &LabelSchema::default(), &config, &run).unwrap();
    let ckpt = run.join("checkpoint.json");
    let splits: Vec<SplitInput> = ["test_id", "test_oov_typo", "test_oov_unseen", "test_ood"]
        .iter()
        .map(|n| SplitInput::new(n, data.join(format!("{n}.conll"))))
        .collect();
    eval_cmd(&ckpt, &splits, &EvalOptions::default(), &root.join("eval")).unwrap();
    let shifted = ["test_oov_typo", "test_oov_unseen", "test_ood"].map(|n| data.join(format!("{n}.conll")));
    detect_cmd(
        &ckpt,
        &data.join("test_id.conll"),
        [&shifted[0], &shifted[1], &shifted[2]],
        TieRule::Literal,
        &root.join("detect"),
    )
    .unwrap();
    for strategy in [Strategy::Random, Strategy::ENer] {
        let options = SelectOptions {
            strategy,
            ratio: BUDGET,
            aggregation: Aggregation::Mean,
            seed: 0,
        };
        let retrain = Retrain::InDomain {
            labeled: None,
            dev: data.join("dev.conll"),
            test: data.join("test_id.conll"),
            config: config.clone(),
        };
        let out = root.join(format!("select_{}", strategy.as_str()));
        select_cmd(&ckpt, &data.join("train.conll"), options, Some(&retrain), &out).unwrap();
    }
    inspect_cmd(&ckpt, &splits[3], 10, &root.join("inspect")).unwrap();
}

fn collect(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(&path, base, out);
        } else {
            let mut bytes = fs::read(&path).unwrap();
            if path.file_name().is_some_and(|n| n == "manifest.json") {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text
                    .lines()
                    .filter(|l| !l.contains("wall_clock_seconds"))
                    .collect::<Vec<_>>()
                    .join("\n")
                    .into_bytes();
            }
            out.insert(path.strip_prefix(base).unwrap().display().to_string(), bytes);
        }
    }
}

pub fn determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    collect(a.path(), a.path(), &mut fa);
    collect(b.path(), b.path(), &mut fb);
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    let same_files = fa.keys().eq(fb.keys());
    Verdict::new(
        same_files && differing.is_empty() && fa.len() > 20,
        if differing.is_empty() {
            format!("{} output files identical across two runs", fa.len())
        } else {
            format!("differing outputs: {differing:?}")
        },
    )
}
