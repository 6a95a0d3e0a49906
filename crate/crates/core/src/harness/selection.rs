use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSchema, TaggedSentence};
use crate::error::{Error, Result};
use crate::metrics::span_f1;
use crate::model::{predict_tags, train, train_from, Head, Tagger, TrainConfig};
use crate::rng::substream;

/// How pool sentences are scored for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    /// Softmax entropy of a softmax-head model.
    Entropy,
    /// Uncertainty mass of a vanilla evidential model.
    Edl,
    /// Uncertainty mass of a full E-NER model.
    ENer,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Random, Strategy::Entropy, Strategy::Edl, Strategy::ENer];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Entropy => "entropy",
            Strategy::Edl => "edl",
            Strategy::ENer => "e_ner",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown strategy `{s}` (expected random, entropy, edl or e_ner)")))
    }
}

/// How token scores combine into a sentence score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

/// Outcome of one selection round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRound {
    pub strategy: Strategy,
    pub ratio: f64,
    /// Pool positions, ascending.
    pub selected: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_retrain_f1: Option<f64>,
}

/// `⌈ratio · pool_len⌉`.
pub fn selection_size(ratio: f64, pool_len: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Data(format!("selection ratio {ratio} outside (0, 1]")));
    }
    // Absorb the representation error of decimal ratios such as 0.055.
    let k = (ratio * pool_len as f64 - 1e-9).ceil().max(0.0) as usize;
    Ok(k.min(pool_len))
}

/// One score per pool sentence; higher means more worth labelling.
pub fn sentence_scores(
    tagger: &Tagger,
    pool: &[TaggedSentence],
    strategy: Strategy,
    aggregation: Aggregation,
    seed: u64,
) -> Result<Vec<f64>> {
    match strategy {
        Strategy::Random => {
            let mut rng = substream(seed, "select/random");
            return Ok(pool.iter().map(|_| rng.gen::<f64>()).collect());
        }
        Strategy::Entropy if tagger.head != Head::Softmax => {
            return Err(Error::Data("the entropy strategy needs a softmax-head checkpoint".into()));
        }
        Strategy::Edl | Strategy::ENer if tagger.head != Head::Evidential => {
            return Err(Error::Data(format!(
                "the {} strategy needs an evidential-head checkpoint",
                strategy.as_str()
            )));
        }
        _ => {}
    }
    pool.iter()
        .map(|s| {
            let preds = tagger.predict(&s.tokens)?;
            let us = preds.iter().map(|p| p.uncertainty);
            Ok(match aggregation {
                Aggregation::Mean => us.sum::<f64>() / preds.len() as f64,
                Aggregation::Max => us.fold(0.0, f64::max),
            })
        })
        .collect()
}

/// Positions of the `k` highest scores, ties to the lower position, returned
/// in ascending order.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();
    chosen
}

pub fn select(
    tagger: &Tagger,
    pool: &[TaggedSentence],
    strategy: Strategy,
    ratio: f64,
    aggregation: Aggregation,
    seed: u64,
) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::Data("selection pool is empty".into()));
    }
    let k = selection_size(ratio, pool.len())?;
    let scores = sentence_scores(tagger, pool, strategy, aggregation, seed)?;
    Ok(top_k(&scores, k))
}

/// Span F1 of `tagger` on `sentences`.
pub fn f1_on(tagger: &Tagger, sentences: &[TaggedSentence]) -> Result<f64> {
    let gold: Vec<Vec<usize>> = sentences.iter().map(|s| tagger.schema.label_ids(s)).collect::<Result<_>>()?;
    let pred = predict_tags(tagger, sentences)?;
    Ok(span_f1(&tagger.schema, &gold, &pred)?.f1)
}

#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub round: SelectionRound,
    pub tagger: Tagger,
}

/// Data shared by the rounds: the pool to select from, plus dev and test
/// sets for model choice and the post-retrain score.
#[derive(Debug, Clone, Copy)]
pub struct RoundData<'a> {
    pub pool: &'a [TaggedSentence],
    pub dev: &'a [TaggedSentence],
    pub test: &'a [TaggedSentence],
}

/// In-domain round: score the pool with `scorer`, add the selection to
/// `labeled` and train a fresh model on the union with `config`.
pub fn active_learning_round(
    scorer: &Tagger,
    labeled: &[TaggedSentence],
    data: RoundData<'_>,
    strategy: Strategy,
    ratio: f64,
    aggregation: Aggregation,
    config: &TrainConfig,
) -> Result<RoundOutcome> {
    let selected = select(scorer, data.pool, strategy, ratio, aggregation, config.seed)?;
    let mut merged = labeled.to_vec();
    merged.extend(selected.iter().map(|&i| data.pool[i].clone()));
    let schema: &LabelSchema = &scorer.schema;
    let outcome = train(&merged, data.dev, schema, config)?;
    finish(strategy, ratio, selected, outcome.tagger, data.test)
}

/// Cross-domain round: `source` was trained on another domain. Select from
/// the target pool, extend the vocabulary with the selection and fine-tune
/// `source` on it.
pub fn cross_domain_round(
    source: &Tagger,
    data: RoundData<'_>,
    strategy: Strategy,
    ratio: f64,
    aggregation: Aggregation,
    config: &TrainConfig,
) -> Result<RoundOutcome> {
    let selected = select(source, data.pool, strategy, ratio, aggregation, config.seed)?;
    let chosen: Vec<TaggedSentence> = selected.iter().map(|&i| data.pool[i].clone()).collect();
    let mut rng = substream(config.seed, "model/extend");
    let start = source.extend_vocab(&chosen, config.min_count, &mut rng)?;
    let outcome = train_from(start, &chosen, data.dev, config)?;
    finish(strategy, ratio, selected, outcome.tagger, data.test)
}

fn finish(
    strategy: Strategy,
    ratio: f64,
    selected: Vec<usize>,
    tagger: Tagger,
    test: &[TaggedSentence],
) -> Result<RoundOutcome> {
    let f1 = if test.is_empty() { None } else { Some(f1_on(&tagger, test)?) };
    Ok(RoundOutcome {
        round: SelectionRound {
            strategy,
            ratio,
            selected,
            post_retrain_f1: f1,
        },
        tagger,
    })
}
