use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Head, ModelParams, ModelShape, Optimizer, OptimizerKind, Tagger};
use crate::corpus::{build_vocab, LabelSchema, TaggedSentence};
use crate::error::{Error, Result};
use crate::losses::{overall_loss, Ablation, AnnealState, Lambda1Schedule, OneHot};
use crate::metrics::{ece, span_f1, PredictionRecord, DEFAULT_BINS};
use crate::rng::substream;
use crate::special::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seed: u64,
    pub head: Head,
    pub lambda0: f64,
    pub lambda1: Lambda1Schedule,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub window: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub batch_size: usize,
    /// Training tokens seen fewer times than this map to `<unk>`.
    pub min_count: usize,
    /// Inverted dropout on the hidden layer; 0 disables it.
    pub dropout: f64,
    pub disable_iw: bool,
    pub disable_unm: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            head: Head::Evidential,
            lambda0: 1e-2,
            lambda1: Lambda1Schedule::LinearRamp,
            epochs: 50,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            window: 2,
            embed_dim: 32,
            hidden_dim: 64,
            batch_size: 32,
            min_count: 2,
            dropout: 0.0,
            disable_iw: false,
            disable_unm: false,
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: TrainConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| {
            Err(Error::Config {
                path: path.into(),
                message,
            })
        };
        if !(self.lambda0 > 0.0 && self.lambda0 < 1.0) {
            return bad("lambda0", format!("must lie in (0, 1), got {}", self.lambda0));
        }
        if let Lambda1Schedule::Constant { value } = self.lambda1 {
            if !(0.0..=1.0).contains(&value) {
                return bad("lambda1.value", format!("must lie in [0, 1], got {value}"));
            }
        }
        if self.epochs == 0 {
            return bad("epochs", "must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", format!("must be > 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1", "beta1 and beta2 must lie in [0, 1)".into());
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be > 0".into());
        }
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return bad(name, "must be >= 1".into());
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout", format!("must lie in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }

    pub fn ablation(&self) -> Ablation {
        Ablation {
            disable_iw: self.disable_iw,
            disable_unm: self.disable_unm,
        }
    }
}

/// One row of the training log. Epoch 0 describes the initial model.
///
/// Loss columns are sums over the epoch's training tokens. Columns that do
/// not apply to the configured head or ablation are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda2: Option<f64>,
    /// Importance-weighted classification loss.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l_iw: Option<f64>,
    /// Unweighted classification loss (IW disabled).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l_cls: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l_kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l_unm: Option<f64>,
    /// Cross-entropy of the softmax head.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l_ce: Option<f64>,
    pub total: f64,
    pub dev_f1: f64,
    pub dev_ece: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best dev F1 (lower dev ECE on ties).
    pub tagger: Tagger,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Predicted tags and per-token records for a list of sentences. Sentence
/// ids are positions in `sentences` plus `id_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predicted: Vec<Vec<usize>>,
    pub records: Vec<PredictionRecord>,
}

pub fn evaluate(tagger: &Tagger, sentences: &[TaggedSentence], id_offset: usize) -> Result<Evaluation> {
    let mut predicted = Vec::with_capacity(sentences.len());
    let mut records = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        let gold = tagger.schema.label_ids(s)?;
        let preds = tagger.predict(&s.tokens)?;
        let mut tags = Vec::with_capacity(preds.len());
        for (j, (p, g)) in preds.iter().zip(gold).enumerate() {
            let r = PredictionRecord {
                sentence_id: id_offset + i,
                token_index: j,
                gold: g,
                predicted: p.class,
                confidence: p.confidence,
                uncertainty: p.uncertainty,
                origin: s.origin,
            };
            r.validate()?;
            records.push(r);
            tags.push(p.class);
        }
        predicted.push(tags);
    }
    Ok(Evaluation { predicted, records })
}

/// Predicted tag ids for each sentence.
pub fn predict_tags(tagger: &Tagger, sentences: &[TaggedSentence]) -> Result<Vec<Vec<usize>>> {
    Ok(evaluate(tagger, sentences, 0)?.predicted)
}

fn dev_scores(tagger: &Tagger, dev: &[TaggedSentence]) -> Result<(f64, f64)> {
    if dev.is_empty() {
        return Ok((0.0, 0.0));
    }
    let eval = evaluate(tagger, dev, 0)?;
    let gold: Vec<Vec<usize>> = dev.iter().map(|s| tagger.schema.label_ids(s)).collect::<Result<_>>()?;
    let f1 = span_f1(&tagger.schema, &gold, &eval.predicted)?.f1;
    let (e, _) = ece(&eval.records, DEFAULT_BINS)?;
    Ok((f1, e))
}

struct Encoded {
    ids: Vec<usize>,
    labels: Vec<OneHot>,
}

fn encode_all(tagger: &Tagger, sentences: &[TaggedSentence]) -> Result<Vec<Encoded>> {
    let c = tagger.schema.num_classes();
    sentences
        .iter()
        .map(|s| {
            let labels = tagger
                .schema
                .label_ids(s)?
                .into_iter()
                .map(|y| OneHot::new(y, c))
                .collect::<Result<_>>()?;
            Ok(Encoded {
                ids: tagger.vocab.encode(&s.tokens),
                labels,
            })
        })
        .collect()
}

#[derive(Default)]
struct LossSums {
    cls_or_iw: f64,
    kl: f64,
    unm: f64,
    total: f64,
}

/// Loss of one sentence and its gradient with respect to the logits.
fn sentence_loss(
    head: Head,
    logits: &Array2<f64>,
    labels: &[OneHot],
    anneal: &AnnealState,
    ablation: Ablation,
    sums: &mut LossSums,
) -> Result<Array2<f64>> {
    let (n, c) = logits.dim();
    let mut grad = Array2::zeros((n, c));
    match head {
        Head::Evidential => {
            let outputs: Vec<_> = logits
                .rows()
                .into_iter()
                .map(|r| super::evidential_head(r.as_slice().expect("contiguous row")))
                .collect();
            let loss = overall_loss(&outputs, labels, anneal, ablation)?;
            sums.cls_or_iw += loss.cls_or_iw;
            sums.kl += loss.kl;
            sums.unm += loss.unm;
            sums.total += loss.total;
            for (i, g) in loss.grad_alpha.iter().enumerate() {
                for j in 0..c {
                    // dα/dz = softplus'(z) = sigmoid(z)
                    grad[[i, j]] = g[j] * sigmoid(logits[[i, j]]);
                }
            }
        }
        Head::Softmax => {
            for (i, y) in labels.iter().enumerate() {
                let row = logits.row(i);
                let out = super::softmax_head(row.as_slice().expect("contiguous row"));
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + row.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
                let ce = lse - row[y.class()];
                sums.cls_or_iw += ce;
                sums.total += ce;
                for j in 0..c {
                    grad[[i, j]] = out.prob[j] - if j == y.class() { 1.0 } else { 0.0 };
                }
            }
        }
    }
    Ok(grad)
}

fn log_row(config: &TrainConfig, epoch: usize, anneal: &AnnealState, sums: &LossSums, dev: (f64, f64)) -> EpochLog {
    let evidential = config.head == Head::Evidential;
    let ev = |v: f64| evidential.then_some(v);
    EpochLog {
        epoch,
        lambda1: ev(anneal.lambda1),
        lambda2: ev(anneal.lambda2),
        l_iw: (evidential && !config.disable_iw).then_some(sums.cls_or_iw),
        l_cls: (evidential && config.disable_iw).then_some(sums.cls_or_iw),
        l_kl: ev(sums.kl),
        l_unm: ev(sums.unm),
        l_ce: (!evidential).then_some(sums.cls_or_iw),
        total: sums.total,
        dev_f1: dev.0,
        dev_ece: dev.1,
    }
}

fn check_finite(sums: &LossSums, epoch: usize) -> Result<()> {
    if sums.total.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite training loss at epoch {epoch}")))
    }
}

/// Trains a fresh tagger. The vocabulary is built from `train`.
pub fn train(
    train: &[TaggedSentence],
    dev: &[TaggedSentence],
    schema: &LabelSchema,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let vocab = build_vocab(train, config.min_count)?;
    let shape = ModelShape {
        vocab_size: vocab.len(),
        num_classes: schema.num_classes(),
        window: config.window,
        embed_dim: config.embed_dim,
        hidden_dim: config.hidden_dim,
    };
    let mut init_rng = substream(config.seed, "model/init");
    let params = ModelParams::init(shape, &mut init_rng)?;
    let tagger = Tagger {
        params,
        head: config.head,
        vocab,
        schema: schema.clone(),
    };
    train_from(tagger, train, dev, config)
}

/// Continues training `start` (its vocabulary, schema and parameters) on
/// `train`. The head is taken from `config`.
pub fn train_from(
    start: Tagger,
    train: &[TaggedSentence],
    dev: &[TaggedSentence],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let mut tagger = Tagger {
        head: config.head,
        ..start
    };
    let data = encode_all(&tagger, train)?;
    let ablation = config.ablation();
    let total_epochs = config.epochs;
    let mut optimizer = match config.optimizer {
        OptimizerKind::Sgd => Optimizer::sgd(config.learning_rate),
        OptimizerKind::Adam => Optimizer::adam(
            &tagger.params,
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.epsilon,
        )?,
    };
    let mut shuffle_rng = substream(config.seed, "train/shuffle");
    let mut dropout_rng = substream(config.seed, "train/dropout");
    let mut log = Vec::with_capacity(total_epochs + 1);

    // Epoch 0: the starting model, no update.
    {
        let anneal = AnnealState::new(config.lambda0, 0, total_epochs, config.lambda1)?;
        let mut sums = LossSums::default();
        for ex in &data {
            let (logits, _) = tagger.params.forward(&ex.ids)?;
            sentence_loss(config.head, &logits, &ex.labels, &anneal, ablation, &mut sums)?;
        }
        check_finite(&sums, 0)?;
        log.push(log_row(config, 0, &anneal, &sums, dev_scores(&tagger, dev)?));
    }

    let mut best: Option<(f64, f64, usize, ModelParams)> = None;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = ModelParams::zeros(tagger.params.shape)?;
    let hidden = tagger.params.shape.hidden_dim;
    for epoch in 1..=total_epochs {
        let anneal = AnnealState::new(config.lambda0, epoch, total_epochs, config.lambda1)?;
        order.shuffle(&mut shuffle_rng);
        let mut sums = LossSums::default();
        for batch in order.chunks(config.batch_size) {
            for t in grad.tensors_mut() {
                t.fill(0.0);
            }
            for &k in batch {
                let ex = &data[k];
                let mask = (config.dropout > 0.0).then(|| {
                    let keep = 1.0 / (1.0 - config.dropout);
                    Array2::from_shape_fn((ex.ids.len(), hidden), |_| {
                        if dropout_rng.gen::<f64>() < config.dropout {
                            0.0
                        } else {
                            keep
                        }
                    })
                });
                let (logits, trace) = tagger.params.forward_masked(&ex.ids, mask)?;
                let g = sentence_loss(config.head, &logits, &ex.labels, &anneal, ablation, &mut sums)?;
                tagger.params.backward_into(&trace, &g, &mut grad)?;
            }
            check_finite(&sums, epoch)?;
            optimizer.step(&mut tagger.params, &grad);
        }
        if !tagger.params.is_finite() {
            return Err(Error::Numeric(format!("parameters became non-finite at epoch {epoch}")));
        }
        let dev_score = dev_scores(&tagger, dev)?;
        log.push(log_row(config, epoch, &anneal, &sums, dev_score));

        let better = match &best {
            None => true,
            Some((f1, e, _, _)) => dev_score.0 > *f1 || (dev_score.0 == *f1 && dev_score.1 < *e),
        };
        if better {
            best = Some((dev_score.0, dev_score.1, epoch, tagger.params.clone()));
        }
    }
    let (_, _, best_epoch, params) = best.expect("at least one epoch");
    tagger.params = params;
    Ok(TrainOutcome {
        tagger,
        best_epoch,
        log,
    })
}
