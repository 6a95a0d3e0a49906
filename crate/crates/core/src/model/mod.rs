//! Context-window MLP tagger with evidential and softmax output heads.
//!
//! `logits = W_out · tanh(W_hid · [E(x_{i-w}); …; E(x_{i+w})] + b_hid) + b_out`
//!
//! Positions outside the sentence read the padding row of the embedding.

mod checkpoint;
mod optim;
mod train;

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, LabelSchema, TaggedSentence, Vocab, PAD_ID, UNK_ID};
use crate::dirichlet::DirichletOutput;
use crate::error::{Error, Result};
use crate::special::softplus_unchecked;

pub use checkpoint::{decode_checkpoint, load_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{evaluate, predict_tags, train, train_from, EpochLog, Evaluation, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    #[default]
    Evidential,
    Softmax,
}

/// Tensor dimensions of a tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub vocab_size: usize,
    pub num_classes: usize,
    /// Context radius `w`; the window holds `2w + 1` tokens.
    pub window: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl ModelShape {
    pub fn input_dim(&self) -> usize {
        (2 * self.window + 1) * self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.num_classes < 2 || self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Shape(format!("invalid model shape {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub shape: ModelShape,
    /// `V × d_e`
    pub embedding: Array2<f64>,
    /// `(2w+1)·d_e × d_h`
    pub w_hidden: Array2<f64>,
    pub b_hidden: Array1<f64>,
    /// `d_h × C`
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

pub const INIT_SCALE: f64 = 0.1;

impl ModelParams {
    pub fn zeros(shape: ModelShape) -> Result<Self> {
        shape.validate()?;
        Ok(ModelParams {
            shape,
            embedding: Array2::zeros((shape.vocab_size, shape.embed_dim)),
            w_hidden: Array2::zeros((shape.input_dim(), shape.hidden_dim)),
            b_hidden: Array1::zeros(shape.hidden_dim),
            w_out: Array2::zeros((shape.hidden_dim, shape.num_classes)),
            b_out: Array1::zeros(shape.num_classes),
        })
    }

    /// Weights uniform in `[-0.1, 0.1]`, biases zero.
    pub fn init(shape: ModelShape, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        for t in [&mut p.embedding, &mut p.w_hidden, &mut p.w_out] {
            t.mapv_inplace(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE));
        }
        Ok(p)
    }

    /// Parameter tensors as flat slices, in a fixed order.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.embedding.as_slice().expect("standard layout"),
            self.w_hidden.as_slice().expect("standard layout"),
            self.b_hidden.as_slice().expect("standard layout"),
            self.w_out.as_slice().expect("standard layout"),
            self.b_out.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.embedding.as_slice_mut().expect("standard layout"),
            self.w_hidden.as_slice_mut().expect("standard layout"),
            self.b_hidden.as_slice_mut().expect("standard layout"),
            self.w_out.as_slice_mut().expect("standard layout"),
            self.b_out.as_slice_mut().expect("standard layout"),
        ]
    }

    pub const TENSOR_NAMES: [&'static str; 5] = ["embedding", "w_hidden", "b_hidden", "w_out", "b_out"];

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::Shape("cannot tag an empty sentence".into()));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.shape.vocab_size) {
            return Err(Error::Shape(format!(
                "token id {bad} out of range for vocabulary of {}",
                self.shape.vocab_size
            )));
        }
        Ok(())
    }

    /// Logits for every token (`n × C`) and the activations needed by
    /// [`ModelParams::backward`].
    pub fn forward(&self, ids: &[usize]) -> Result<(Array2<f64>, ForwardTrace)> {
        self.forward_masked(ids, None)
    }

    /// Forward pass with an optional inverted-dropout mask on the hidden
    /// layer (`n × d_h`, entries 0 or `1/(1-rate)`).
    pub fn forward_masked(&self, ids: &[usize], mask: Option<Array2<f64>>) -> Result<(Array2<f64>, ForwardTrace)> {
        self.check_ids(ids)?;
        let n = ids.len();
        let w = self.shape.window;
        let d = self.shape.embed_dim;
        let mut windows = Vec::with_capacity(n * (2 * w + 1));
        let mut x = Array2::zeros((n, self.shape.input_dim()));
        for i in 0..n {
            for k in 0..=2 * w {
                let pos = i as isize + k as isize - w as isize;
                let id = if pos < 0 || pos >= n as isize { PAD_ID } else { ids[pos as usize] };
                windows.push(id);
                x.slice_mut(s![i, k * d..(k + 1) * d]).assign(&self.embedding.row(id));
            }
        }
        let mut hidden = x.dot(&self.w_hidden) + &self.b_hidden;
        hidden.mapv_inplace(f64::tanh);
        if let Some(m) = &mask {
            if m.dim() != hidden.dim() {
                return Err(Error::Shape(format!("dropout mask {:?} vs hidden {:?}", m.dim(), hidden.dim())));
            }
        }
        let trace = ForwardTrace {
            windows,
            input: x,
            hidden,
            mask,
        };
        let logits = trace.replay(self);
        Ok((logits, trace))
    }

    /// Gradient of a scalar loss given `∂loss/∂logits` (`n × C`).
    pub fn backward(&self, trace: &ForwardTrace, grad_logits: &Array2<f64>) -> Result<ModelParams> {
        let mut g = ModelParams::zeros(self.shape)?;
        self.backward_into(trace, grad_logits, &mut g)?;
        Ok(g)
    }

    /// Like [`ModelParams::backward`] but adds into an existing gradient.
    pub fn backward_into(&self, trace: &ForwardTrace, grad_logits: &Array2<f64>, grad: &mut ModelParams) -> Result<()> {
        let n = trace.hidden.nrows();
        if grad_logits.dim() != (n, self.shape.num_classes) {
            return Err(Error::Shape(format!(
                "upstream gradient {:?}, expected ({n}, {})",
                grad_logits.dim(),
                self.shape.num_classes
            )));
        }
        if grad.shape != self.shape {
            return Err(Error::Shape("gradient buffer has a different shape".into()));
        }
        let h = trace.dropped_hidden();
        grad.w_out += &h.t().dot(grad_logits);
        grad.b_out += &grad_logits.sum_axis(Axis(0));

        let mut dz = grad_logits.dot(&self.w_out.t());
        if let Some(m) = &trace.mask {
            dz *= m;
        }
        dz.zip_mut_with(&trace.hidden, |g, &a| *g *= 1.0 - a * a);
        grad.w_hidden += &trace.input.t().dot(&dz);
        grad.b_hidden += &dz.sum_axis(Axis(0));

        let dx = dz.dot(&self.w_hidden.t());
        let d = self.shape.embed_dim;
        let span = 2 * self.shape.window + 1;
        for i in 0..n {
            for k in 0..span {
                let id = trace.windows[i * span + k];
                let mut row = grad.embedding.row_mut(id);
                row += &dx.slice(s![i, k * d..(k + 1) * d]);
            }
        }
        Ok(())
    }
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Token id at every window slot, row-major `n × (2w+1)`.
    pub windows: Vec<usize>,
    /// Concatenated window embeddings, `n × (2w+1)·d_e`.
    pub input: Array2<f64>,
    /// Hidden activations after tanh, before dropout.
    pub hidden: Array2<f64>,
    pub mask: Option<Array2<f64>>,
}

impl ForwardTrace {
    fn dropped_hidden(&self) -> Array2<f64> {
        match &self.mask {
            Some(m) => &self.hidden * m,
            None => self.hidden.clone(),
        }
    }

    /// Recomputes the logits from the cached hidden layer.
    pub fn replay(&self, params: &ModelParams) -> Array2<f64> {
        self.dropped_hidden().dot(&params.w_out) + &params.b_out
    }
}

/// Evidential head: `e = softplus(logit)`, then the Dirichlet layer.
pub fn evidential_head(logits: &[f64]) -> DirichletOutput {
    let e: Vec<f64> = logits.iter().map(|&z| softplus_unchecked(z)).collect();
    DirichletOutput::from_evidence_unchecked(&e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxOutput {
    pub prob: Vec<f64>,
    /// `−Σ p ln p` in nats.
    pub entropy: f64,
}

/// Max-shifted softmax and its entropy.
pub fn softmax_head(logits: &[f64]) -> SoftmaxOutput {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = logits.iter().map(|z| z - m).collect();
    let exp: Vec<f64> = shifted.iter().map(|z| z.exp()).collect();
    let sum: f64 = exp.iter().sum();
    let log_sum = sum.ln();
    let prob: Vec<f64> = exp.iter().map(|e| e / sum).collect();
    // ln p = z - m - ln Σ; avoids 0·ln 0 for underflowed classes.
    let entropy = -prob
        .iter()
        .zip(&shifted)
        .map(|(p, z)| if *p > 0.0 { p * (z - log_sum) } else { 0.0 })
        .sum::<f64>();
    SoftmaxOutput {
        prob,
        entropy: entropy.max(0.0),
    }
}

/// A token decision with the head's confidence and uncertainty scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenPrediction {
    pub class: usize,
    /// Largest class probability.
    pub confidence: f64,
    /// `u = C/S` for the evidential head; entropy divided by `ln C` for the
    /// softmax head. Both lie in `[0, 1]`.
    pub uncertainty: f64,
}

pub fn predict_from_logits(head: Head, logits: &[f64]) -> TokenPrediction {
    match head {
        Head::Evidential => {
            let p = evidential_head(logits).predict();
            TokenPrediction {
                class: p.class_index,
                confidence: p.confidence,
                uncertainty: p.uncertainty,
            }
        }
        Head::Softmax => {
            let out = softmax_head(logits);
            let class = crate::dirichlet::argmax(&out.prob);
            TokenPrediction {
                class,
                confidence: out.prob[class],
                uncertainty: (out.entropy / (logits.len() as f64).ln()).min(1.0),
            }
        }
    }
}

/// Trained parameters bundled with everything needed to tag raw tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger {
    pub params: ModelParams,
    pub head: Head,
    pub vocab: Vocab,
    pub schema: LabelSchema,
}

impl Tagger {
    pub fn predict(&self, tokens: &[String]) -> Result<Vec<TokenPrediction>> {
        let ids = self.vocab.encode(tokens);
        let (logits, _) = self.params.forward(&ids)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|row| predict_from_logits(self.head, row.as_slice().expect("contiguous row")))
            .collect())
    }

    /// Appends tokens of `sentences` seen at least `min_count` times and not
    /// yet known. Existing ids and rows are kept; new rows are drawn like a
    /// fresh initialisation.
    pub fn extend_vocab(&self, sentences: &[TaggedSentence], min_count: usize, rng: &mut ChaCha8Rng) -> Result<Tagger> {
        let mut tokens = self.vocab.tokens().to_vec();
        if !sentences.is_empty() {
            let extra = build_vocab(sentences, min_count)?;
            for t in &extra.tokens()[2..] {
                if self.vocab.id(t) == UNK_ID {
                    tokens.push(t.clone());
                }
            }
        }
        let vocab = Vocab::from_tokens(tokens)?;
        let old = self.params.shape.vocab_size;
        let shape = ModelShape {
            vocab_size: vocab.len(),
            ..self.params.shape
        };
        let mut embedding = Array2::zeros((shape.vocab_size, shape.embed_dim));
        embedding.slice_mut(s![..old, ..]).assign(&self.params.embedding);
        embedding
            .slice_mut(s![old.., ..])
            .mapv_inplace(|_: f64| rng.gen_range(-INIT_SCALE..=INIT_SCALE));
        Ok(Tagger {
            params: ModelParams {
                shape,
                embedding,
                ..self.params.clone()
            },
            head: self.head,
            vocab,
            schema: self.schema.clone(),
        })
    }
}
