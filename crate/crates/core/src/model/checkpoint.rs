//! Checkpoint container: a JSON document holding the training config, label
//! schema, vocabulary (with its hash) and every parameter tensor as base64
//! little-endian `f64`, so values round-trip bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Head, ModelParams, ModelShape, Tagger, TrainConfig};
use crate::corpus::{LabelSchema, Vocab};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "ener-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tagger: Tagger,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    config: TrainConfig,
    head: Head,
    shape: ModelShape,
    entity_types: Vec<String>,
    vocab_hash: String,
    vocab: Vec<String>,
    tensors: BTreeMap<String, Tensor>,
}

fn encode_tensor(shape: Vec<usize>, values: &[f64]) -> Tensor {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Tensor {
        shape,
        data: B64.encode(bytes),
    }
}

fn decode_tensor(name: &str, t: &Tensor, want: &[usize]) -> Result<Vec<f64>> {
    if t.shape != want {
        return Err(Error::Checkpoint(format!(
            "tensor `{name}` has shape {:?}, expected {want:?}",
            t.shape
        )));
    }
    let bytes = B64
        .decode(&t.data)
        .map_err(|e| Error::Checkpoint(format!("tensor `{name}`: {e}")))?;
    let len: usize = want.iter().product();
    if bytes.len() != len * 8 {
        return Err(Error::Checkpoint(format!(
            "tensor `{name}` holds {} bytes, expected {}",
            bytes.len(),
            len * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Checkpoint(format!("tensor `{name}` contains non-finite values")));
    }
    Ok(values)
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let p = &self.tagger.params;
        let mut tensors = BTreeMap::new();
        let shapes = tensor_shapes(&p.shape);
        for ((name, values), shape) in ModelParams::TENSOR_NAMES.iter().zip(p.tensors()).zip(shapes) {
            tensors.insert(name.to_string(), encode_tensor(shape, values));
        }
        let doc = Document {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            head: self.tagger.head,
            shape: p.shape,
            entity_types: self.tagger.schema.entity_types().to_vec(),
            vocab_hash: self.tagger.vocab.hash(),
            vocab: self.tagger.vocab.tokens().to_vec(),
            tensors,
        };
        serde_json::to_string_pretty(&doc).expect("checkpoint serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

fn tensor_shapes(s: &ModelShape) -> [Vec<usize>; 5] {
    [
        vec![s.vocab_size, s.embed_dim],
        vec![s.input_dim(), s.hidden_dim],
        vec![s.hidden_dim],
        vec![s.hidden_dim, s.num_classes],
        vec![s.num_classes],
    ]
}

/// Parses and validates a checkpoint document.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Checkpoint(format!("not UTF-8: {e}")))?;
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if doc.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unknown format `{}`", doc.format)));
    }
    if doc.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", doc.version)));
    }
    let vocab = Vocab::from_tokens(doc.vocab).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if vocab.hash() != doc.vocab_hash {
        return Err(Error::Checkpoint("vocabulary hash does not match the stored vocabulary".into()));
    }
    let schema = LabelSchema::new(&doc.entity_types).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let shape = doc.shape;
    if shape.vocab_size != vocab.len() || shape.num_classes != schema.num_classes() {
        return Err(Error::Checkpoint(format!(
            "shape {shape:?} disagrees with vocabulary ({}) or schema ({})",
            vocab.len(),
            schema.num_classes()
        )));
    }
    shape.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    // Refuse sizes that would overflow or exhaust memory before decoding.
    let total = tensor_shapes(&shape)
        .iter()
        .try_fold(0usize, |acc, s| {
            s.iter().try_fold(1usize, |a, d| a.checked_mul(*d)).and_then(|n| acc.checked_add(n))
        })
        .ok_or_else(|| Error::Checkpoint("tensor sizes overflow".into()))?;
    let stored: usize = doc.tensors.values().map(|t| t.data.len()).sum();
    if total.checked_mul(8).is_none_or(|b| b > stored) {
        return Err(Error::Checkpoint("tensor data is shorter than the declared shape".into()));
    }
    if doc.tensors.len() != ModelParams::TENSOR_NAMES.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors", ModelParams::TENSOR_NAMES.len())));
    }

    let get = |name: &str, want: &[usize]| -> Result<Vec<f64>> {
        let t = doc
            .tensors
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))?;
        decode_tensor(name, t, want)
    };
    let [s_emb, s_wh, s_bh, s_wo, s_bo] = tensor_shapes(&shape);
    let to2 = |v: Vec<f64>, s: &[usize]| Array2::from_shape_vec((s[0], s[1]), v).expect("length checked");
    let params = ModelParams {
        shape,
        embedding: to2(get("embedding", &s_emb)?, &s_emb),
        w_hidden: to2(get("w_hidden", &s_wh)?, &s_wh),
        b_hidden: Array1::from_vec(get("b_hidden", &s_bh)?),
        w_out: to2(get("w_out", &s_wo)?, &s_wo),
        b_out: Array1::from_vec(get("b_out", &s_bo)?),
    };
    Ok(Checkpoint {
        tagger: Tagger {
            params,
            head: doc.head,
            vocab,
            schema,
        },
        config: doc.config,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
