//! Template-based synthetic NER corpus with shifted test sets.
//!
//! Sentences are drawn by filling entity slots in templates. Entity surface
//! forms follow a Zipf distribution over the lexicon, so rare training
//! entities are partly absent from the training split, as in real corpora.
//! Template choice is steered so that the share of entity tokens stays near
//! the configured target rate.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{default_id_lexicons, default_id_templates, default_ood_lexicon, default_ood_templates};
use super::{LabelSchema, Lexicon, Origin, TaggedSentence};
use crate::error::{Error, Result};
use crate::rng::substream;

/// File stems of the generated splits, in generation order.
pub const SPLIT_NAMES: [&str; 6] = ["train", "dev", "test_id", "test_oov_typo", "test_oov_unseen", "test_ood"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test_id: usize,
    pub test_oov_typo: usize,
    pub test_oov_unseen: usize,
    pub test_ood: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes {
            train: 1000,
            dev: 200,
            test_id: 400,
            test_oov_typo: 300,
            test_oov_unseen: 300,
            test_ood: 300,
        }
    }
}

impl SplitSizes {
    fn get(&self, name: &str) -> usize {
        match name {
            "train" => self.train,
            "dev" => self.dev,
            "test_id" => self.test_id,
            "test_oov_typo" => self.test_oov_typo,
            "test_oov_unseen" => self.test_oov_unseen,
            _ => self.test_ood,
        }
    }
}

/// Generator settings. Omitted template and lexicon fields fall back to the
/// built-in news-domain and chronicle-domain sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub sizes: SplitSizes,
    /// Target share of entity tokens among all tokens.
    pub entity_rate: f64,
    /// Allowed absolute deviation of the realised rate in every split.
    pub rate_tolerance: f64,
    /// Probability that an entity in the typo split receives one character edit.
    pub typo_rate: f64,
    /// Exponent of the Zipf distribution over lexicon entries.
    pub zipf_exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ood_templates: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<Lexicon>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oov_lexicon: Option<Lexicon>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ood_lexicon: Option<Lexicon>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            sizes: SplitSizes::default(),
            entity_rate: 0.168,
            rate_tolerance: 0.03,
            typo_rate: 1.0,
            zipf_exponent: 1.0,
            templates: None,
            ood_templates: None,
            lexicon: None,
            oov_lexicon: None,
            ood_lexicon: None,
        }
    }
}

impl GeneratorConfig {
    /// Parses a JSON config; errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: GeneratorConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| Err(Error::Config {
            path: path.to_string(),
            message,
        });
        if !(self.entity_rate > 0.0 && self.entity_rate < 1.0) {
            return bad("entity_rate", format!("must lie in (0, 1), got {}", self.entity_rate));
        }
        if !(self.rate_tolerance >= 0.0 && self.rate_tolerance.is_finite()) {
            return bad("rate_tolerance", format!("must be >= 0, got {}", self.rate_tolerance));
        }
        if !(self.typo_rate > 0.0 && self.typo_rate <= 1.0) {
            return bad("typo_rate", format!("must lie in (0, 1], got {}", self.typo_rate));
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return bad("zipf_exponent", format!("must be >= 0, got {}", self.zipf_exponent));
        }
        if self.sizes.train == 0 {
            return bad("sizes.train", "training split cannot be empty".into());
        }
        Ok(())
    }

    fn lexicons(&self) -> (Lexicon, Lexicon, Lexicon) {
        let (train, held_out) = default_id_lexicons();
        (
            self.lexicon.clone().unwrap_or(train),
            self.oov_lexicon.clone().unwrap_or(held_out),
            self.ood_lexicon.clone().unwrap_or_else(default_ood_lexicon),
        )
    }
}

/// The six generated splits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<TaggedSentence>,
    pub dev: Vec<TaggedSentence>,
    pub test_id: Vec<TaggedSentence>,
    pub test_oov_typo: Vec<TaggedSentence>,
    pub test_oov_unseen: Vec<TaggedSentence>,
    pub test_ood: Vec<TaggedSentence>,
}

impl Splits {
    /// `(name, sentences)` pairs in [`SPLIT_NAMES`] order.
    pub fn named(&self) -> [(&'static str, &[TaggedSentence]); 6] {
        [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test_id", &self.test_id),
            ("test_oov_typo", &self.test_oov_typo),
            ("test_oov_unseen", &self.test_oov_unseen),
            ("test_ood", &self.test_ood),
        ]
    }
}

#[derive(Debug, Clone)]
enum Piece {
    Word(String),
    /// Entity slot; the type is drawn uniformly from the listed ones.
    Slot(Vec<usize>),
}

#[derive(Debug, Clone)]
struct Template {
    pieces: Vec<Piece>,
    density: f64,
}

fn parse_templates(
    raw: &[String],
    field: &str,
    schema: &LabelSchema,
    samplers: &[EntitySampler],
) -> Result<Vec<Template>> {
    if raw.is_empty() {
        return Err(Error::Config {
            path: field.to_string(),
            message: "no templates".into(),
        });
    }
    raw.iter()
        .enumerate()
        .map(|(i, t)| {
            let mut pieces = Vec::new();
            for w in t.split_whitespace() {
                if let Some(names) = w.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
                    let mut types = Vec::new();
                    for name in names.split('|') {
                        let ty = schema.type_id(name).ok_or_else(|| Error::Config {
                            path: format!("{field}[{i}]"),
                            message: format!("unknown entity slot `{name}`"),
                        })?;
                        if samplers[ty].entries.is_empty() {
                            return Err(Error::Config {
                                path: format!("{field}[{i}]"),
                                message: format!("slot `{name}` has an empty lexicon"),
                            });
                        }
                        types.push(ty);
                    }
                    pieces.push(Piece::Slot(types));
                } else {
                    pieces.push(Piece::Word(w.to_string()));
                }
            }
            if pieces.is_empty() {
                return Err(Error::Config {
                    path: format!("{field}[{i}]"),
                    message: "empty template".into(),
                });
            }
            let mut entity = 0.0;
            let mut total = 0.0;
            for p in &pieces {
                match p {
                    Piece::Word(_) => total += 1.0,
                    Piece::Slot(types) => {
                        let len = types.iter().map(|t| samplers[*t].mean_len).sum::<f64>() / types.len() as f64;
                        entity += len;
                        total += len;
                    }
                }
            }
            Ok(Template {
                pieces,
                density: entity / total,
            })
        })
        .collect()
}

struct EntitySampler {
    entries: Vec<Vec<String>>,
    weights: Option<WeightedIndex<f64>>,
    mean_len: f64,
}

impl EntitySampler {
    fn new(entries: &[String], zipf: f64) -> Self {
        let entries: Vec<Vec<String>> = entries
            .iter()
            .map(|e| e.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .filter(|e| !e.is_empty())
            .collect();
        let raw: Vec<f64> = (0..entries.len()).map(|i| 1.0 / ((i + 1) as f64).powf(zipf)).collect();
        let total: f64 = raw.iter().sum();
        let mean_len = if entries.is_empty() {
            1.0
        } else {
            entries.iter().zip(&raw).map(|(e, w)| e.len() as f64 * w).sum::<f64>() / total
        };
        let weights = WeightedIndex::new(&raw).ok();
        EntitySampler {
            entries,
            weights,
            mean_len,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &[String] {
        let i = self.weights.as_ref().map(|w| w.sample(rng)).unwrap_or(0);
        &self.entries[i]
    }
}

fn samplers_for(lexicon: &Lexicon, schema: &LabelSchema, zipf: f64) -> Vec<EntitySampler> {
    schema
        .entity_types()
        .iter()
        .map(|t| EntitySampler::new(lexicon.entries(t), zipf))
        .collect()
}

struct SplitSpec<'a> {
    name: &'static str,
    size: usize,
    origin: Origin,
    templates: &'a [Template],
    samplers: &'a [EntitySampler],
}

struct TypoSpec<'a> {
    rate: f64,
    forbidden: &'a HashSet<String>,
}

const MAX_ATTEMPTS: usize = 10_000;
const SWITCH_AFTER: usize = 200;

/// Generates all six splits from one seed.
pub fn generate(config: &GeneratorConfig) -> Result<Splits> {
    config.validate()?;
    let schema = LabelSchema::default();
    let (lex_train, lex_oov, lex_ood) = config.lexicons();
    check_disjoint(&lex_train, &lex_oov, &lex_ood)?;

    let id_samplers = samplers_for(&lex_train, &schema, config.zipf_exponent);
    let oov_samplers = samplers_for(&lex_oov, &schema, config.zipf_exponent);
    let ood_samplers = samplers_for(&lex_ood, &schema, config.zipf_exponent);

    let id_raw = config.templates.clone().unwrap_or_else(default_id_templates);
    let ood_raw = config.ood_templates.clone().unwrap_or_else(default_ood_templates);
    let id_templates = parse_templates(&id_raw, "templates", &schema, &id_samplers)?;
    let id_templates_unseen = parse_templates(&id_raw, "templates", &schema, &oov_samplers)?;
    let ood_templates = parse_templates(&ood_raw, "ood_templates", &schema, &ood_samplers)?;

    // Words a typo must not collide with: every training entity token and
    // every template word.
    let mut forbidden: HashSet<String> = lex_train
        .all_entries()
        .flat_map(|e| e.split_whitespace().map(str::to_string))
        .collect();
    for t in id_raw.iter().chain(&ood_raw) {
        forbidden.extend(t.split_whitespace().map(str::to_string));
    }
    let typo = TypoSpec {
        rate: config.typo_rate,
        forbidden: &forbidden,
    };

    let mut seen = HashSet::new();
    let mut splits = Splits::default();
    for name in SPLIT_NAMES {
        let size = config.sizes.get(name);
        let (origin, templates, samplers): (_, &[Template], &[EntitySampler]) = match name {
            "test_oov_typo" => (Origin::OovTypo, &id_templates, &id_samplers),
            "test_oov_unseen" => (Origin::OovUnseen, &id_templates_unseen, &oov_samplers),
            "test_ood" => (Origin::Ood, &ood_templates, &ood_samplers),
            _ => (Origin::Id, &id_templates, &id_samplers),
        };
        let spec = SplitSpec {
            name,
            size,
            origin,
            templates,
            samplers,
        };
        let mut rng = substream(config.seed, &format!("generate/{name}"));
        let typo = (origin == Origin::OovTypo).then_some(&typo);
        let sentences = generate_split(&spec, config, &schema, typo, &mut seen, &mut rng)?;
        match name {
            "train" => splits.train = sentences,
            "dev" => splits.dev = sentences,
            "test_id" => splits.test_id = sentences,
            "test_oov_typo" => splits.test_oov_typo = sentences,
            "test_oov_unseen" => splits.test_oov_unseen = sentences,
            _ => splits.test_ood = sentences,
        }
    }
    Ok(splits)
}

fn check_disjoint(train: &Lexicon, oov: &Lexicon, ood: &Lexicon) -> Result<()> {
    let a: HashSet<&String> = train.all_entries().collect();
    let b: HashSet<&String> = oov.all_entries().collect();
    if let Some(e) = oov.all_entries().find(|e| a.contains(e)) {
        return Err(Error::Config {
            path: "oov_lexicon".into(),
            message: format!("`{e}` also appears in the training lexicon"),
        });
    }
    if let Some(e) = ood.all_entries().find(|e| a.contains(e) || b.contains(e)) {
        return Err(Error::Config {
            path: "ood_lexicon".into(),
            message: format!("`{e}` also appears in another lexicon"),
        });
    }
    Ok(())
}

fn generate_split(
    spec: &SplitSpec<'_>,
    config: &GeneratorConfig,
    schema: &LabelSchema,
    typo: Option<&TypoSpec<'_>>,
    seen: &mut HashSet<String>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TaggedSentence>> {
    let target = config.entity_rate;
    let dense: Vec<&Template> = spec.templates.iter().filter(|t| t.density >= target).collect();
    let sparse: Vec<&Template> = spec.templates.iter().filter(|t| t.density < target).collect();
    let reachable = |group: &[&Template]| {
        group
            .iter()
            .all(|t| (t.density - target).abs() <= config.rate_tolerance)
    };
    if (dense.is_empty() && !reachable(&sparse)) || (sparse.is_empty() && !reachable(&dense)) {
        return Err(Error::Config {
            path: "entity_rate".into(),
            message: format!(
                "templates for split `{}` cannot reach an entity rate of {target} within {}",
                spec.name, config.rate_tolerance
            ),
        });
    }

    let mut out = Vec::with_capacity(spec.size);
    let mut entity_tokens = 0usize;
    let mut total_tokens = 0usize;
    for _ in 0..spec.size {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(Error::Config {
                    path: "sizes".into(),
                    message: format!("could not draw enough distinct sentences for split `{}`", spec.name),
                });
            }
            let mut below = total_tokens == 0 || (entity_tokens as f64) < target * total_tokens as f64;
            // A saturated pool (every draw a duplicate) hands over to the other one.
            if attempts > SWITCH_AFTER {
                below = !below;
            }
            let pool = match (below, dense.is_empty(), sparse.is_empty()) {
                (true, false, _) | (false, _, true) => &dense,
                _ => &sparse,
            };
            let template = pool.choose(rng).expect("non-empty template pool");
            let sentence = fill(template, spec, schema, typo, rng);
            let key = sentence.tokens.join(" ");
            if !seen.insert(key) {
                continue;
            }
            entity_tokens += sentence.labels.iter().filter(|l| *l != "O").count();
            total_tokens += sentence.len();
            out.push(sentence);
            break;
        }
    }

    if total_tokens > 0 {
        let rate = entity_tokens as f64 / total_tokens as f64;
        if (rate - target).abs() > config.rate_tolerance {
            return Err(Error::Config {
                path: "entity_rate".into(),
                message: format!(
                    "split `{}` realised entity rate {rate:.4}, outside {target} ± {}",
                    spec.name, config.rate_tolerance
                ),
            });
        }
    }
    Ok(out)
}

fn fill(
    template: &Template,
    spec: &SplitSpec<'_>,
    schema: &LabelSchema,
    typo: Option<&TypoSpec<'_>>,
    rng: &mut ChaCha8Rng,
) -> TaggedSentence {
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for piece in &template.pieces {
        match piece {
            Piece::Word(w) => {
                tokens.push(w.clone());
                labels.push("O".to_string());
            }
            Piece::Slot(types) => {
                let ty = if types.len() == 1 { &types[0] } else { types.choose(rng).expect("non-empty slot") };
                let mut entity = spec.samplers[*ty].sample(rng).to_vec();
                if let Some(typo) = typo {
                    if rng.gen::<f64>() < typo.rate {
                        inject_typo(&mut entity, typo.forbidden, rng);
                    }
                }
                let name = &schema.entity_types()[*ty];
                for (i, tok) in entity.into_iter().enumerate() {
                    tokens.push(tok);
                    labels.push(if i == 0 { format!("B-{name}") } else { format!("I-{name}") });
                }
            }
        }
    }
    TaggedSentence {
        tokens,
        labels,
        origin: spec.origin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edit {
    Swap,
    Delete,
    Insert,
    Substitute,
}

const EDITS: [Edit; 4] = [Edit::Swap, Edit::Delete, Edit::Insert, Edit::Substitute];

/// Applies exactly one character edit to one token of `entity`. The result
/// never equals the source token nor any forbidden word.
fn inject_typo(entity: &mut [String], forbidden: &HashSet<String>, rng: &mut ChaCha8Rng) {
    let idx = rng.gen_range(0..entity.len());
    let original: Vec<char> = entity[idx].chars().collect();
    for _ in 0..64 {
        let edit = *EDITS.choose(rng).expect("non-empty");
        if let Some(candidate) = apply_edit(&original, edit, rng) {
            if !forbidden.contains(&candidate) && !candidate.is_empty() {
                entity[idx] = candidate;
                return;
            }
        }
    }
    // Fall back to an insertion at the end, which always differs.
    let mut chars = original;
    chars.push('x');
    entity[idx] = chars.into_iter().collect();
}

fn random_letter(like: char, rng: &mut ChaCha8Rng) -> char {
    let c = (b'a' + rng.gen_range(0..26u8)) as char;
    if like.is_uppercase() {
        c.to_ascii_uppercase()
    } else {
        c
    }
}

fn apply_edit(chars: &[char], edit: Edit, rng: &mut ChaCha8Rng) -> Option<String> {
    let n = chars.len();
    let mut out = chars.to_vec();
    match edit {
        Edit::Swap => {
            let candidates: Vec<usize> = (0..n.saturating_sub(1)).filter(|&i| chars[i] != chars[i + 1]).collect();
            let &i = candidates.choose(rng)?;
            out.swap(i, i + 1);
        }
        Edit::Delete => {
            if n < 2 {
                return None;
            }
            out.remove(rng.gen_range(0..n));
        }
        Edit::Insert => {
            let at = rng.gen_range(0..=n);
            let like = chars.get(at.min(n.saturating_sub(1))).copied().unwrap_or('a');
            let like = if at == 0 { like } else { like.to_ascii_lowercase() };
            out.insert(at, random_letter(like, rng));
        }
        Edit::Substitute => {
            let at = rng.gen_range(0..n);
            let c = random_letter(chars[at], rng);
            if c == chars[at] {
                return None;
            }
            out[at] = c;
        }
    }
    Some(out.into_iter().collect())
}
