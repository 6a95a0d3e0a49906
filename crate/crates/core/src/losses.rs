//! Evidential training objective and its analytic gradients with respect to
//! the Dirichlet parameters.
//!
//! Per token the objective is `L_IW + λ₁·KL(Dir(α̃) ‖ Dir(1))`, with `L_CLS`
//! in place of `L_IW` when importance weighting is disabled. The batch adds
//! `−λ₂ Σ ln u` over the tokens whose arg-max prediction is wrong.
//!
//! Every `grad` vector returned here is `∂value/∂α`.

use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletOutput;
use crate::error::{Error, Result};
use crate::special::{digamma_unchecked, log_gamma_unchecked, trigamma_unchecked};

/// A gold class among `num_classes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    class: usize,
    num_classes: usize,
}

impl OneHot {
    pub fn new(class: usize, num_classes: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::Domain(format!(
                "class {class} out of range for {num_classes} classes"
            )));
        }
        Ok(OneHot { class, num_classes })
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_classes];
        v[self.class] = 1.0;
        v
    }
}

/// A scalar loss and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn check_dims(len: usize, y: OneHot) -> Result<()> {
    if len != y.num_classes {
        return Err(Error::Shape(format!(
            "{len} Dirichlet parameters but label has {} classes",
            y.num_classes
        )));
    }
    Ok(())
}

/// Expected cross-entropy under the Dirichlet: `ψ(S) − ψ(α_y)`.
pub fn cls_loss(d: &DirichletOutput, y: OneHot) -> Result<LossValue> {
    check_dims(d.alpha.len(), y)?;
    Ok(weighted_cls(&d.alpha, d.strength, y, 1.0))
}

/// `w·(ψ(S) − ψ(α_y))` with `w` held constant.
fn weighted_cls(alpha: &[f64], strength: f64, y: OneHot, weight: f64) -> LossValue {
    let value = weight * (digamma_unchecked(strength) - digamma_unchecked(alpha[y.class]));
    let common = weight * trigamma_unchecked(strength);
    let mut grad = vec![common; alpha.len()];
    grad[y.class] -= weight * trigamma_unchecked(alpha[y.class]);
    LossValue { value, grad }
}

/// Importance weight of the gold class, `1 − b_y`.
pub fn importance_weight(d: &DirichletOutput, y: OneHot) -> Result<f64> {
    check_dims(d.alpha.len(), y)?;
    Ok(1.0 - d.belief[y.class])
}

/// Importance-weighted classification loss. The weight `1 − b_y` is computed
/// from `d` and treated as a constant, so no gradient flows through it.
pub fn iw_loss(d: &DirichletOutput, y: OneHot) -> Result<LossValue> {
    let w = importance_weight(d, y)?;
    Ok(weighted_cls(&d.alpha, d.strength, y, w))
}

/// Masked parameters `α̃ = y + (1 − y) ⊙ α`: the gold entry is reset to 1.
pub fn mask_alpha(alpha: &[f64], y: OneHot) -> Result<Vec<f64>> {
    check_dims(alpha.len(), y)?;
    let mut masked = alpha.to_vec();
    masked[y.class] = 1.0;
    Ok(masked)
}

/// `KL(Dir(α̃) ‖ Dir(1))` and its gradient with respect to `α̃`.
pub fn kl_loss(alpha_tilde: &[f64]) -> Result<LossValue> {
    if alpha_tilde.iter().any(|a| !a.is_finite() || *a < 1.0) {
        return Err(Error::Domain(format!(
            "KL penalty needs parameters >= 1, got {alpha_tilde:?}"
        )));
    }
    Ok(kl_unchecked(alpha_tilde))
}

fn kl_unchecked(alpha_tilde: &[f64]) -> LossValue {
    let c = alpha_tilde.len() as f64;
    let strength: f64 = alpha_tilde.iter().sum();
    let psi_strength = digamma_unchecked(strength);
    let mut value = log_gamma_unchecked(strength) - log_gamma_unchecked(c);
    for a in alpha_tilde {
        value -= log_gamma_unchecked(*a);
        if *a != 1.0 {
            value += (a - 1.0) * (digamma_unchecked(*a) - psi_strength);
        }
    }
    // The lnΓ and ψ chain terms cancel, leaving only trigamma terms.
    let excess = strength - c;
    let tri_strength = trigamma_unchecked(strength);
    let grad = alpha_tilde
        .iter()
        .map(|a| (a - 1.0) * trigamma_unchecked(*a) - excess * tri_strength)
        .collect();
    LossValue {
        value: value.max(0.0),
        grad,
    }
}

/// `λ₂ = λ₀·exp(−(ln λ₀ / T)·t)`, rising geometrically from `λ₀` at `t = 0`
/// to 1 at `t = T`.
pub fn anneal_lambda2(lambda0: f64, epoch: usize, total_epochs: usize) -> Result<f64> {
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(Error::Domain(format!("lambda0 must lie in (0, 1), got {lambda0}")));
    }
    if total_epochs == 0 {
        return Err(Error::Domain("total epochs must be >= 1".into()));
    }
    if epoch > total_epochs {
        return Err(Error::Domain(format!(
            "epoch {epoch} exceeds total epochs {total_epochs}"
        )));
    }
    if epoch == total_epochs {
        return Ok(1.0);
    }
    let t = epoch as f64;
    let big_t = total_epochs as f64;
    Ok((lambda0 * (-(lambda0.ln() / big_t) * t).exp()).clamp(lambda0, 1.0))
}

/// How the KL balance factor λ₁ evolves over training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lambda1Schedule {
    /// `min(1, t / T)`.
    LinearRamp,
    Constant { value: f64 },
}

impl Default for Lambda1Schedule {
    fn default() -> Self {
        Lambda1Schedule::LinearRamp
    }
}

impl Lambda1Schedule {
    pub fn at(&self, epoch: usize, total_epochs: usize) -> f64 {
        match *self {
            Lambda1Schedule::LinearRamp => (epoch as f64 / total_epochs.max(1) as f64).min(1.0),
            Lambda1Schedule::Constant { value } => value,
        }
    }
}

/// Loss coefficients for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealState {
    pub lambda0: f64,
    pub epoch: usize,
    pub total_epochs: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl AnnealState {
    pub fn new(
        lambda0: f64,
        epoch: usize,
        total_epochs: usize,
        lambda1: Lambda1Schedule,
    ) -> Result<Self> {
        let lambda2 = anneal_lambda2(lambda0, epoch, total_epochs)?;
        let lambda1 = lambda1.at(epoch, total_epochs);
        if !(0.0..=1.0).contains(&lambda1) {
            return Err(Error::Domain(format!("lambda1 must lie in [0, 1], got {lambda1}")));
        }
        Ok(AnnealState {
            lambda0,
            epoch,
            total_epochs,
            lambda1,
            lambda2,
        })
    }

    /// Fixed coefficients, mostly for tests and gradient checks.
    pub fn fixed(lambda1: f64, lambda2: f64) -> Self {
        AnnealState {
            lambda0: lambda2,
            epoch: 0,
            total_epochs: 1,
            lambda1,
            lambda2,
        }
    }
}

/// Uncertainty-mass penalty `−λ₂ Σ ln u` over mispredicted tokens.
///
/// Returns the value and a per-token gradient; tokens predicted correctly get
/// a zero gradient.
pub fn unm_loss(
    outputs: &[DirichletOutput],
    labels: &[OneHot],
    anneal: &AnnealState,
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_batch(outputs, labels)?;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(outputs.len());
    for (d, y) in outputs.iter().zip(labels) {
        let (v, g) = unm_token(d, *y, anneal.lambda2);
        value += v;
        grads.push(g);
    }
    Ok((value, grads))
}

fn unm_token(d: &DirichletOutput, y: OneHot, lambda2: f64) -> (f64, Vec<f64>) {
    if d.predict().class_index == y.class {
        return (0.0, vec![0.0; d.alpha.len()]);
    }
    let c = d.alpha.len() as f64;
    // −ln u = ln(S / C)
    let value = lambda2 * (d.strength / c).ln();
    (value, vec![lambda2 / d.strength; d.alpha.len()])
}

fn check_batch(outputs: &[DirichletOutput], labels: &[OneHot]) -> Result<()> {
    if outputs.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} outputs but {} labels",
            outputs.len(),
            labels.len()
        )));
    }
    for (d, y) in outputs.iter().zip(labels) {
        check_dims(d.alpha.len(), *y)?;
    }
    Ok(())
}

/// Ablation switches for the training objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    #[serde(default)]
    pub disable_iw: bool,
    #[serde(default)]
    pub disable_unm: bool,
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        disable_iw: false,
        disable_unm: false,
    };
    /// Classification loss plus KL only.
    pub const VANILLA_EDL: Ablation = Ablation {
        disable_iw: true,
        disable_unm: true,
    };
}

/// Batch objective, split into its components.
///
/// `kl` and `unm` already include their λ coefficients, so
/// `total = cls_or_iw + kl + unm`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub cls_or_iw: f64,
    pub kl: f64,
    pub unm: f64,
    pub total: f64,
    /// Number of tokens whose prediction disagreed with the gold class.
    pub mispredicted: usize,
    /// `∂total/∂α` per token.
    pub grad_alpha: Vec<Vec<f64>>,
}

/// Full objective over a batch of tokens.
pub fn overall_loss(
    outputs: &[DirichletOutput],
    labels: &[OneHot],
    anneal: &AnnealState,
    ablation: Ablation,
) -> Result<LossBreakdown> {
    check_batch(outputs, labels)?;
    let weights: Vec<f64> = if ablation.disable_iw {
        vec![1.0; outputs.len()]
    } else {
        outputs
            .iter()
            .zip(labels)
            .map(|(d, y)| 1.0 - d.belief[y.class])
            .collect()
    };
    overall_loss_with_weights(outputs, labels, &weights, anneal, ablation)
}

/// [`overall_loss`] with caller-supplied gold-class weights. With
/// `disable_iw` the weights are ignored and the plain classification loss is
/// used.
pub fn overall_loss_with_weights(
    outputs: &[DirichletOutput],
    labels: &[OneHot],
    weights: &[f64],
    anneal: &AnnealState,
    ablation: Ablation,
) -> Result<LossBreakdown> {
    check_batch(outputs, labels)?;
    if weights.len() != outputs.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} tokens",
            weights.len(),
            outputs.len()
        )));
    }
    let mut out = LossBreakdown {
        cls_or_iw: 0.0,
        kl: 0.0,
        unm: 0.0,
        total: 0.0,
        mispredicted: 0,
        grad_alpha: Vec::with_capacity(outputs.len()),
    };
    for ((d, y), w) in outputs.iter().zip(labels).zip(weights) {
        let w = if ablation.disable_iw { 1.0 } else { *w };
        let cls = weighted_cls(&d.alpha, d.strength, *y, w);
        let mut grad = cls.grad;
        out.cls_or_iw += cls.value;

        if anneal.lambda1 != 0.0 {
            let mut masked = d.alpha.clone();
            masked[y.class] = 1.0;
            let kl = kl_unchecked(&masked);
            out.kl += anneal.lambda1 * kl.value;
            for (j, g) in kl.grad.iter().enumerate() {
                if j != y.class {
                    grad[j] += anneal.lambda1 * g;
                }
            }
        }

        if d.predict().class_index != y.class {
            out.mispredicted += 1;
            if !ablation.disable_unm {
                let (v, g) = unm_token(d, *y, anneal.lambda2);
                out.unm += v;
                for (acc, gj) in grad.iter_mut().zip(g) {
                    *acc += gj;
                }
            }
        }
        out.grad_alpha.push(grad);
    }
    out.total = out.cls_or_iw + out.kl + out.unm;
    Ok(out)
}
