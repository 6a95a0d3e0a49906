//! Dirichlet prediction layer: evidence to Dirichlet parameters, belief and
//! uncertainty mass, expected class probabilities and log-density.

use crate::error::{Error, Result};
use crate::special::log_gamma_unchecked;

/// Non-negative per-class evidence, as produced by a softplus head.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence(Vec<f64>);

impl Evidence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain(format!(
                "evidence needs at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some((c, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Domain(format!("evidence[{c}] = {v} is not a finite non-negative value")));
        }
        Ok(Evidence(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }
}

/// A token's predictive Dirichlet and its derived masses.
///
/// `alpha = e + 1`, `strength = Σ alpha`, `belief = e / S`,
/// `uncertainty = C / S`, `prob = alpha / S`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletOutput {
    pub alpha: Vec<f64>,
    pub strength: f64,
    pub belief: Vec<f64>,
    pub uncertainty: f64,
    pub prob: Vec<f64>,
}

/// Class decision for one token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub confidence: f64,
    pub uncertainty: f64,
}

pub fn evidence_to_dirichlet(evidence: &Evidence) -> DirichletOutput {
    DirichletOutput::from_evidence_unchecked(&evidence.0)
}

impl DirichletOutput {
    /// Builds the output from Dirichlet parameters, which must all be `>= 1`.
    pub fn from_alpha(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::Domain(format!("need at least 2 classes, got {}", alpha.len())));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 1.0) {
            return Err(Error::Domain(format!("alpha entries must be finite and >= 1: {alpha:?}")));
        }
        Ok(Self::from_alpha_unchecked(alpha))
    }

    pub(crate) fn from_alpha_unchecked(alpha: Vec<f64>) -> Self {
        let evidence: Vec<f64> = alpha.iter().map(|a| a - 1.0).collect();
        Self::from_parts(evidence, alpha)
    }

    pub(crate) fn from_evidence_unchecked(evidence: &[f64]) -> Self {
        let alpha = evidence.iter().map(|e| e + 1.0).collect();
        Self::from_parts(evidence.to_vec(), alpha)
    }

    fn from_parts(evidence: Vec<f64>, alpha: Vec<f64>) -> Self {
        let c = alpha.len() as f64;
        let strength: f64 = alpha.iter().sum();
        let belief = evidence.iter().map(|e| e / strength).collect();
        let prob = alpha.iter().map(|a| a / strength).collect();
        DirichletOutput {
            alpha,
            strength,
            belief,
            uncertainty: c / strength,
            prob,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Arg-max of the expected probabilities, lowest index on ties.
    pub fn predict(&self) -> Prediction {
        let class_index = argmax(&self.prob);
        Prediction {
            class_index,
            confidence: self.prob[class_index],
            uncertainty: self.uncertainty,
        }
    }

    /// `ln Dir(p | alpha)` for `p` strictly inside the probability simplex.
    pub fn log_density(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.alpha.len() {
            return Err(Error::Shape(format!(
                "probability vector has {} entries, Dirichlet has {}",
                p.len(),
                self.alpha.len()
            )));
        }
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| !(*v > 0.0 && *v < 1.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("{p:?} is not in the open simplex")));
        }
        let ln_beta: f64 = self.alpha.iter().map(|a| log_gamma_unchecked(*a)).sum::<f64>()
            - log_gamma_unchecked(self.strength);
        let kernel: f64 = self
            .alpha
            .iter()
            .zip(p)
            .map(|(a, pc)| (a - 1.0) * pc.ln())
            .sum();
        Ok(kernel - ln_beta)
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
