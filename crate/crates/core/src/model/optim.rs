use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

/// First-order optimizer state.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        step: i32,
        m: ModelParams,
        v: ModelParams,
    },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr }
    }

    pub fn adam(params: &ModelParams, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        Ok(Optimizer::Adam {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: ModelParams::zeros(params.shape)?,
            v: ModelParams::zeros(params.shape)?,
        })
    }

    /// Applies one descent step with gradient `grad`.
    pub fn step(&mut self, params: &mut ModelParams, grad: &ModelParams) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
                    for (pi, gi) in p.iter_mut().zip(g) {
                        *pi -= *lr * gi;
                    }
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                step,
                m,
                v,
            } => {
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                let tensors = params
                    .tensors_mut()
                    .into_iter()
                    .zip(grad.tensors())
                    .zip(m.tensors_mut())
                    .zip(v.tensors_mut());
                for (((p, g), m), v) in tensors {
                    for i in 0..p.len() {
                        m[i] = *beta1 * m[i] + (1.0 - *beta1) * g[i];
                        v[i] = *beta2 * v[i] + (1.0 - *beta2) * g[i] * g[i];
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        p[i] -= *lr * m_hat / (v_hat.sqrt() + *eps);
                    }
                }
            }
        }
    }
}
