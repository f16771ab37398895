//! Plain SGD and Adam over [`ModelParams`].

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, Zip};

use crate::error::{Error, Result};
use crate::geometry::{wrap_phase, ModelParams};

use super::grad::Gradients;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Config(format!(
                "unknown optimizer {s:?} (expected sgd or adam)"
            ))),
        }
    }
}

struct Moments {
    m: Gradients,
    v: Gradients,
}

pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    steps: u64,
    moments: Option<Moments>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ModelParams) -> Self {
        let moments = (kind == OptimizerKind::Adam).then(|| Moments {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
        });
        Optimizer {
            kind,
            lr,
            steps: 0,
            moments,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One descent step. Phases are wrapped back into (−π, π] afterwards.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.steps += 1;
        match self.moments.as_mut() {
            None => {
                let lr = self.lr;
                params.entity.scaled_add(-lr, &grads.entity);
                params.relation.scaled_add(-lr, &grads.relation);
                if let (Some(w), Some(g)) = (params.projection.as_mut(), grads.projection.as_ref()) {
                    w.scaled_add(-lr, g);
                }
            }
            Some(mom) => {
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                let step = self.lr * c2.sqrt() / c1;
                let eps = ADAM_EPS * c2.sqrt();
                adam2(&mut params.entity, &grads.entity, &mut mom.m.entity, &mut mom.v.entity, step, eps);
                adam2(
                    &mut params.relation,
                    &grads.relation,
                    &mut mom.m.relation,
                    &mut mom.v.relation,
                    step,
                    eps,
                );
                if let (Some(w), Some(g), Some(m), Some(v)) = (
                    params.projection.as_mut(),
                    grads.projection.as_ref(),
                    mom.m.projection.as_mut(),
                    mom.v.projection.as_mut(),
                ) {
                    adam3(w, g, m, v, step, eps);
                }
            }
        }
        if params.is_complex() {
            params.relation.mapv_inplace(wrap_phase);
        }
    }
}

// Bias correction folded into the step size:
// θ -= lr·m̂/(√v̂ + ε) = (lr·√c2/c1)·m/(√v + ε·√c2).
#[inline]
fn adam_coord(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, step: f64, eps: f64) {
    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
    *p -= step * *m / (v.sqrt() + eps);
}

fn adam2(p: &mut Array2<f64>, g: &Array2<f64>, m: &mut Array2<f64>, v: &mut Array2<f64>, step: f64, eps: f64) {
    Zip::from(p)
        .and(g)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| adam_coord(p, g, m, v, step, eps));
}

fn adam3(p: &mut Array3<f64>, g: &Array3<f64>, m: &mut Array3<f64>, v: &mut Array3<f64>, step: f64, eps: f64) {
    Zip::from(p)
        .and(g)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| adam_coord(p, g, m, v, step, eps));
}
