//! Central finite-difference audit of the closed-form gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{ModelKind, ModelParams, ModelShape};
use crate::kb::KnowledgeBase;
use crate::synth::random_kb;

use super::grad::{gradients, traced_loss, LossSpec};
use super::sampling::{Batch, NegativeSampler};
use super::Objective;

/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradCheckConfig {
    pub step: f64,
    /// Check at most this many coordinates, spread evenly; `None` checks all.
    pub max_coords: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-4,
            max_coords: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Coordinates whose ±step probes cross a hinge or L1 kink.
    pub skipped: usize,
    /// `max |a − n| / max(|a|, |n|, REL_FLOOR)` over checked coordinates.
    pub max_rel_error: f64,
    pub worst: Option<WorstCoord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstCoord {
    pub block: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares [`gradients`] with central differences of the loss, skipping
/// coordinates where the forward pass takes a different kink branch at
/// `θ ± step` than at `θ`.
pub fn check_gradients(
    params: &ModelParams,
    kb: &KnowledgeBase,
    batch: &Batch,
    spec: &LossSpec,
    cfg: &GradCheckConfig,
) -> GradCheckReport {
    let (_, grads) = gradients(params, kb, batch, spec);
    let (_, base_trace) = traced_loss(params, kb, batch, spec);

    let n_ent = params.entity.len();
    let n_rel = params.relation.len();
    let n_proj = params.projection.as_ref().map_or(0, |w| w.len());
    let total = n_ent + n_rel + n_proj;
    let stride = cfg
        .max_coords
        .filter(|&m| m > 0 && m < total)
        .map_or(1, |m| total.div_ceil(m));

    let analytic: Vec<f64> = grads.iter().copied().collect();
    let mut probe = params.clone();
    let mut report = GradCheckReport::default();
    for flat in (0..total).step_by(stride) {
        let (block, index) = if flat < n_ent {
            ("entity", flat)
        } else if flat < n_ent + n_rel {
            ("relation", flat - n_ent)
        } else {
            ("projection", flat - n_ent - n_rel)
        };
        let mut eval_at = |delta: f64| {
            let slot = coord_mut(&mut probe, block, index);
            let orig = *slot;
            *slot = orig + delta;
            let out = traced_loss(&probe, kb, batch, spec);
            *coord_mut(&mut probe, block, index) = orig;
            out
        };
        let (plus, tp) = eval_at(cfg.step);
        let (minus, tm) = eval_at(-cfg.step);
        if tp != base_trace || tm != base_trace {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus.total - minus.total) / (2.0 * cfg.step);
        let a = analytic[flat];
        let err = relative_error(a, numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some(WorstCoord {
                block,
                index,
                analytic: a,
                numeric,
            });
        }
    }
    report
}

fn coord_mut<'a>(p: &'a mut ModelParams, block: &str, index: usize) -> &'a mut f64 {
    let slice = match block {
        "entity" => p.entity.as_slice_mut(),
        "relation" => p.relation.as_slice_mut(),
        _ => p.projection.as_mut().and_then(|w| w.as_slice_mut()),
    };
    &mut slice.expect("standard layout")[index]
}

/// One row of [`audit`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub model: ModelKind,
    pub objective: &'static str,
    pub seed: u64,
    pub report: GradCheckReport,
}

/// Gradient check of every model kind under every objective on small random
/// knowledge bases, one per seed.
pub fn audit(seeds: &[u64], cfg: &GradCheckConfig) -> Result<Vec<AuditRow>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(10, 3, 36, (0.0, 0.0), &mut rng)?;
        for model in ModelKind::ALL {
            for objective in Objective::ALL {
                let shape = ModelShape {
                    kind: model,
                    n_entity: kb.num_entities(),
                    n_relation: kb.num_relations(),
                    dim: 6,
                    norm: model.default_norm(),
                    gamma: 3.0,
                };
                let mut params = ModelParams::init(shape, 1.0, &mut rng)?;
                if let Some(w) = params.projection.as_mut() {
                    w.mapv_inplace(|x| x + rng.random_range(-0.3..0.3));
                }
                let positives: Vec<_> = kb.train_augmented().iter().step_by(3).copied().collect();
                let batch = NegativeSampler::new(4, true).batch(&kb, &positives, &mut rng);
                let spec = LossSpec::new(objective.loss_kind(0.4));
                rows.push(AuditRow {
                    model,
                    objective: objective.name(),
                    seed,
                    report: check_gradients(&params, &kb, &batch, &spec, cfg),
                });
            }
        }
    }
    Ok(rows)
}
