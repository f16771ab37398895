//! Training: configuration, negative sampling, losses, gradients and the
//! optimizer loop with validation-based early stopping.

mod grad;
pub mod gradcheck;
mod optim;
mod sampling;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_triples, ModelScorer, ScorerKind};
use crate::geometry::{ModelKind, ModelParams, ModelShape, Norm};
use crate::ible::{check_alpha, cible_scores, ible_scores};
use crate::kb::{KnowledgeBase, Triple};

pub use grad::{batch_loss, gradients, BatchLoss, Gradients, LossKind, LossSpec};
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use sampling::{sample_negatives, Batch, NegativeSampler, Negatives};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Margin loss on the translational distance.
    Margin,
    /// Cross-entropy of IBLE scores.
    IbleCe,
    /// Cross-entropy of CIBLE scores.
    CibleCe,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Margin, Objective::IbleCe, Objective::CibleCe];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Margin => "translational-margin",
            Objective::IbleCe => "ible-ce",
            Objective::CibleCe => "cible-ce",
        }
    }

    pub fn loss_kind(self, alpha: f64) -> LossKind {
        match self {
            Objective::Margin => LossKind::Margin,
            Objective::IbleCe => LossKind::IbleCe,
            Objective::CibleCe => LossKind::CibleCe { alpha },
        }
    }

    /// Scorer matching the objective, used for validation.
    pub fn scorer(self, alpha: f64) -> ScorerKind {
        match self {
            Objective::Margin => ScorerKind::Translational,
            Objective::IbleCe => ScorerKind::Ible,
            Objective::CibleCe => ScorerKind::Cible { alpha },
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translational-margin" | "margin" => Ok(Objective::Margin),
            "ible-ce" => Ok(Objective::IbleCe),
            "cible-ce" => Ok(Objective::CibleCe),
            _ => Err(Error::Config(format!(
                "unknown objective {s:?} (expected translational-margin, ible-ce or cible-ce)"
            ))),
        }
    }
}

mod as_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

mod norm_order {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::geometry::Norm;

    pub fn serialize<S: Serializer>(v: &Option<Norm>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(n) => s.serialize_u8(n.order()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Norm>, D::Error> {
        let p = Option::<u8>::deserialize(d)?;
        p.map(Norm::from_order).transpose().map_err(de::Error::custom)
    }
}

/// Every training hyperparameter. Loaded from a flat TOML document whose keys
/// are the field names; missing keys take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    #[serde(with = "as_str")]
    pub model: ModelKind,
    #[serde(with = "as_str")]
    pub objective: Objective,
    pub dim: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// Defaults to the model's conventional norm.
    #[serde(with = "norm_order", skip_serializing_if = "Option::is_none")]
    pub norm: Option<Norm>,
    pub lr: f64,
    pub batch_size: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Hard cap on optimizer steps, on top of `epochs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(with = "as_str")]
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub filtered_negatives: bool,
    /// Leave the query entity out of its own prototype set while training.
    pub exclude_self: bool,
    /// Validate every this many epochs; 0 disables validation.
    pub eval_every: usize,
    /// Stop after this many validations without improvement; 0 never stops.
    pub patience: usize,
    /// Half-width of the uniform initialization; defaults to `γ / 2k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_range: Option<f64>,
    /// Validate on the first this many validation triples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_sample: Option<usize>,
    /// Multiplies the scores inside the cross-entropy softmax.
    pub logit_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::RRotatE,
            objective: Objective::CibleCe,
            dim: 500,
            gamma: 6.0,
            alpha: 0.5,
            norm: None,
            lr: 5e-4,
            batch_size: 256,
            negatives: 128,
            epochs: 200,
            max_steps: None,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            filtered_negatives: true,
            exclude_self: false,
            eval_every: 1,
            patience: 10,
            init_range: None,
            valid_sample: None,
            logit_scale: 1.0,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "model",
    "objective",
    "dim",
    "gamma",
    "alpha",
    "norm",
    "lr",
    "batch_size",
    "negatives",
    "epochs",
    "max_steps",
    "optimizer",
    "seed",
    "filtered_negatives",
    "exclude_self",
    "eval_every",
    "patience",
    "init_range",
    "valid_sample",
    "logit_scale",
];

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config is not valid TOML: {e}")))?;
        let unknown: Vec<&str> = table
            .keys()
            .map(String::as_str)
            .filter(|k| !CONFIG_KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!(
                "unknown config keys: {}",
                unknown.join(", ")
            )));
        }
        let cfg: TrainConfig = table
            .try_into()
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or_else(|| self.model.default_norm())
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec {
            kind: self.objective.loss_kind(self.alpha),
            exclude_self: self.exclude_self,
            logit_scale: self.logit_scale,
        }
    }

    pub fn shape(&self, kb: &KnowledgeBase) -> ModelShape {
        ModelShape {
            kind: self.model,
            n_entity: kb.num_entities(),
            n_relation: kb.num_relations(),
            dim: self.dim,
            norm: self.norm(),
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.batch_size == 0 || self.negatives == 0 || self.dim == 0 {
            return bad("batch_size, negatives and dim must be positive".into());
        }
        if self.model.is_complex() && self.dim % 2 != 0 {
            return bad(format!("{} needs an even dim, got {}", self.model, self.dim));
        }
        if let Some(r) = self.init_range {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("init_range must be positive, got {r}"));
            }
        }
        if !(self.logit_scale > 0.0 && self.logit_scale.is_finite()) {
            return bad(format!("logit_scale must be positive, got {}", self.logit_scale));
        }
        check_alpha(self.alpha)
    }
}

/// One logged loss value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossRecord {
    pub step: usize,
    pub component: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LossHistory {
    pub records: Vec<LossRecord>,
}

impl LossHistory {
    fn push_epoch(&mut self, step: usize, loss: &BatchLoss) {
        let mut push = |component, value: Option<f64>| {
            if let Some(value) = value {
                self.records.push(LossRecord {
                    step,
                    component,
                    value,
                });
            }
        };
        push("total", Some(loss.total));
        push("translational-margin", loss.margin);
        push("ible-ce", loss.ible_ce);
        push("cible-ce", loss.cible_ce);
    }

    /// Values of one component in step order.
    pub fn component(&self, name: &str) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter(|r| r.component == name)
            .map(|r| (r.step, r.value))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,component,value")?;
        for r in &self.records {
            writeln!(w, "{},{},{}", r.step, r.component, r.value)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("in-memory write");
        String::from_utf8(out).expect("ascii")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidationPoint {
    pub epoch: usize,
    pub step: usize,
    pub mrr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Best-validation parameters, or the final ones without validation.
    pub params: ModelParams,
    pub history: LossHistory,
    pub validation: Vec<ValidationPoint>,
    pub best: Option<ValidationPoint>,
    pub epochs: usize,
    pub steps: usize,
    pub negative_fallbacks: u64,
    pub stopped_early: bool,
}

/// Initial parameters drawn from the config's seed.
pub fn init_params(kb: &KnowledgeBase, cfg: &TrainConfig) -> Result<ModelParams> {
    let shape = cfg.shape(kb);
    let range = cfg
        .init_range
        .unwrap_or_else(|| ModelParams::default_init_range(&shape));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ModelParams::init(shape, range, &mut rng)
}

/// Trains on the inverse-augmented training split.
pub fn train(kb: &KnowledgeBase, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_from(kb, cfg, init_params(kb, cfg)?)
}

/// Trains starting from given parameters.
pub fn train_from(kb: &KnowledgeBase, cfg: &TrainConfig, mut params: ModelParams) -> Result<TrainOutcome> {
    cfg.validate()?;
    if params.shape() != cfg.shape(kb) {
        return Err(Error::Config(
            "initial parameters do not match the config and dataset".into(),
        ));
    }
    let spec = cfg.loss_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut sampler = NegativeSampler::new(cfg.negatives, cfg.filtered_negatives);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, &params);
    let mut order: Vec<Triple> = kb.train_augmented().to_vec();
    let valid: &[Triple] = match cfg.valid_sample {
        Some(n) => &kb.valid[..n.min(kb.valid.len())],
        None => &kb.valid,
    };
    let validate = cfg.eval_every > 0 && !valid.is_empty();
    let scorer_kind = cfg.objective.scorer(cfg.alpha);
    let max_steps = cfg.max_steps.unwrap_or(usize::MAX);

    let mut history = LossHistory::default();
    let mut validation = Vec::new();
    let mut best: Option<(ValidationPoint, ModelParams)> = None;
    let mut since_best = 0;
    let mut steps = 0;
    let mut epochs = 0;
    let mut stopped_early = false;

    while epochs < cfg.epochs && steps < max_steps && !order.is_empty() {
        order.shuffle(&mut rng);
        let mut acc = BatchLoss::default();
        let (mut m, mut i, mut c) = (0.0, 0.0, 0.0);
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if steps >= max_steps {
                break;
            }
            let batch = sampler.batch(kb, chunk, &mut rng);
            let (loss, grads) = gradients(&params, kb, &batch, &spec);
            if !loss.total.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss or gradient at step {steps} (epoch {epochs}): loss {loss:?}, max |grad| {}",
                    grads.max_abs()
                )));
            }
            opt.step(&mut params, &grads);
            if params.param_iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence(format!(
                    "non-finite parameters after step {steps} (epoch {epochs})"
                )));
            }
            steps += 1;
            let w = chunk.len() as f64;
            seen += chunk.len();
            acc.total += w * loss.total;
            m += w * loss.margin.unwrap_or(0.0);
            i += w * loss.ible_ce.unwrap_or(0.0);
            c += w * loss.cible_ce.unwrap_or(0.0);
        }
        epochs += 1;
        let n = seen.max(1) as f64;
        let epoch_loss = BatchLoss {
            total: acc.total / n,
            margin: Some(m / n),
            ible_ce: (cfg.objective != Objective::Margin).then_some(i / n),
            cible_ce: (cfg.objective == Objective::CibleCe).then_some(c / n),
        };
        history.push_epoch(steps, &epoch_loss);
        log::debug!("epoch {epochs} step {steps} loss {:.6}", epoch_loss.total);

        if validate && epochs % cfg.eval_every == 0 {
            let scorer = ModelScorer::new(&params, kb, scorer_kind);
            let mrr = evaluate_triples(&scorer, kb, valid).all.mrr;
            let point = ValidationPoint {
                epoch: epochs,
                step: steps,
                mrr,
            };
            log::info!("epoch {epochs} step {steps} valid MRR {mrr:.4}");
            validation.push(point);
            if best.as_ref().is_none_or(|(b, _)| mrr > b.mrr) {
                best = Some((point, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience > 0 && since_best >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let (best, params) = match best {
        Some((point, p)) => (Some(point), p),
        None => (None, params),
    };
    Ok(TrainOutcome {
        params,
        history,
        validation,
        best,
        epochs,
        steps,
        negative_fallbacks: sampler.fallbacks,
        stopped_early,
    })
}

/// Mean margin loss of a batch, computed pointwise from [`ModelParams::score`].
pub fn margin_loss(params: &ModelParams, batch: &Batch) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let g = params.gamma;
    let total: f64 = batch
        .positives
        .iter()
        .zip(&batch.negatives)
        .map(|(t, negs)| {
            let pos = -(g - params.score(t.head, t.relation, t.tail)).max(0.0);
            let neg = if negs.is_empty() {
                0.0
            } else {
                negs.iter()
                    .map(|&e| (g - params.score(t.head, t.relation, e)).max(0.0))
                    .sum::<f64>()
                    / negs.len() as f64
            };
            pos + neg
        })
        .sum();
    total / batch.len() as f64
}

/// Scores a cross-entropy objective ranks candidates by.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CeScorer {
    Ible,
    Cible { alpha: f64 },
}

/// Mean softmax cross-entropy of the gold tail among `{gold} ∪ negatives`,
/// computed from the dense scorers of the `ible` module.
pub fn ce_loss(params: &ModelParams, kb: &KnowledgeBase, batch: &Batch, scorer: CeScorer) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (t, negs) in batch.positives.iter().zip(&batch.negatives) {
        let scores = match scorer {
            CeScorer::Ible => ible_scores(params, kb, t.head, t.relation),
            CeScorer::Cible { alpha } => cible_scores(params, kb, t.head, t.relation, alpha)?,
        };
        let cand: Vec<f64> = std::iter::once(t.tail)
            .chain(negs.iter().copied())
            .map(|e| scores[e])
            .collect();
        total += softmax_nll(&cand, 0);
    }
    Ok(total / batch.len() as f64)
}

/// `−log softmax(scores)[gold]`.
pub fn softmax_nll(scores: &[f64], gold: usize) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    lse - scores[gold]
}
