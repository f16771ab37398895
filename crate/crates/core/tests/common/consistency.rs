//! Exact-fit knowledge base runs of the margin and combined objectives.

use cible::geometry::ModelKind;
use cible::ible::{cible_scores, ible_scores};
use cible::synth::exact_fit_kb;
use cible::train::{ce_loss, margin_loss, train, CeScorer, NegativeSampler, Objective, OptimizerKind, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn exact_fit_config(objective: Objective) -> TrainConfig {
    TrainConfig {
        model: ModelKind::TransE,
        objective,
        dim: 8,
        gamma: 2.0,
        alpha: 0.5,
        lr: 0.003,
        batch_size: 18,
        negatives: 8,
        epochs: 4000,
        eval_every: 0,
        optimizer: OptimizerKind::Adam,
        ..TrainConfig::default()
    }
}

/// The floor of the IBLE cross-entropy over `1 + n` candidates with scores
/// in `[0, 1]`: the gold at 1, every negative at 0.
pub fn ce_floor(n: usize) -> f64 {
    (1.0 + n as f64 / std::f64::consts::E).ln()
}

pub struct MarginOptimum {
    pub margin: f64,
    pub ce: f64,
    pub floor: f64,
    pub max_other: f64,
}

/// Trains the margin loss to its floor, then checks the IBLE cross-entropy
/// and scores on the same parameters and negatives.
pub fn margin_optimum_minimises_ible_cross_entropy() -> MarginOptimum {
    let kb = exact_fit_kb().unwrap();
    let cfg = exact_fit_config(Objective::Margin);
    let p = train(&kb, &cfg).unwrap().params;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let batch = NegativeSampler::new(cfg.negatives, true).batch(&kb, kb.train_augmented(), &mut rng);
    let margin = margin_loss(&p, &batch);
    assert!((margin + cfg.gamma).abs() < 1e-2, "margin loss {margin}");
    let ce = ce_loss(&p, &kb, &batch, CeScorer::Ible).unwrap();
    let floor = ce_floor(cfg.negatives);
    assert!((ce - floor).abs() < 1e-3, "ce {ce} floor {floor}");

    let mut max_other: f64 = 0.0;
    for t in kb.train_augmented() {
        let s = ible_scores(&p, &kb, t.head, t.relation);
        for (e, &v) in s.iter().enumerate() {
            if kb.is_train_fact(t.head, t.relation, e) {
                assert!((v - 1.0).abs() < 1e-9);
            } else {
                assert!(v < 1e-3, "I({}, {}, {e}) = {v}", t.head, t.relation);
                max_other = max_other.max(v);
            }
        }
    }
    MarginOptimum { margin, ce, floor, max_other }
}

pub struct Saturation {
    pub min_fact: f64,
    pub max_non_fact: f64,
}

/// Trains the combined objective and checks that both component losses fall
/// and every score saturates to within 0.01 of {0, 1}.
pub fn cible_training_saturates_scores() -> Saturation {
    let kb = exact_fit_kb().unwrap();
    let cfg = exact_fit_config(Objective::CibleCe);
    let out = train(&kb, &cfg).unwrap();
    let p = out.params;
    let ible_ce = out.history.component("ible-ce");
    let margin = out.history.component("translational-margin");
    assert!(ible_ce.last().unwrap().1 < ible_ce[0].1);
    assert!(margin.last().unwrap().1 < margin[0].1);
    let mut sat = Saturation { min_fact: 1.0, max_non_fact: 0.0 };
    for h in 0..kb.num_entities() {
        for r in 0..kb.num_relations() {
            let c = cible_scores(&p, &kb, h, r, cfg.alpha).unwrap();
            for (t, &v) in c.iter().enumerate() {
                if kb.is_train_fact(h, r, t) {
                    assert!(v >= 0.99, "C({h}, {r}, {t}) = {v}");
                    sat.min_fact = sat.min_fact.min(v);
                } else {
                    assert!(v <= 0.01, "C({h}, {r}, {t}) = {v}");
                    sat.max_non_fact = sat.max_non_fact.max(v);
                }
            }
        }
    }
    sat
}
