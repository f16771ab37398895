mod common;

use common::consistency;

use cible::geometry::{ModelKind, ModelParams, ModelShape, Norm};
use cible::kb::{KnowledgeBase, Triple};
use cible::synth::{chain_kb, exact_fit_kb, random_kb};
use cible::train::gradcheck::{audit, check_gradients, GradCheckConfig};
use cible::train::{
    batch_loss, ce_loss, gradients, margin_loss, sample_negatives, train, train_from, Batch, CeScorer,
    LossKind, LossSpec, NegativeSampler, Objective, TrainConfig,
};
use cible::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line_params(kb: &KnowledgeBase, gamma: f64) -> ModelParams {
    // 1-d TransE: entity i at 2γ·i, base relations step by 2γ·(r + 1)
    let mut p = ModelParams::zeros(ModelShape {
        kind: ModelKind::TransE,
        n_entity: kb.num_entities(),
        n_relation: kb.num_relations(),
        dim: 1,
        norm: Norm::L1,
        gamma,
    })
    .unwrap();
    let nb = kb.vocab.num_base_relations();
    for i in 0..kb.num_entities() {
        p.entity[[i, 0]] = 2.0 * gamma * i as f64;
    }
    for r in 0..nb {
        p.relation[[r, 0]] = 2.0 * gamma * (r + 1) as f64;
        p.relation[[r + nb, 0]] = -2.0 * gamma * (r + 1) as f64;
    }
    p
}

#[test]
fn margin_loss_extremes() {
    let kb = exact_fit_kb().unwrap();
    let p = line_params(&kb, 1.5);
    // exact positive, negatives far away
    let batch = Batch::new(vec![Triple::new(0, 0, 1)], vec![vec![3, 4, 5]]);
    assert!((margin_loss(&p, &batch) + 1.5).abs() < 1e-12);
    // positive far, negatives exact
    let batch = Batch::new(vec![Triple::new(0, 0, 4)], vec![vec![1, 1]]);
    assert!((margin_loss(&p, &batch) - 1.5).abs() < 1e-12);
}

#[test]
fn pointwise_losses_match_closed_form_pass() {
    for seed in 0..24u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(15, 3, 60, (0.0, 0.0), &mut rng).unwrap();
        let kind = ModelKind::ALL[seed as usize % 4];
        let norm = if seed % 2 == 0 { Norm::L1 } else { Norm::L2 };
        let params = common::random_params(kind, norm, &kb, 6, 2.5, &mut rng);
        let positives: Vec<Triple> = kb.train_augmented().iter().step_by(2).copied().collect();
        let batch = NegativeSampler::new(5, true).batch(&kb, &positives, &mut rng);

        let m = batch_loss(&params, &kb, &batch, &LossSpec::new(LossKind::Margin));
        assert!((m.total - margin_loss(&params, &batch)).abs() < 1e-9);
        let g = params.gamma;
        let naive_margin: f64 = batch
            .positives
            .iter()
            .zip(&batch.negatives)
            .map(|(t, negs)| {
                -(g - common::score(&params, t.head, t.relation, t.tail)).max(0.0)
                    + negs.iter().map(|&e| (g - common::score(&params, t.head, t.relation, e)).max(0.0)).sum::<f64>()
                        / negs.len() as f64
            })
            .sum::<f64>()
            / batch.len() as f64;
        assert!((m.total - naive_margin).abs() < 1e-9);

        let facts = common::augmented(&kb);
        let n = kb.num_entities();
        for (kind, scorer) in [(LossKind::IbleCe, CeScorer::Ible), (LossKind::CibleCe { alpha: 0.3 }, CeScorer::Cible { alpha: 0.3 })] {
            let l = batch_loss(&params, &kb, &batch, &LossSpec::new(kind));
            let pointwise = ce_loss(&params, &kb, &batch, scorer).unwrap();
            let naive: f64 = batch
                .positives
                .iter()
                .zip(&batch.negatives)
                .map(|(t, negs)| {
                    let s = match scorer {
                        CeScorer::Ible => common::ible(&params, &facts, n, t.head, t.relation),
                        CeScorer::Cible { alpha } => common::cible(&params, &facts, n, t.head, t.relation, alpha),
                    };
                    let cand: Vec<f64> = std::iter::once(t.tail).chain(negs.iter().copied()).map(|e| s[e]).collect();
                    common::softmax_nll(&cand)
                })
                .sum::<f64>()
                / batch.len() as f64;
            assert!((l.total - pointwise).abs() < 1e-9, "seed {seed} {kind:?}");
            assert!((l.total - naive).abs() < 1e-9, "seed {seed} {kind:?}");
        }
    }
}

#[test]
fn ce_loss_arithmetic() {
    let kb = exact_fit_kb().unwrap();
    let p = line_params(&kb, 1.0);
    // gold I = 1 through its own fact; e0 has no prototype under `next`
    let batch = Batch::new(vec![Triple::new(1, 0, 2)], vec![vec![0]]);
    let l = ce_loss(&p, &kb, &batch, CeScorer::Ible).unwrap();
    assert!((l - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-12);
    assert!((l - 0.3133).abs() < 1e-4);
    // all candidates without prototypes score 0
    let batch = Batch::new(vec![Triple::new(1, 0, 0)], vec![vec![0; 7]]);
    assert!((ce_loss(&p, &kb, &batch, CeScorer::Ible).unwrap() - 8f64.ln()).abs() < 1e-12);
}

#[test]
fn empty_batch_and_flat_region_have_zero_gradient() {
    let kb = exact_fit_kb().unwrap();
    let p = line_params(&kb, 1.0);
    for kind in [LossKind::Margin, LossKind::IbleCe, LossKind::CibleCe { alpha: 0.5 }] {
        let (l, g) = gradients(&p, &kb, &Batch::default(), &LossSpec::new(kind));
        assert_eq!(l.total, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }
    // positive at distance 4 > γ, negatives at 2 and 6
    let batch = Batch::new(vec![Triple::new(0, 0, 3)], vec![vec![2, 4]]);
    let (_, g) = gradients(&p, &kb, &batch, &LossSpec::new(LossKind::Margin));
    assert_eq!(g.max_abs(), 0.0);
}

#[test]
fn untouched_parameters_get_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kb = random_kb(30, 4, 80, (0.0, 0.0), &mut rng).unwrap();
    for kind in ModelKind::ALL {
        let params = common::random_params(kind, kind.default_norm(), &kb, 4, 3.0, &mut rng);
        let pos = vec![kb.train[0]];
        let batch = NegativeSampler::new(3, true).batch(&kb, &pos, &mut rng);
        let (_, g) = gradients(&params, &kb, &batch, &LossSpec::new(LossKind::Margin));
        let t = pos[0];
        let touched: Vec<usize> = [t.head, t.tail].into_iter().chain(batch.negatives[0].iter().copied()).collect();
        for e in 0..kb.num_entities() {
            if !touched.contains(&e) {
                assert!(g.entity.row(e).iter().all(|&x| x == 0.0));
            }
        }
        for r in 0..kb.num_relations() {
            if r != t.relation {
                assert!(g.relation.row(r).iter().all(|&x| x == 0.0));
                if let Some(w) = &g.projection {
                    assert!(w.index_axis(ndarray::Axis(0), r).iter().all(|&x| x == 0.0));
                }
            }
        }
    }
}

#[test]
fn finite_differences_agree_for_every_kind_and_objective() {
    let rows = audit(&[11, 12, 13], &GradCheckConfig::default()).unwrap();
    assert_eq!(rows.len(), 3 * 4 * 3);
    for r in rows {
        assert!(r.report.checked > 0);
        assert!(r.report.max_rel_error < 1e-4, "{r:?}");
    }
}

#[test]
fn logit_scale_multiplies_softmax_inputs() {
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(12, 3, 40, (0.0, 0.0), &mut rng).unwrap();
        let kind = ModelKind::ALL[seed as usize % 4];
        let params = common::random_params(kind, kind.default_norm(), &kb, 6, 2.0, &mut rng);
        let positives: Vec<Triple> = kb.train_augmented().iter().step_by(3).copied().collect();
        let batch = NegativeSampler::new(4, true).batch(&kb, &positives, &mut rng);
        let facts = common::augmented(&kb);
        let n = kb.num_entities();
        let tau = 3.5;
        for (loss, alpha) in [(LossKind::IbleCe, None), (LossKind::CibleCe { alpha: 0.6 }, Some(0.6))] {
            let spec = LossSpec { logit_scale: tau, ..LossSpec::new(loss) };
            let l = batch_loss(&params, &kb, &batch, &spec);
            let naive: f64 = batch
                .positives
                .iter()
                .zip(&batch.negatives)
                .map(|(t, negs)| {
                    let s = match alpha {
                        None => common::ible(&params, &facts, n, t.head, t.relation),
                        Some(a) => common::cible(&params, &facts, n, t.head, t.relation, a),
                    };
                    let cand: Vec<f64> = std::iter::once(t.tail).chain(negs.iter().copied()).map(|e| tau * s[e]).collect();
                    common::softmax_nll(&cand)
                })
                .sum::<f64>()
                / batch.len() as f64;
            assert!((l.total - naive).abs() < 1e-9, "seed {seed} {loss:?}");
            let report = check_gradients(&params, &kb, &batch, &spec, &GradCheckConfig::default());
            assert!(report.checked > 0);
            assert!(report.max_rel_error < 1e-4, "seed {seed} {loss:?}: {report:?}");
        }
    }
}

#[test]
fn chain_margin_reaches_floor() {
    let kb = chain_kb(5).unwrap();
    let cfg = TrainConfig {
        model: ModelKind::TransE,
        objective: Objective::Margin,
        dim: 8,
        gamma: 2.0,
        lr: 0.01,
        batch_size: 8,
        negatives: 4,
        epochs: 2000,
        eval_every: 0,
        ..TrainConfig::default()
    };
    let out = train(&kb, &cfg).unwrap();
    assert_eq!(out.steps, 2000);
    let last = out.history.component("translational-margin").last().unwrap().1;
    assert!(last <= -0.9 * cfg.gamma, "final margin loss {last}");
}

#[test]
fn seeded_training_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let kb = random_kb(20, 3, 90, (0.1, 0.1), &mut rng).unwrap();
    for model in ModelKind::ALL {
        let cfg = TrainConfig {
            model,
            objective: Objective::CibleCe,
            dim: 8,
            batch_size: 16,
            negatives: 6,
            epochs: 4,
            lr: 0.01,
            ..TrainConfig::default()
        };
        let a = train(&kb, &cfg).unwrap();
        let b = train(&kb, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        assert_eq!(a.validation, b.validation);
        let c = train(&kb, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.history, c.history);
    }
}

#[test]
fn non_finite_parameters_abort_with_divergence() {
    let kb = chain_kb(4).unwrap();
    let cfg = TrainConfig {
        model: ModelKind::TransE,
        objective: Objective::Margin,
        dim: 2,
        epochs: 3,
        eval_every: 0,
        ..TrainConfig::default()
    };
    let mut p = cible::train::init_params(&kb, &cfg).unwrap();
    p.entity[[1, 0]] = f64::NAN;
    let err = train_from(&kb, &cfg, p).unwrap_err();
    assert!(matches!(err, Error::Divergence(_)), "{err}");
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn cible_history_logs_both_components() {
    let kb = exact_fit_kb().unwrap();
    let cfg = TrainConfig {
        model: ModelKind::RRotatE,
        dim: 8,
        negatives: 4,
        batch_size: 6,
        epochs: 3,
        eval_every: 0,
        ..TrainConfig::default()
    };
    let out = train(&kb, &cfg).unwrap();
    for c in ["total", "translational-margin", "ible-ce", "cible-ce"] {
        assert_eq!(out.history.component(c).len(), 3, "{c}");
    }
    let csv = out.history.to_csv();
    assert!(csv.starts_with("step,component,value\n"));
    assert_eq!(csv.lines().count(), 1 + 12);
}

#[test]
fn saturated_query_uses_fallback() {
    let v = cible::kb::Vocabulary::from_names(["a", "b"].map(String::from), ["r".to_string()]).unwrap();
    let kb = KnowledgeBase::from_train(v, vec![Triple::new(0, 0, 0), Triple::new(0, 0, 1)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_negatives(&kb, &Triple::new(0, 0, 1), 3, true, &mut rng).fell_back);
    let mut s = NegativeSampler::new(3, true);
    s.batch(&kb, &[Triple::new(0, 0, 1), Triple::new(0, 0, 0)], &mut rng);
    assert_eq!(s.fallbacks, 2);
}

#[test]
fn negatives_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let kb = random_kb(135, 2, 200, (0.0, 0.0), &mut rng).unwrap();
    let pos = kb.train[0];
    let known = kb.tails_of(pos.head, pos.relation).to_vec();
    let allowed = 135 - known.len();
    let draws = 10_000;
    let s = sample_negatives(&kb, &pos, draws, true, &mut rng);
    let mut counts = vec![0usize; 135];
    for e in s.ids {
        counts[e] += 1;
    }
    let p = 1.0 / allowed as f64;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    let mut chi2 = 0.0;
    for (e, &c) in counts.iter().enumerate() {
        if known.contains(&e) {
            assert_eq!(c, 0);
            continue;
        }
        assert!((c as f64 - mean).abs() <= 3.0 * sd, "entity {e}: {c} vs {mean}±{sd}");
        chi2 += (c as f64 - mean).powi(2) / mean;
    }
    // χ² with ~134 degrees of freedom, far tail
    assert!(chi2 < 200.0, "chi2 {chi2}");
}

#[test]
fn margin_optimum_minimises_ible_cross_entropy() {
    consistency::margin_optimum_minimises_ible_cross_entropy();
}

#[test]
fn cible_training_saturates_scores() {
    consistency::cible_training_saturates_scores();
}

#[test]
fn random_kb_fallback_counter_stays_zero_when_unsaturated() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kb = random_kb(40, 2, 60, (0.0, 0.0), &mut rng).unwrap();
    let mut s = NegativeSampler::new(16, true);
    for _ in 0..10 {
        let i = rng.random_range(0..kb.train.len());
        s.batch(&kb, &[kb.train[i]], &mut rng);
    }
    assert_eq!(s.fallbacks, 0);
}
