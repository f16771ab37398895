//! Brute-force oracle comparisons; each panics on the first mismatch.

use std::collections::BTreeSet;

use cible::eval::{filtered_ranks, LinkScorer, ModelScorer, ScorerKind};
use cible::geometry::{ModelKind, Norm};
use cible::ible::{cible_scores, ible_scores};
use cible::kb::{EntityId, KnowledgeBase, RelationId, Triple};
use cible::rules::{mine_rules, rule_stats, sample_rules, KeepRules, Rule};
use cible::synth::random_kb;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_small_kb(rng: &mut ChaCha8Rng, max_entities: usize) -> KnowledgeBase {
    let n_ent = rng.random_range(3..=max_entities);
    let n_rel = rng.random_range(1..=4);
    let n_facts = rng.random_range(1..=3 * n_ent * n_rel);
    random_kb(n_ent, n_rel, n_facts, (0.15, 0.15), rng).unwrap()
}

pub fn ible_and_cible_match_naive_scorer(seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_small_kb(&mut rng, 50);
        let kind = ModelKind::ALL[seed as usize % 4];
        let norm = if seed % 3 == 0 { Norm::L2 } else { Norm::L1 };
        let gamma = rng.random_range(1.0..6.0);
        let params = super::random_params(kind, norm, &kb, 4, gamma, &mut rng);
        let facts = super::augmented(&kb);
        let n = kb.num_entities();
        for _ in 0..4 {
            let h = rng.random_range(0..n);
            let r = rng.random_range(0..kb.num_relations());
            let alpha = rng.random_range(0.05..0.95);
            let got = ible_scores(&params, &kb, h, r);
            let want = super::ible(&params, &facts, n, h, r);
            let got_c = cible_scores(&params, &kb, h, r, alpha).unwrap();
            let want_c = super::cible(&params, &facts, n, h, r, alpha);
            for t in 0..n {
                assert!((got[t] - want[t]).abs() <= 1e-9, "seed {seed} {kind} ible t={t}: {} vs {}", got[t], want[t]);
                assert!((got_c[t] - want_c[t]).abs() <= 1e-9, "seed {seed} {kind} cible t={t}");
                assert!((params.score(h, r, t) - super::score(&params, h, r, t)).abs() <= 1e-9);
            }
        }
    }
}

/// Scores with deliberate ties.
struct Coarse(u64, usize);

impl LinkScorer for Coarse {
    fn score_tails(&self, r: RelationId, heads: &[EntityId]) -> Vec<Vec<f64>> {
        heads
            .iter()
            .map(|&h| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.0 ^ ((h as u64) << 20) ^ r as u64);
                (0..self.1).map(|_| rng.random_range(0..4) as f64).collect()
            })
            .collect()
    }
}

fn brute_rank(scores: &[f64], gold: EntityId, h: EntityId, r: RelationId, known: &BTreeSet<Triple>) -> usize {
    1 + (0..scores.len())
        .filter(|&e| e != gold && !known.contains(&Triple::new(h, r, e)) && scores[e] >= scores[gold])
        .count()
}

pub fn evaluate_matches_brute_force_ranking(seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let kb = random_small_kb(&mut rng, 50);
        let known = super::all_known(&kb);
        let nb = kb.vocab.num_base_relations();
        let n = kb.num_entities();

        let kind = ModelKind::ALL[seed as usize % 4];
        let params = super::random_params(kind, Norm::L1, &kb, 4, 3.0, &mut rng);
        let model = ModelScorer::new(&params, &kb, ScorerKind::Cible { alpha: 0.4 });
        let coarse = Coarse(seed, n);
        let scorers: [&dyn LinkScorer; 2] = [&model, &coarse];
        for (which, scorer) in scorers.into_iter().enumerate() {
            let (tail, head) = filtered_ranks(scorer, &kb, &kb.test);
            for (i, t) in kb.test.iter().enumerate() {
                let s = &scorer.score_tails(t.relation, &[t.head])[0][..n];
                assert_eq!(tail[i], brute_rank(s, t.tail, t.head, t.relation, &known), "seed {seed} scorer {which} tail {t:?}");
                let inv = t.relation + nb;
                let s = &scorer.score_tails(inv, &[t.tail])[0][..n];
                assert_eq!(head[i], brute_rank(s, t.head, t.tail, inv, &known), "seed {seed} scorer {which} head {t:?}");
            }
        }
    }
}

/// Distinct (x, y) pairs grounding `body`, by nested loops over entities.
fn brute_body_pairs(facts: &BTreeSet<Triple>, n: usize, body: &[RelationId]) -> BTreeSet<(EntityId, EntityId)> {
    let has = |a, r, b| facts.contains(&Triple::new(a, r, b));
    let mut pairs = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            let grounded = match body {
                [a] => has(x, *a, y),
                [a, b] => (0..n).any(|z| has(x, *a, z) && has(z, *b, y)),
                [a, b, c] => (0..n).any(|z1| has(x, *a, z1) && (0..n).any(|z2| has(z1, *b, z2) && has(z2, *c, y))),
                _ => unreachable!(),
            };
            if grounded {
                pairs.insert((x, y));
            }
        }
    }
    pairs
}

fn brute_stats(facts: &BTreeSet<Triple>, n: usize, rule: &Rule) -> (usize, usize) {
    let pairs = brute_body_pairs(facts, n, &rule.body);
    let support = pairs
        .iter()
        .filter(|&&(x, y)| facts.contains(&Triple::new(x, rule.head, y)))
        .count();
    (support, pairs.len())
}

pub fn rule_stats_match_nested_loop_grounding(seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let kb = random_small_kb(&mut rng, 24);
        let facts = super::augmented(&kb);
        let n = kb.num_entities();
        let rules = sample_rules(&kb.vocab, 3, 12, &mut rng).unwrap();
        for rule in &rules {
            let s = rule_stats(&kb, rule);
            let (support, body) = brute_stats(&facts, n, rule);
            assert_eq!((s.support, s.body_count), (support, body), "seed {seed} {rule:?}");
            match s.precision {
                Some(p) => assert!((p - support as f64 / body as f64).abs() <= 1e-12),
                None => assert_eq!(body, 0),
            }
        }
    }
}

pub fn exhaustive_mining_matches_per_rule_grounding(seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let kb = random_small_kb(&mut rng, 12);
        let n = kb.num_entities();
        let facts = super::augmented(&kb);
        let keep = KeepRules {
            per_head: usize::MAX / 8,
            ..KeepRules::NONE
        };
        let mined = mine_rules(&kb, 3, &keep).unwrap();
        let all = cible::rules::enumerate_rules(&kb.vocab, 3, cible::rules::RuleMode::All).unwrap();
        let (mut ibl, mut non) = ((0usize, 0.0f64, 0.0f64), (0usize, 0.0f64, 0.0f64));
        let mut supported = 0;
        for rule in &all {
            let (s, b) = brute_stats(&facts, n, rule);
            if b == 0 {
                continue;
            }
            supported += usize::from(s >= 1 && rule.body != [rule.head]);
            let acc = if rule.is_ibl { &mut ibl } else { &mut non };
            acc.0 += 1;
            acc.1 += s as f64;
            acc.2 += s as f64 / b as f64;
        }
        let q = &mined.quality;
        assert_eq!(q.ibl.rules + q.non_ibl.rules, all.len());
        assert_eq!((q.ibl.supported, q.non_ibl.supported), (ibl.0, non.0));
        assert_eq!(mined.rules.len(), supported, "seed {seed}");
        for (c, acc) in [(&q.ibl, ibl), (&q.non_ibl, non)] {
            if acc.0 > 0 {
                assert!((c.mean_support - acc.1 / acc.0 as f64).abs() < 1e-9);
                assert!((c.mean_precision - acc.2 / acc.0 as f64).abs() < 1e-9);
            }
        }
        for sr in &mined.rules {
            let (s, b) = brute_stats(&facts, n, &sr.rule);
            assert_eq!((sr.stats.support, sr.stats.body_count), (s, b));
        }
    }
}

pub fn kb_indexes_match_linear_scan(seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let kb = random_small_kb(&mut rng, 50);
        let aug = super::augmented(&kb);
        let known = super::all_known(&kb);
        for _ in 0..20 {
            let h = rng.random_range(0..kb.num_entities());
            let r = rng.random_range(0..kb.num_relations());
            let tails: Vec<EntityId> = aug.iter().filter(|t| t.head == h && t.relation == r).map(|t| t.tail).collect();
            assert_eq!(kb.tails_of(h, r), tails.as_slice());
            let mask: Vec<EntityId> = known.iter().filter(|t| t.head == h && t.relation == r).map(|t| t.tail).collect();
            assert_eq!(kb.filtered_mask(h, r), mask.as_slice());
            let cands: Vec<(EntityId, EntityId)> = aug.iter().filter(|t| t.relation == r).map(|t| (t.head, t.tail)).collect();
            assert_eq!(kb.prototype_candidates(r), cands.as_slice());
        }
    }
}
