//! Synthetic knowledge bases: random graphs, chains, exact-TransE lattices
//! and thresholded continuous embeddings.

use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{ModelKind, ModelParams, ModelShape, Norm};
use crate::kb::{KnowledgeBase, Triple, Vocabulary};

fn vocab(n_entity: usize, n_relation: usize) -> Vocabulary {
    Vocabulary::from_names(
        (0..n_entity).map(|i| format!("e{i}")),
        (0..n_relation).map(|i| format!("r{i}")),
    )
    .expect("distinct generated names")
}

/// Uniformly random distinct facts split into train/valid/test by the given
/// fractions of `n_facts` (the remainder goes to train).
pub fn random_kb<R: Rng + ?Sized>(
    n_entity: usize,
    n_relation: usize,
    n_facts: usize,
    held_out: (f64, f64),
    rng: &mut R,
) -> Result<KnowledgeBase> {
    if n_entity == 0 || n_relation == 0 {
        return Err(Error::Config("random_kb needs entities and relations".into()));
    }
    let space = n_entity * n_entity * n_relation;
    let n_facts = n_facts.min(space);
    let mut seen = BTreeSet::new();
    let mut facts = Vec::with_capacity(n_facts);
    while facts.len() < n_facts {
        let t = Triple::new(
            rng.random_range(0..n_entity),
            rng.random_range(0..n_relation),
            rng.random_range(0..n_entity),
        );
        if seen.insert(t) {
            facts.push(t);
        }
    }
    let n_valid = (held_out.0 * n_facts as f64) as usize;
    let n_test = (held_out.1 * n_facts as f64) as usize;
    let test = facts.split_off(n_facts - n_test);
    let valid = facts.split_off(facts.len() - n_valid);
    KnowledgeBase::new(vocab(n_entity, n_relation), facts, valid, test)
}

/// `e0 → e1 → … → e(n−1)` under a single relation `next`.
pub fn chain_kb(n_entity: usize) -> Result<KnowledgeBase> {
    let train = (1..n_entity).map(|i| Triple::new(i - 1, 0, i)).collect();
    let vocab = Vocabulary::from_names(
        (0..n_entity).map(|i| format!("e{i}")),
        ["next".to_string()],
    )?;
    KnowledgeBase::from_train(vocab, train)
}

/// Six entities on a line with `next` (i → i+1) and `skip` (i → i+2). Every
/// relation is injective, so a TransE embedding with equal spacing fits the
/// training set exactly and puts every non-fact at least one spacing away.
pub fn exact_fit_kb() -> Result<KnowledgeBase> {
    let mut train = Vec::new();
    for i in 0..5 {
        train.push(Triple::new(i, 0, i + 1));
    }
    for i in 0..4 {
        train.push(Triple::new(i, 1, i + 2));
    }
    let vocab = Vocabulary::from_names(
        (0..6).map(|i| format!("e{i}")),
        ["next".to_string(), "skip".to_string()],
    )?;
    KnowledgeBase::from_train(vocab, train)
}

/// An exact-TransE knowledge base together with its generating embedding.
#[derive(Clone, Debug)]
pub struct ExactTransE {
    pub kb: KnowledgeBase,
    pub params: ModelParams,
}

/// Entities at distinct integer grid points of `[0, side)^dim`, relations
/// integer step vectors with coordinates in `{−1, 0, 1}` (not all zero). The
/// training set is exactly `{(h, r, t) : e_h + r = e_t}`, so the generating
/// embedding scores every fact 0 and every non-fact at least 1. Resamples up
/// to 100 times if no fact arises.
pub fn lattice_transe<R: Rng + ?Sized>(
    n_entity: usize,
    n_relation: usize,
    dim: usize,
    rng: &mut R,
) -> Result<ExactTransE> {
    if n_entity < 2 || n_relation == 0 || dim == 0 {
        return Err(Error::Config(
            "lattice needs at least 2 entities, 1 relation and dim ≥ 1".into(),
        ));
    }
    // side with roughly twice as many points as entities
    let mut side = 2usize;
    while side.pow(dim as u32) < 2 * n_entity {
        side += 1;
    }
    for _ in 0..100 {
        let mut cells: Vec<usize> = (0..side.pow(dim as u32)).collect();
        cells.shuffle(rng);
        let points: Vec<Vec<i64>> = cells[..n_entity]
            .iter()
            .map(|&c| (0..dim).map(|k| ((c / side.pow(k as u32)) % side) as i64).collect())
            .collect();
        let steps: Vec<Vec<i64>> = (0..n_relation)
            .map(|_| loop {
                let v: Vec<i64> = (0..dim).map(|_| rng.random_range(-1..=1)).collect();
                if v.iter().any(|&x| x != 0) {
                    break v;
                }
            })
            .collect();
        let at: HashMap<&[i64], usize> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_slice(), i))
            .collect();
        let mut train = Vec::new();
        for (r, step) in steps.iter().enumerate() {
            for (h, p) in points.iter().enumerate() {
                let q: Vec<i64> = p.iter().zip(step).map(|(a, b)| a + b).collect();
                if let Some(&t) = at.get(q.as_slice()) {
                    train.push(Triple::new(h, r, t));
                }
            }
        }
        if train.is_empty() {
            continue;
        }
        let kb = KnowledgeBase::from_train(vocab(n_entity, n_relation), train)?;
        let mut params = ModelParams::zeros(ModelShape {
            kind: ModelKind::TransE,
            n_entity,
            n_relation: 2 * n_relation,
            dim,
            norm: Norm::L1,
            gamma: 1.0,
        })?;
        params.entity = Array2::from_shape_fn((n_entity, dim), |(i, k)| points[i][k] as f64);
        params.relation = Array2::from_shape_fn((2 * n_relation, dim), |(r, k)| {
            if r < n_relation {
                steps[r][k] as f64
            } else {
                -(steps[r - n_relation][k] as f64)
            }
        });
        return Ok(ExactTransE { kb, params });
    }
    Err(Error::Data("lattice sampling produced no facts in 100 attempts".into()))
}

/// Random continuous embeddings with facts `{(h, r, t) : ‖e_h + r − e_t‖₂ < threshold}`.
/// Nearby but distinct entities share facts only partially, so the result is
/// not an exact TransE model.
pub fn thresholded_transe<R: Rng + ?Sized>(
    n_entity: usize,
    n_relation: usize,
    dim: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<ExactTransE> {
    let shape = ModelShape {
        kind: ModelKind::TransE,
        n_entity,
        n_relation: 2 * n_relation,
        dim,
        norm: Norm::L2,
        gamma: threshold,
    };
    for _ in 0..100 {
        let mut params = ModelParams::init(shape, 1.0, rng)?;
        for r in 0..n_relation {
            let row = params.relation.row(r).to_owned();
            params.relation.row_mut(r + n_relation).assign(&(-row));
        }
        let mut train = Vec::new();
        for r in 0..n_relation {
            for h in 0..n_entity {
                for t in 0..n_entity {
                    if params.score(h, r, t) < threshold {
                        train.push(Triple::new(h, r, t));
                    }
                }
            }
        }
        if train.is_empty() {
            continue;
        }
        let kb = KnowledgeBase::from_train(vocab(n_entity, n_relation), train)?;
        return Ok(ExactTransE { kb, params });
    }
    Err(Error::Data("thresholded sampling produced no facts in 100 attempts".into()))
}
