//! Naive reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod consistency;
pub mod oracles;

use std::collections::BTreeSet;

use cible::geometry::{ModelKind, ModelParams, ModelShape, Norm};
use cible::kb::{EntityId, KnowledgeBase, RelationId, Triple};
use rand::Rng;

pub fn random_params<R: Rng>(kind: ModelKind, norm: Norm, kb: &KnowledgeBase, dim: usize, gamma: f64, rng: &mut R) -> ModelParams {
    let shape = ModelShape {
        kind,
        n_entity: kb.num_entities(),
        n_relation: kb.num_relations(),
        dim,
        norm,
        gamma,
    };
    let mut p = ModelParams::init(shape, 1.0, rng).unwrap();
    if let Some(w) = p.projection.as_mut() {
        w.mapv_inplace(|x| x + rng.random_range(-0.5..0.5));
    }
    p
}

pub fn project(p: &ModelParams, e: EntityId, r: RelationId) -> Vec<f64> {
    let x: Vec<f64> = p.entity.row(e).to_vec();
    let Some(w) = p.projection.as_ref() else { return x };
    let k = w.shape()[1];
    let halves = x.len() / k;
    let mut out = vec![0.0; x.len()];
    for h in 0..halves {
        for i in 0..k {
            let mut acc = 0.0;
            for j in 0..k {
                acc += w[[r, i, j]] * x[h * k + j];
            }
            out[h * k + i] = acc;
        }
    }
    out
}

pub fn translate(p: &ModelParams, e: EntityId, r: RelationId) -> Vec<f64> {
    let q = project(p, e, r);
    if p.kind.is_complex() {
        let k = q.len() / 2;
        let mut out = vec![0.0; q.len()];
        for j in 0..k {
            let th = p.relation[[r, j]];
            out[j] = q[j] * th.cos() - q[k + j] * th.sin();
            out[k + j] = q[j] * th.sin() + q[k + j] * th.cos();
        }
        out
    } else {
        q.iter().enumerate().map(|(j, x)| x + p.relation[[r, j]]).collect()
    }
}

pub fn norm(p: &ModelParams, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    match (p.kind.is_complex(), p.norm) {
        (_, Norm::L2) => d.iter().map(|x| x * x).sum::<f64>().sqrt(),
        (false, Norm::L1) => d.iter().map(|x| x.abs()).sum(),
        (true, Norm::L1) => {
            let k = d.len() / 2;
            (0..k).map(|j| (d[j] * d[j] + d[k + j] * d[k + j]).sqrt()).sum()
        }
    }
}

pub fn score(p: &ModelParams, h: EntityId, r: RelationId, t: EntityId) -> f64 {
    norm(p, &translate(p, h, r), &project(p, t, r))
}

/// Inverse-augmented training facts built independently of the library.
pub fn augmented(kb: &KnowledgeBase) -> BTreeSet<Triple> {
    let nb = kb.vocab.num_base_relations();
    kb.train
        .iter()
        .flat_map(|t| [*t, Triple::new(t.tail, t.relation + nb, t.head)])
        .collect()
}

pub fn all_known(kb: &KnowledgeBase) -> BTreeSet<Triple> {
    let nb = kb.vocab.num_base_relations();
    kb.train
        .iter()
        .chain(&kb.valid)
        .chain(&kb.test)
        .flat_map(|t| [*t, Triple::new(t.tail, t.relation + nb, t.head)])
        .collect()
}

pub fn ible(p: &ModelParams, facts: &BTreeSet<Triple>, n: usize, h: EntityId, r: RelationId) -> Vec<f64> {
    let u = translate(p, h, r);
    (0..n)
        .map(|t| {
            let protos: Vec<EntityId> = facts
                .iter()
                .filter(|f| f.relation == r && f.tail == t)
                .map(|f| f.head)
                .collect();
            if protos.is_empty() {
                return 0.0;
            }
            let sum: f64 = protos
                .iter()
                .map(|&q| (p.gamma - norm(p, &u, &translate(p, q, r))).max(0.0))
                .sum();
            sum / (p.gamma * protos.len() as f64)
        })
        .collect()
}

pub fn cible(p: &ModelParams, facts: &BTreeSet<Triple>, n: usize, h: EntityId, r: RelationId, alpha: f64) -> Vec<f64> {
    ible(p, facts, n, h, r)
        .into_iter()
        .enumerate()
        .map(|(t, i)| (1.0 - alpha) * i + alpha * (p.gamma - score(p, h, r, t)).max(0.0) / p.gamma)
        .collect()
}

pub fn softmax_nll(s: &[f64]) -> f64 {
    let z: f64 = s.iter().map(|x| x.exp()).sum();
    -(s[0].exp() / z).ln()
}
