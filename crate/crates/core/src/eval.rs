//! Filtered link-prediction evaluation.
//!
//! Every test triple `(h, r, t)` yields a tail query `(h, r, ?)` with answer
//! `t` and a head query answered as `(t, r⁻¹, ?)` with answer `h`. Known
//! facts from all splits other than the answer are removed from the ranking,
//! and ties are broken pessimistically.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::ible::{check_alpha, cible_scores_with, hinge, ible_scores_with};
use crate::kb::{EntityId, KnowledgeBase, RelationId, Split, Triple};

/// Anything that produces dense tail scores (higher is better).
pub trait LinkScorer: Sync {
    /// One score vector of length `n_entity` per head in `heads`.
    fn score_tails(&self, r: RelationId, heads: &[EntityId]) -> Vec<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ScorerKind {
    /// Negative translational distance.
    Translational,
    Ible,
    Cible { alpha: f64 },
}

impl ScorerKind {
    /// Parses `translational`, `ible` or `cible`; `cible` needs `alpha`.
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        match name {
            "translational" | "trans" => Ok(ScorerKind::Translational),
            "ible" => Ok(ScorerKind::Ible),
            "cible" => {
                let alpha = alpha.ok_or_else(|| {
                    Error::Config("scorer `cible` needs alpha (checkpoint or --alpha)".into())
                })?;
                check_alpha(alpha)?;
                Ok(ScorerKind::Cible { alpha })
            }
            _ => Err(Error::Config(format!(
                "unknown scorer {name:?} (expected translational, ible or cible)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScorerKind::Translational => "translational",
            ScorerKind::Ible => "ible",
            ScorerKind::Cible { .. } => "cible",
        }
    }
}

/// Scores queries with trained parameters.
pub struct ModelScorer<'a> {
    pub params: &'a ModelParams,
    pub kb: &'a KnowledgeBase,
    pub kind: ScorerKind,
}

impl<'a> ModelScorer<'a> {
    pub fn new(params: &'a ModelParams, kb: &'a KnowledgeBase, kind: ScorerKind) -> Self {
        ModelScorer { params, kb, kind }
    }
}

impl LinkScorer for ModelScorer<'_> {
    fn score_tails(&self, r: RelationId, heads: &[EntityId]) -> Vec<Vec<f64>> {
        let view = self.params.relation_view(r);
        let n = self.params.n_entity();
        heads
            .iter()
            .map(|&h| match self.kind {
                ScorerKind::Translational => {
                    let u = view.translated(h);
                    (0..n).map(|t| -view.tail_distance(&u, t)).collect()
                }
                ScorerKind::Ible => ible_scores_with(&view, self.kb, h),
                ScorerKind::Cible { alpha } => cible_scores_with(&view, self.kb, h, alpha),
            })
            .collect()
    }
}

/// Hinged translational scores `max(γ − T, 0) / γ`, as used inside CIBLE.
pub fn hinged_translational_scores(params: &ModelParams, h: EntityId, r: RelationId) -> Vec<f64> {
    let view = params.relation_view(r);
    let u = view.translated(h);
    (0..params.n_entity())
        .map(|t| hinge(params.gamma, view.tail_distance(&u, t)) / params.gamma)
        .collect()
}

/// Filtered rank of `gold`: one plus the number of unmasked rivals scoring
/// at least as high. `mask` must be sorted; `gold` itself is never masked.
pub fn rank_of_gold(scores: &[f64], gold: EntityId, mask: &[EntityId]) -> Result<usize> {
    let Some(&target) = scores.get(gold) else {
        return Err(Error::Data(format!(
            "gold entity {gold} out of range for {} scores",
            scores.len()
        )));
    };
    let mut rank = 1;
    let mut masked = mask.iter().peekable();
    for (e, &s) in scores.iter().enumerate() {
        while masked.next_if(|&&m| m < e).is_some() {}
        if masked.peek() == Some(&&e) || e == gold {
            continue;
        }
        if s >= target || s.is_nan() {
            rank += 1;
        }
    }
    Ok(rank)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MetricBlock {
    pub count: usize,
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl MetricBlock {
    pub fn from_ranks(ranks: &[usize]) -> Self {
        if ranks.is_empty() {
            return MetricBlock::default();
        }
        let n = ranks.len() as f64;
        let frac = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        MetricBlock {
            count: ranks.len(),
            mr: ranks.iter().map(|&r| r as f64).sum::<f64>() / n,
            mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
            hits1: frac(1),
            hits3: frac(3),
            hits10: frac(10),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RankingReport {
    pub tail: MetricBlock,
    pub head: MetricBlock,
    pub all: MetricBlock,
}

impl RankingReport {
    pub fn from_ranks(tail: &[usize], head: &[usize]) -> Self {
        let all: Vec<usize> = tail.iter().chain(head).copied().collect();
        RankingReport {
            tail: MetricBlock::from_ranks(tail),
            head: MetricBlock::from_ranks(head),
            all: MetricBlock::from_ranks(&all),
        }
    }

    pub fn query_count(&self) -> usize {
        self.all.count
    }

    pub fn table_header() -> String {
        format!(
            "{:<24} {:>8} {:>7} {:>6} {:>6} {:>6}",
            "", "MR", "MRR", "H@1", "H@3", "H@10"
        )
    }

    /// Aggregate row in the usual column order; MR to one decimal, hits in
    /// percent.
    pub fn table_row(&self, label: &str) -> String {
        block_row(label, &self.all)
    }
}

fn block_row(label: &str, m: &MetricBlock) -> String {
    format!(
        "{:<24} {:>8.1} {:>7.3} {:>6.1} {:>6.1} {:>6.1}",
        label,
        m.mr,
        m.mrr,
        100.0 * m.hits1,
        100.0 * m.hits3,
        100.0 * m.hits10
    )
}

impl fmt::Display for RankingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::table_header())?;
        writeln!(f, "{}", block_row("tail", &self.tail))?;
        writeln!(f, "{}", block_row("head", &self.head))?;
        write!(f, "{}", block_row("all", &self.all))
    }
}

const CHUNK: usize = 256;

/// Filtered ranks of the tail and head queries built from `triples`.
pub fn filtered_ranks<S: LinkScorer + ?Sized>(
    scorer: &S,
    kb: &KnowledgeBase,
    triples: &[Triple],
) -> (Vec<usize>, Vec<usize>) {
    // query i < n is the tail query of triples[i], query n + i its head query
    let n = triples.len();
    let mut groups: BTreeMap<RelationId, Vec<(usize, EntityId, EntityId)>> = BTreeMap::new();
    for (i, t) in triples.iter().enumerate() {
        groups
            .entry(t.relation)
            .or_default()
            .push((i, t.head, t.tail));
        groups
            .entry(kb.vocab.inverse(t.relation))
            .or_default()
            .push((n + i, t.tail, t.head));
    }
    let jobs: Vec<(RelationId, &[(usize, EntityId, EntityId)])> = groups
        .iter()
        .flat_map(|(&r, qs)| qs.chunks(CHUNK).map(move |c| (r, c)))
        .collect();
    let ranked: Vec<Vec<(usize, usize)>> = jobs
        .par_iter()
        .map(|&(r, queries)| {
            let heads: Vec<EntityId> = queries.iter().map(|q| q.1).collect();
            let scores = scorer.score_tails(r, &heads);
            queries
                .iter()
                .zip(scores)
                .map(|(&(idx, h, gold), s)| {
                    let rank = rank_of_gold(&s, gold, kb.filtered_mask(h, r))
                        .expect("gold id validated by the knowledge base");
                    (idx, rank)
                })
                .collect()
        })
        .collect();
    let mut ranks = vec![0usize; 2 * n];
    for (idx, rank) in ranked.into_iter().flatten() {
        ranks[idx] = rank;
    }
    let head = ranks.split_off(n);
    (ranks, head)
}

pub fn evaluate_triples<S: LinkScorer + ?Sized>(
    scorer: &S,
    kb: &KnowledgeBase,
    triples: &[Triple],
) -> RankingReport {
    let (tail, head) = filtered_ranks(scorer, kb, triples);
    RankingReport::from_ranks(&tail, &head)
}

/// Evaluates a split with any scorer.
pub fn evaluate<S: LinkScorer + ?Sized>(
    scorer: &S,
    kb: &KnowledgeBase,
    split: Split,
) -> RankingReport {
    evaluate_triples(scorer, kb, kb.split(split))
}

/// Evaluates trained parameters with one of the model scorers.
pub fn evaluate_model(
    params: &ModelParams,
    kb: &KnowledgeBase,
    split: Split,
    kind: ScorerKind,
) -> RankingReport {
    evaluate(&ModelScorer::new(params, kb, kind), kb, split)
}
