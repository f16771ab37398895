//! Prototype plausibility scores, IBLE aggregation and the CIBLE combination.
//!
//! For a tail query `(h, r, ?)` every training fact `(p, r, t)` offers `p` as
//! a prototype for `t`. A prototype's plausibility is the hinge
//! `max(γ − ‖trans_r(h) − trans_r(p)‖, 0)` and an entity's IBLE score is the
//! average plausibility of its prototypes divided by `γ`, so it lies in
//! `[0, 1]`. CIBLE mixes that with the hinged translational score.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ModelParams, RelationView};
use crate::kb::{EntityId, KnowledgeBase, RelationId, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `(h, r, ?)`
    Tail,
    /// `(?, r, t)`
    Head,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tail" => Ok(Direction::Tail),
            "head" => Ok(Direction::Head),
            _ => Err(Error::Config(format!(
                "direction must be `tail` or `head`, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrototypeScore {
    pub prototype: EntityId,
    /// In `[0, γ]`.
    pub score: f64,
}

#[inline]
pub fn hinge(gamma: f64, distance: f64) -> f64 {
    (gamma - distance).max(0.0)
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Plausibility of `p` as a prototype of the query entity `q`.
///
/// Tail direction compares `trans_r` images; head direction compares
/// `trans_r⁻¹` images.
pub fn f_score(
    params: &ModelParams,
    q: EntityId,
    p: EntityId,
    r: RelationId,
    direction: Direction,
) -> f64 {
    let d = match direction {
        Direction::Tail => params.prototype_distance(q, p, r),
        Direction::Head => {
            let a = params.inv_translate(q, r);
            let b = params.inv_translate(p, r);
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            params.distance(&diff)
        }
    };
    hinge(params.gamma, d)
}

/// Prototype plausibilities `f_hr(p)` for every distinct training head of
/// the view's relation, as a dense vector (zero for non-candidates).
pub fn prototype_scores(view: &RelationView<'_>, kb: &KnowledgeBase, h: EntityId) -> Vec<f64> {
    let gamma = view.params().gamma;
    let mut f = vec![0.0; kb.num_entities()];
    for &p in &kb.relation_index(view.relation()).heads {
        f[p] = hinge(gamma, view.prototype_distance(h, p));
    }
    f
}

/// IBLE scores for `(h, r, ?)` from a prepared relation view.
pub fn ible_scores_with(view: &RelationView<'_>, kb: &KnowledgeBase, h: EntityId) -> Vec<f64> {
    let f = prototype_scores(view, kb, h);
    aggregate(&f, kb, view.relation(), view.params().gamma)
}

/// `I_hr(t) = Σ_{(p,r,t)} f_hr(p) / (γ · |{p | (p,r,t)}|)`, summed in
/// ascending prototype order.
pub(crate) fn aggregate(f: &[f64], kb: &KnowledgeBase, r: RelationId, gamma: f64) -> Vec<f64> {
    let mut scores = vec![0.0; kb.num_entities()];
    for (t, protos) in &kb.relation_index(r).by_tail {
        let sum: f64 = protos.iter().map(|&p| f[p]).sum();
        scores[*t] = sum / (gamma * protos.len() as f64);
    }
    scores
}

pub fn ible_scores(
    params: &ModelParams,
    kb: &KnowledgeBase,
    h: EntityId,
    r: RelationId,
) -> Vec<f64> {
    ible_scores_with(&params.relation_view(r), kb, h)
}

/// CIBLE scores from a prepared relation view.
pub fn cible_scores_with(
    view: &RelationView<'_>,
    kb: &KnowledgeBase,
    h: EntityId,
    alpha: f64,
) -> Vec<f64> {
    let gamma = view.params().gamma;
    let mut scores = ible_scores_with(view, kb, h);
    let u = view.translated(h);
    for (t, s) in scores.iter_mut().enumerate() {
        let trans = hinge(gamma, view.tail_distance(&u, t)) / gamma;
        *s = (1.0 - alpha) * *s + alpha * trans;
    }
    scores
}

/// `C_hr(t) = (1 − α) I_hr(t) + (α/γ) max(γ − T(h,r,t), 0)` for all `t`.
pub fn cible_scores(
    params: &ModelParams,
    kb: &KnowledgeBase,
    h: EntityId,
    r: RelationId,
    alpha: f64,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    Ok(cible_scores_with(&params.relation_view(r), kb, h, alpha))
}

/// The `k` most plausible prototypes for `(h, r, ?)`, excluding `h` itself.
/// Ties are broken by ascending entity id.
pub fn top_prototypes(
    params: &ModelParams,
    kb: &KnowledgeBase,
    h: EntityId,
    r: RelationId,
    k: usize,
) -> Vec<PrototypeScore> {
    if k == 0 {
        return Vec::new();
    }
    let view = params.relation_view(r);
    let mut out: Vec<PrototypeScore> = kb
        .relation_index(r)
        .heads
        .iter()
        .filter(|&&p| p != h)
        .map(|&p| PrototypeScore {
            prototype: p,
            score: hinge(params.gamma, view.prototype_distance(h, p)),
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.prototype.cmp(&b.prototype))
    });
    out.truncate(k);
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplainedPrototype {
    pub entity: String,
    pub score: f64,
    /// Training facts through which the prototype contributes, as names in
    /// the original (non-inverted) orientation.
    pub facts: Vec<(String, String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Explanation {
    pub entity: String,
    pub relation: String,
    pub direction: Direction,
    pub prototypes: Vec<ExplainedPrototype>,
}

/// Prototype explanation for `(entity, r, ?)` (tail) or `(?, r, entity)`
/// (head, answered through the inverse relation).
pub fn explain(
    params: &ModelParams,
    kb: &KnowledgeBase,
    entity: EntityId,
    r: RelationId,
    direction: Direction,
    k: usize,
) -> Explanation {
    let vocab = &kb.vocab;
    let query_rel = match direction {
        Direction::Tail => r,
        Direction::Head => vocab.inverse(r),
    };
    let prototypes = top_prototypes(params, kb, entity, query_rel, k)
        .into_iter()
        .map(|ps| {
            let facts = kb
                .tails_of(ps.prototype, query_rel)
                .iter()
                .map(|&t| {
                    let fact = if vocab.is_inverse(query_rel) {
                        Triple::new(t, vocab.inverse(query_rel), ps.prototype)
                    } else {
                        Triple::new(ps.prototype, query_rel, t)
                    };
                    vocab.decode(&fact)
                })
                .collect();
            ExplainedPrototype {
                entity: vocab.entity_name(ps.prototype).to_owned(),
                score: ps.score,
                facts,
            }
        })
        .collect();
    Explanation {
        entity: vocab.entity_name(entity).to_owned(),
        relation: vocab.relation_name(vocab.base_relation(r)),
        direction,
        prototypes,
    }
}

impl Explanation {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let query = match self.direction {
            Direction::Tail => format!("({}, {}, ?)", self.entity, self.relation),
            Direction::Head => format!("(?, {}, {})", self.relation, self.entity),
        };
        let _ = writeln!(out, "query {query}");
        if self.prototypes.is_empty() {
            let _ = writeln!(out, "no prototypes");
            return out;
        }
        for (i, p) in self.prototypes.iter().enumerate() {
            let _ = writeln!(out, "{:>3}. {:<40} {:.4}", i + 1, p.entity, p.score);
            for (h, r, t) in &p.facts {
                let _ = writeln!(out, "       {h} {r} {t}");
            }
        }
        out
    }
}
