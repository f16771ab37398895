//! Closed-form losses and gradients for the three training objectives.
//!
//! A batch is processed relation by relation. For each relation the rows of
//! every touched entity are gathered and projected once (`Q = E_S W_rᵀ`),
//! all distances are taken between rows of `Q`, and the gradient with respect
//! to `Q` is pushed back through the projection at the end:
//! `∂W_r = ∂Qᵀ E_S`, `∂E_S = ∂Q W_r` (complex rows are read as two real rows).

use std::collections::BTreeMap;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use rayon::prelude::*;

use crate::geometry::{distance, distance_grad, project_rows, rotate, ModelParams, Norm};
use crate::kb::{EntityId, KnowledgeBase, RelationId, Triple};

use super::sampling::Batch;

/// Loss selection for a gradient pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossKind {
    /// `−max(γ − T⁺, 0) + (1/n) Σ max(γ − T⁻, 0)` per positive.
    Margin,
    /// Softmax cross-entropy over `{gold} ∪ negatives` of IBLE scores.
    IbleCe,
    /// Softmax cross-entropy of CIBLE scores.
    CibleCe { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Drop the query entity from the prototype sets while training, so a
    /// positive `(h, r, t)` is not explained by its own fact.
    pub exclude_self: bool,
    /// Factor applied to the bounded scores before the softmax.
    pub logit_scale: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        LossSpec {
            kind,
            exclude_self: false,
            logit_scale: 1.0,
        }
    }
}

/// Dense gradient with the same layout as [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub entity: Array2<f64>,
    pub relation: Array2<f64>,
    pub projection: Option<Array3<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            entity: Array2::zeros(params.entity.raw_dim()),
            relation: Array2::zeros(params.relation.raw_dim()),
            projection: params.projection.as_ref().map(|w| Array3::zeros(w.raw_dim())),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.entity
            .iter()
            .chain(self.relation.iter())
            .chain(self.projection.iter().flat_map(|w| w.iter()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Mean per-positive losses of one pass. Component values are reported
/// whenever the pass computes them, independently of the objective.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    pub margin: Option<f64>,
    pub ible_ce: Option<f64>,
    pub cible_ce: Option<f64>,
}

/// Order-sensitive fingerprint of every kink-relevant branch taken in a
/// forward pass: hinge activity and L1 coordinate signs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KinkTrace(u64);

impl KinkTrace {
    fn push(&mut self, v: u64) {
        self.0 = (self.0 ^ v).wrapping_mul(0x0100_0000_01b3).rotate_left(5);
    }
}

/// Loss and gradients of `spec` on `batch`.
pub fn gradients(
    params: &ModelParams,
    kb: &KnowledgeBase,
    batch: &Batch,
    spec: &LossSpec,
) -> (BatchLoss, Gradients) {
    let (loss, grads, _) = pass(params, kb, batch, spec, true, false);
    (loss, grads.expect("requested"))
}

/// Loss only.
pub fn batch_loss(
    params: &ModelParams,
    kb: &KnowledgeBase,
    batch: &Batch,
    spec: &LossSpec,
) -> BatchLoss {
    pass(params, kb, batch, spec, false, false).0
}

/// Loss together with its kink fingerprint.
pub(crate) fn traced_loss(
    params: &ModelParams,
    kb: &KnowledgeBase,
    batch: &Batch,
    spec: &LossSpec,
) -> (BatchLoss, KinkTrace) {
    let (loss, _, trace) = pass(params, kb, batch, spec, false, true);
    (loss, trace)
}

#[derive(Default)]
struct Sums {
    total: f64,
    margin: f64,
    ible_ce: f64,
    cible_ce: f64,
}

struct GroupOut {
    touched: Vec<EntityId>,
    d_rows: Option<Array2<f64>>,
    d_rel: Vec<f64>,
    d_proj: Option<Array2<f64>>,
    sums: Sums,
    trace: KinkTrace,
}

fn pass(
    params: &ModelParams,
    kb: &KnowledgeBase,
    batch: &Batch,
    spec: &LossSpec,
    want_grad: bool,
    want_trace: bool,
) -> (BatchLoss, Option<Gradients>, KinkTrace) {
    let mut groups: BTreeMap<RelationId, Vec<usize>> = BTreeMap::new();
    for (i, t) in batch.positives.iter().enumerate() {
        groups.entry(t.relation).or_default().push(i);
    }
    let n_pos = batch.positives.len();
    let scale = if n_pos == 0 { 0.0 } else { 1.0 / n_pos as f64 };

    let groups: Vec<(RelationId, Vec<usize>)> = groups.into_iter().collect();
    let outs: Vec<GroupOut> = groups
        .par_iter()
        .map(|(r, idx)| group_pass(params, kb, batch, *r, idx, spec, scale, want_grad, want_trace))
        .collect();

    let mut grads = want_grad.then(|| Gradients::zeros_like(params));
    let mut sums = Sums::default();
    let mut trace = KinkTrace::default();
    for ((r, _), out) in groups.iter().zip(outs) {
        sums.total += out.sums.total;
        sums.margin += out.sums.margin;
        sums.ible_ce += out.sums.ible_ce;
        sums.cible_ce += out.sums.cible_ce;
        trace.push(out.trace.0);
        if let Some(g) = grads.as_mut() {
            let d_rows = out.d_rows.expect("gradient requested");
            for (row, &e) in d_rows.outer_iter().zip(&out.touched) {
                let mut dst = g.entity.row_mut(e);
                dst += &row;
            }
            let mut rel = g.relation.row_mut(*r);
            for (dst, v) in rel.iter_mut().zip(&out.d_rel) {
                *dst += v;
            }
            if let (Some(gw), Some(dw)) = (g.projection.as_mut(), out.d_proj) {
                let mut dst = gw.index_axis_mut(Axis(0), *r);
                dst += &dw;
            }
        }
    }

    let loss = BatchLoss {
        total: sums.total * scale,
        margin: Some(sums.margin * scale),
        ible_ce: (!matches!(spec.kind, LossKind::Margin)).then_some(sums.ible_ce * scale),
        cible_ce: matches!(spec.kind, LossKind::CibleCe { .. }).then_some(sums.cible_ce * scale),
    };
    (loss, grads, trace)
}

/// Per-relation working state.
struct Ctx<'a> {
    complex: bool,
    norm: Norm,
    gamma: f64,
    q: Array2<f64>,
    translation: Option<Vec<f64>>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    dq: Option<Array2<f64>>,
    d_rel: Vec<f64>,
    trace: Option<&'a mut KinkTrace>,
}

impl Ctx<'_> {
    fn row(&self, i: usize) -> &[f64] {
        self.q.row(i).to_slice().expect("standard layout")
    }

    fn translated(&self, i: usize) -> Vec<f64> {
        let q = self.row(i);
        match &self.translation {
            Some(t) => q.iter().zip(t).map(|(a, b)| a + b).collect(),
            None => {
                let mut out = vec![0.0; q.len()];
                rotate(q, &self.cos, &self.sin, false, &mut out);
                out
            }
        }
    }

    fn diff(&self, a: &[f64], j: usize) -> Vec<f64> {
        a.iter().zip(self.row(j)).map(|(x, y)| x - y).collect()
    }

    fn dist(&mut self, diff: &[f64]) -> f64 {
        if let Some(tr) = self.trace.as_deref_mut() {
            if !self.complex && self.norm == Norm::L1 {
                for x in diff {
                    tr.push(if *x > 0.0 { 1 } else if *x < 0.0 { 2 } else { 3 });
                }
            }
        }
        distance(self.complex, self.norm, diff)
    }

    fn hinge(&mut self, d: f64) -> (f64, bool) {
        let m = self.gamma - d;
        let active = m > 0.0;
        if let Some(tr) = self.trace.as_deref_mut() {
            tr.push(u64::from(active) + 7);
        }
        (if active { m } else { 0.0 }, active)
    }

    /// Adds `w · ∂T(i → j)` where `u` is the translated row `i`.
    fn backprop_trans(&mut self, i: usize, u: &[f64], j: usize, w: f64) {
        if w == 0.0 {
            return;
        }
        let diff = self.diff(u, j);
        let mut g = vec![0.0; diff.len()];
        distance_grad(self.complex, self.norm, &diff, w, &mut g);
        let Some(dq) = self.dq.as_mut() else { return };
        {
            let mut tail = dq.row_mut(j);
            for (d, x) in tail.iter_mut().zip(&g) {
                *d -= x;
            }
        }
        if self.complex {
            let k = self.cos.len();
            let mut back = vec![0.0; g.len()];
            rotate(&g, &self.cos, &self.sin, true, &mut back);
            let mut head = dq.row_mut(i);
            for (d, x) in head.iter_mut().zip(&back) {
                *d += x;
            }
            for m in 0..k {
                self.d_rel[m] += -g[m] * u[k + m] + g[k + m] * u[m];
            }
        } else {
            let mut head = dq.row_mut(i);
            for (d, x) in head.iter_mut().zip(&g) {
                *d += x;
            }
            for (d, x) in self.d_rel.iter_mut().zip(&g) {
                *d += x;
            }
        }
    }

    /// Adds `w · ∂‖q_i − q_p‖`.
    fn backprop_proto(&mut self, i: usize, p: usize, w: f64) {
        if w == 0.0 || i == p {
            return;
        }
        let diff = self.diff(self.row(i), p);
        let mut g = vec![0.0; diff.len()];
        distance_grad(self.complex, self.norm, &diff, w, &mut g);
        let Some(dq) = self.dq.as_mut() else { return };
        {
            let mut a = dq.row_mut(i);
            for (d, x) in a.iter_mut().zip(&g) {
                *d += x;
            }
        }
        let mut b = dq.row_mut(p);
        for (d, x) in b.iter_mut().zip(&g) {
            *d -= x;
        }
    }
}

fn prototypes_of<'k>(kb: &'k KnowledgeBase, r: RelationId, t: EntityId) -> &'k [EntityId] {
    let by_tail = &kb.relation_index(r).by_tail;
    match by_tail.binary_search_by_key(&t, |(tail, _)| *tail) {
        Ok(i) => &by_tail[i].1,
        Err(_) => &[],
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[allow(clippy::too_many_arguments)]
fn group_pass(
    params: &ModelParams,
    kb: &KnowledgeBase,
    batch: &Batch,
    r: RelationId,
    idx: &[usize],
    spec: &LossSpec,
    scale: f64,
    want_grad: bool,
    want_trace: bool,
) -> GroupOut {
    let uses_prototypes = !matches!(spec.kind, LossKind::Margin);

    // touched entities, ascending
    let n = params.n_entity();
    let mut mark = vec![false; n];
    for &i in idx {
        let t = batch.positives[i];
        mark[t.head] = true;
        mark[t.tail] = true;
        for &e in &batch.negatives[i] {
            mark[e] = true;
            if uses_prototypes {
                for &p in prototypes_of(kb, r, e) {
                    mark[p] = true;
                }
            }
        }
        if uses_prototypes {
            for &p in prototypes_of(kb, r, t.tail) {
                mark[p] = true;
            }
        }
    }
    let touched: Vec<EntityId> = (0..n).filter(|&e| mark[e]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &e) in touched.iter().enumerate() {
        local[e] = i;
    }

    let rows = params.entity.select(Axis(0), &touched);
    let w = params.projection_matrix(r);
    let q = match w {
        Some(w) => project_rows(w, rows.view(), params.is_complex()),
        None => rows.clone(),
    };
    let rel = params.relation.row(r);
    let (translation, cos, sin) = if params.is_complex() {
        (
            None,
            rel.iter().map(|t| t.cos()).collect(),
            rel.iter().map(|t| t.sin()).collect(),
        )
    } else {
        (Some(rel.to_vec()), Vec::new(), Vec::new())
    };

    let mut trace = KinkTrace::default();
    let mut ctx = Ctx {
        complex: params.is_complex(),
        norm: params.norm,
        gamma: params.gamma,
        dq: want_grad.then(|| Array2::zeros(q.raw_dim())),
        q,
        translation,
        cos,
        sin,
        d_rel: vec![0.0; rel.len()],
        trace: want_trace.then_some(&mut trace),
    };
    let gamma = params.gamma;
    let mut sums = Sums::default();

    // prototype plausibility cache, keyed by local index
    let mut f_cache: Vec<Option<(f64, bool)>> = vec![None; touched.len()];
    let mut df: Vec<f64> = vec![0.0; touched.len()];
    let mut used: Vec<usize> = Vec::new();

    for &bi in idx {
        let Triple { head, tail, .. } = batch.positives[bi];
        let negs = &batch.negatives[bi];
        let hi = local[head];
        let u = ctx.translated(hi);
        let cands: Vec<usize> = std::iter::once(tail)
            .chain(negs.iter().copied())
            .map(|e| local[e])
            .collect();

        // translational distances and hinges for every candidate
        let mut hinged = Vec::with_capacity(cands.len());
        for &c in &cands {
            let d = ctx.diff(&u, c);
            let dist = ctx.dist(&d);
            hinged.push(ctx.hinge(dist));
        }
        let n_neg = negs.len();
        let margin = if n_neg == 0 {
            -hinged[0].0
        } else {
            -hinged[0].0 + hinged[1..].iter().map(|h| h.0).sum::<f64>() / n_neg as f64
        };
        sums.margin += margin;

        if let LossKind::Margin = spec.kind {
            sums.total += margin;
            if want_grad {
                if hinged[0].1 {
                    ctx.backprop_trans(hi, &u, cands[0], scale);
                }
                for (j, h) in hinged.iter().enumerate().skip(1) {
                    if h.1 {
                        ctx.backprop_trans(hi, &u, cands[j], -scale / n_neg as f64);
                    }
                }
            }
            continue;
        }

        // IBLE scores of the candidates
        let mut ible = Vec::with_capacity(cands.len());
        let mut proto_lists: Vec<Vec<usize>> = Vec::with_capacity(cands.len());
        for &c in std::iter::once(&tail).chain(negs.iter()) {
            let protos: Vec<usize> = prototypes_of(kb, r, c)
                .iter()
                .filter(|&&p| !(spec.exclude_self && p == head))
                .map(|&p| local[p])
                .collect();
            let mut sum = 0.0;
            for &p in &protos {
                let f = match f_cache[p] {
                    Some((f, _)) => f,
                    None => {
                        let d = ctx.diff(ctx.row(hi), p);
                        let dist = ctx.dist(&d);
                        let h = ctx.hinge(dist);
                        f_cache[p] = Some(h);
                        used.push(p);
                        h.0
                    }
                };
                sum += f;
            }
            ible.push(if protos.is_empty() {
                0.0
            } else {
                sum / (gamma * protos.len() as f64)
            });
            proto_lists.push(protos);
        }
        let tau = spec.logit_scale;
        let logits: Vec<f64> = ible.iter().map(|x| tau * x).collect();
        let ible_ce = log_sum_exp(&logits) - logits[0];
        sums.ible_ce += ible_ce;

        let (scores, ible_weight) = match spec.kind {
            LossKind::CibleCe { alpha } => {
                let s: Vec<f64> = ible
                    .iter()
                    .zip(&hinged)
                    .map(|(i, h)| tau * ((1.0 - alpha) * i + alpha * h.0 / gamma))
                    .collect();
                (s, 1.0 - alpha)
            }
            _ => (logits, 1.0),
        };
        let ce = log_sum_exp(&scores) - scores[0];
        if let LossKind::CibleCe { .. } = spec.kind {
            sums.cible_ce += ce;
        }
        sums.total += ce;

        if want_grad {
            let lse = log_sum_exp(&scores);
            let ds: Vec<f64> = scores
                .iter()
                .enumerate()
                .map(|(j, s)| tau * scale * ((s - lse).exp() - if j == 0 { 1.0 } else { 0.0 }))
                .collect();
            for (j, protos) in proto_lists.iter().enumerate() {
                if protos.is_empty() {
                    continue;
                }
                let a = ds[j] * ible_weight / (gamma * protos.len() as f64);
                for &p in protos {
                    df[p] += a;
                }
            }
            for &p in &used {
                let (_, active) = f_cache[p].expect("computed");
                if active {
                    // f = γ − D ⇒ ∂L/∂D = −∂L/∂f
                    ctx.backprop_proto(hi, p, -df[p]);
                }
            }
            if let LossKind::CibleCe { alpha } = spec.kind {
                for (j, h) in hinged.iter().enumerate() {
                    if h.1 {
                        ctx.backprop_trans(hi, &u, cands[j], -ds[j] * alpha / gamma);
                    }
                }
            }
        }
        for p in used.drain(..) {
            f_cache[p] = None;
            df[p] = 0.0;
        }
    }

    let d_rel = std::mem::take(&mut ctx.d_rel);
    let complex = ctx.complex;
    let (d_rows, d_proj) = match ctx.dq.take() {
        None => (None, None),
        Some(dq) => match w {
            None => (Some(dq), None),
            Some(w) => {
                let (dw, de) = backprop_projection(w, rows.view(), dq, complex);
                (Some(de), Some(dw))
            }
        },
    };
    GroupOut {
        touched,
        d_rows,
        d_rel,
        d_proj,
        sums,
        trace,
    }
}

/// Given `Q = rows · Wᵀ` (row-wise, per half for complex rows) and `∂Q`,
/// returns `(∂W, ∂rows)`.
fn backprop_projection(
    w: ArrayView2<'_, f64>,
    rows: ArrayView2<'_, f64>,
    dq: Array2<f64>,
    complex: bool,
) -> (Array2<f64>, Array2<f64>) {
    let (m, d) = rows.dim();
    if complex {
        let k = d / 2;
        let e2 = rows
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((2 * m, k))
            .expect("contiguous");
        let dq2 = dq.into_shape_with_order((2 * m, k)).expect("contiguous");
        let dw = dq2.t().dot(&e2);
        let de = dq2.dot(&w).into_shape_with_order((m, d)).expect("contiguous");
        (dw, de)
    } else {
        (dq.t().dot(&rows), dq.dot(&w))
    }
}
