//! Translational scoring functions and prototype distances.
//!
//! Complex vectors are stored as split halves: a row of length `d` holds the
//! `d/2` real parts followed by the `d/2` imaginary parts. RotatE-family
//! relations are phase vectors of length `d/2`; a relation's projection `W_r`
//! is `d × d` for TransR and `d/2 × d/2` for R-RotatE, where the same real
//! matrix is applied to the real and the imaginary half.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    TransR,
    RotatE,
    RRotatE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TransE,
        ModelKind::TransR,
        ModelKind::RotatE,
        ModelKind::RRotatE,
    ];

    pub fn is_complex(self) -> bool {
        matches!(self, ModelKind::RotatE | ModelKind::RRotatE)
    }

    pub fn has_projection(self) -> bool {
        matches!(self, ModelKind::TransR | ModelKind::RRotatE)
    }

    /// Whether prototype distances depend on the query relation.
    pub fn is_relation_aware(self) -> bool {
        self.has_projection()
    }

    pub fn default_norm(self) -> Norm {
        match self {
            ModelKind::TransR => Norm::L2,
            _ => Norm::L1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::TransR => "transr",
            ModelKind::RotatE => "rotate",
            ModelKind::RRotatE => "r-rotate",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "transe" => Ok(ModelKind::TransE),
            "transr" => Ok(ModelKind::TransR),
            "rotate" => Ok(ModelKind::RotatE),
            "r-rotate" | "rrotate" => Ok(ModelKind::RRotatE),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn order(self) -> u8 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }

    pub fn from_order(p: u8) -> Result<Self> {
        match p {
            1 => Ok(Norm::L1),
            2 => Ok(Norm::L2),
            _ => Err(Error::Config(format!("norm order must be 1 or 2, got {p}"))),
        }
    }
}

/// p-norm of a difference vector. For complex layouts each coordinate's
/// modulus is taken before the norm.
pub fn distance(complex: bool, norm: Norm, diff: &[f64]) -> f64 {
    match (complex, norm) {
        (_, Norm::L2) => diff.iter().map(|x| x * x).sum::<f64>().sqrt(),
        (false, Norm::L1) => diff.iter().map(|x| x.abs()).sum(),
        (true, Norm::L1) => {
            let (re, im) = diff.split_at(diff.len() / 2);
            re.iter().zip(im).map(|(a, b)| a.hypot(*b)).sum()
        }
    }
}

/// Adds `scale · ∂distance/∂diff` into `out`. Kinks (zero coordinates for
/// L1, zero vector for L2) get subgradient 0.
pub fn distance_grad(complex: bool, norm: Norm, diff: &[f64], scale: f64, out: &mut [f64]) {
    debug_assert_eq!(diff.len(), out.len());
    match (complex, norm) {
        (_, Norm::L2) => {
            let n = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                let c = scale / n;
                for (o, x) in out.iter_mut().zip(diff) {
                    *o += c * x;
                }
            }
        }
        (false, Norm::L1) => {
            for (o, x) in out.iter_mut().zip(diff) {
                if *x > 0.0 {
                    *o += scale;
                } else if *x < 0.0 {
                    *o -= scale;
                }
            }
        }
        (true, Norm::L1) => {
            let k = diff.len() / 2;
            for j in 0..k {
                let (a, b) = (diff[j], diff[k + j]);
                let m = a.hypot(b);
                if m > 0.0 {
                    out[j] += scale * a / m;
                    out[k + j] += scale * b / m;
                }
            }
        }
    }
}

/// `out = v ∘ e^{iθ}` (or the conjugate rotation when `conj`).
pub fn rotate(v: &[f64], cos: &[f64], sin: &[f64], conj: bool, out: &mut [f64]) {
    let k = cos.len();
    debug_assert_eq!(v.len(), 2 * k);
    let sgn = if conj { -1.0 } else { 1.0 };
    for j in 0..k {
        let (re, im) = (v[j], v[k + j]);
        let (c, s) = (cos[j], sgn * sin[j]);
        out[j] = re * c - im * s;
        out[k + j] = re * s + im * c;
    }
}

/// Wraps a phase into (−π, π].
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub norm: Norm,
    pub gamma: f64,
    /// `n_entity × d`.
    pub entity: Array2<f64>,
    /// `n_relation × d` translations, or `n_relation × d/2` phases.
    pub relation: Array2<f64>,
    /// `n_relation × k × k`, present for TransR and R-RotatE.
    pub projection: Option<Array3<f64>>,
}

/// Shape description used to construct parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelShape {
    pub kind: ModelKind,
    pub n_entity: usize,
    pub n_relation: usize,
    pub dim: usize,
    pub norm: Norm,
    pub gamma: f64,
}

impl ModelShape {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.kind.is_complex() && self.dim % 2 != 0 {
            return Err(Error::Config(format!(
                "{} needs an even dimension, got {}",
                self.kind, self.dim
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("margin must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn relation_width(&self) -> usize {
        if self.kind.is_complex() {
            self.dim / 2
        } else {
            self.dim
        }
    }

    pub fn projection_dim(&self) -> usize {
        self.relation_width()
    }
}

impl ModelParams {
    pub fn zeros(shape: ModelShape) -> Result<Self> {
        shape.validate()?;
        let k = shape.projection_dim();
        Ok(ModelParams {
            kind: shape.kind,
            norm: shape.norm,
            gamma: shape.gamma,
            entity: Array2::zeros((shape.n_entity, shape.dim)),
            relation: Array2::zeros((shape.n_relation, shape.relation_width())),
            projection: shape
                .kind
                .has_projection()
                .then(|| Array3::zeros((shape.n_relation, k, k))),
        })
    }

    /// Random initialization: entity and translation coordinates uniform in
    /// `[-range, range]`, phases uniform in (−π, π], projections identity
    /// plus uniform noise in ±0.01.
    pub fn init<R: Rng + ?Sized>(shape: ModelShape, range: f64, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        p.entity.mapv_inplace(|_| rng.random_range(-range..=range));
        if shape.kind.is_complex() {
            p.relation.mapv_inplace(|_| wrap_phase(rng.random_range(-PI..PI)));
        } else {
            p.relation.mapv_inplace(|_| rng.random_range(-range..=range));
        }
        if let Some(w) = p.projection.as_mut() {
            let k = w.shape()[1];
            w.mapv_inplace(|_| rng.random_range(-0.01..=0.01));
            for mut m in w.outer_iter_mut() {
                for i in 0..k {
                    m[[i, i]] += 1.0;
                }
            }
        }
        Ok(p)
    }

    /// Default coordinate range: `γ / 2k` with `k` the number of norm
    /// coordinates, which puts initial L1 distances below the margin.
    pub fn default_init_range(shape: &ModelShape) -> f64 {
        shape.gamma / (2.0 * shape.relation_width() as f64)
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            kind: self.kind,
            n_entity: self.n_entity(),
            n_relation: self.n_relation(),
            dim: self.dim(),
            norm: self.norm,
            gamma: self.gamma,
        }
    }

    pub fn n_entity(&self) -> usize {
        self.entity.nrows()
    }

    pub fn n_relation(&self) -> usize {
        self.relation.nrows()
    }

    pub fn dim(&self) -> usize {
        self.entity.ncols()
    }

    pub fn is_complex(&self) -> bool {
        self.kind.is_complex()
    }

    /// Checks internal dimension consistency.
    pub fn validate(&self) -> Result<()> {
        let shape = self.shape();
        shape.validate()?;
        if self.relation.ncols() != shape.relation_width() {
            return Err(Error::Config(format!(
                "relation block has width {}, expected {}",
                self.relation.ncols(),
                shape.relation_width()
            )));
        }
        match (&self.projection, self.kind.has_projection()) {
            (Some(w), true) => {
                let k = shape.projection_dim();
                if w.shape() != [self.n_relation(), k, k] {
                    return Err(Error::Config(format!(
                        "projection block has shape {:?}, expected [{}, {k}, {k}]",
                        w.shape(),
                        self.n_relation()
                    )));
                }
            }
            (None, false) => {}
            (Some(_), false) => {
                return Err(Error::Config(format!("{} has no projection", self.kind)))
            }
            (None, true) => return Err(Error::Config(format!("{} needs a projection", self.kind))),
        }
        if self.param_iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.entity.len() + self.relation.len() + self.projection.as_ref().map_or(0, |w| w.len())
    }

    pub(crate) fn param_iter(&self) -> impl Iterator<Item = &f64> {
        self.entity
            .iter()
            .chain(self.relation.iter())
            .chain(self.projection.iter().flat_map(|w| w.iter()))
    }

    pub fn distance(&self, diff: &[f64]) -> f64 {
        distance(self.is_complex(), self.norm, diff)
    }

    pub fn projection_matrix(&self, r: RelationId) -> Option<ArrayView2<'_, f64>> {
        self.projection.as_ref().map(|w| w.index_axis(Axis(0), r))
    }

    /// `W_r e` for one entity (the raw embedding for unprojected models).
    pub fn project(&self, e: EntityId, r: RelationId) -> Vec<f64> {
        let row = self.entity.row(e);
        match self.projection_matrix(r) {
            None => row.to_vec(),
            Some(w) => project_row(w, row, self.is_complex()),
        }
    }

    /// Projected embeddings of all entities for relation `r` (`n × d`).
    pub fn project_all(&self, r: RelationId) -> Cow<'_, Array2<f64>> {
        match self.projection_matrix(r) {
            None => Cow::Borrowed(&self.entity),
            Some(w) => Cow::Owned(project_rows(w, self.entity.view(), self.is_complex())),
        }
    }

    fn apply_relation(&self, projected: &[f64], r: RelationId, inverse: bool) -> Vec<f64> {
        let rel = self.relation.row(r);
        if self.is_complex() {
            let cos: Vec<f64> = rel.iter().map(|t| t.cos()).collect();
            let sin: Vec<f64> = rel.iter().map(|t| t.sin()).collect();
            let mut out = vec![0.0; projected.len()];
            rotate(projected, &cos, &sin, inverse, &mut out);
            out
        } else {
            let sgn = if inverse { -1.0 } else { 1.0 };
            projected.iter().zip(rel).map(|(x, t)| x + sgn * t).collect()
        }
    }

    /// `trans_r(emb(h))`.
    pub fn translate(&self, h: EntityId, r: RelationId) -> Vec<f64> {
        self.apply_relation(&self.project(h, r), r, false)
    }

    /// `trans_r⁻¹(emb(t))`: subtraction or conjugate rotation after the
    /// projection. `W_r` itself is never inverted.
    pub fn inv_translate(&self, t: EntityId, r: RelationId) -> Vec<f64> {
        self.apply_relation(&self.project(t, r), r, true)
    }

    /// Translational distance `T(h, r, t)`.
    pub fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        let u = self.translate(h, r);
        let v = self.project(t, r);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        self.distance(&diff)
    }

    /// Prototype distance in reduced form: `‖e_a − e_b‖` for TransE/RotatE,
    /// `‖W_r e_a − W_r e_b‖` for TransR/R-RotatE.
    pub fn prototype_distance(&self, a: EntityId, b: EntityId, r: RelationId) -> f64 {
        let diff: Vec<f64> = self
            .entity
            .row(a)
            .iter()
            .zip(self.entity.row(b))
            .map(|(x, y)| x - y)
            .collect();
        match self.projection_matrix(r) {
            None => self.distance(&diff),
            Some(w) => self.distance(&project_row(w, ArrayView1::from(&diff), self.is_complex())),
        }
    }

    /// Read-only per-relation scoring helper with precomputed projections.
    pub fn relation_view(&self, r: RelationId) -> RelationView<'_> {
        let rel = self.relation.row(r);
        let (cos, sin) = if self.is_complex() {
            (
                rel.iter().map(|t| t.cos()).collect(),
                rel.iter().map(|t| t.sin()).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        RelationView {
            params: self,
            r,
            projected: self.project_all(r),
            cos,
            sin,
        }
    }
}

/// `W x` for one row; complex rows apply `W` to both halves.
pub(crate) fn project_row(w: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>, complex: bool) -> Vec<f64> {
    if complex {
        let k = w.nrows();
        let mut out = w.dot(&x.slice(s![..k])).to_vec();
        out.extend(w.dot(&x.slice(s![k..])).iter());
        out
    } else {
        w.dot(&x).to_vec()
    }
}

/// Projects every row of `rows` (`m × d`) with `W` (`k × k`).
pub(crate) fn project_rows(
    w: ArrayView2<'_, f64>,
    rows: ArrayView2<'_, f64>,
    complex: bool,
) -> Array2<f64> {
    let (m, d) = rows.dim();
    if complex {
        let k = d / 2;
        // An m × 2k row-major matrix read as 2m × k has one half per row.
        let halves = rows
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((2 * m, k))
            .expect("contiguous");
        halves
            .dot(&w.t())
            .into_shape_with_order((m, d))
            .expect("contiguous")
    } else {
        rows.dot(&w.t())
    }
}

/// Dense scoring for a fixed relation.
pub struct RelationView<'a> {
    params: &'a ModelParams,
    r: RelationId,
    projected: Cow<'a, Array2<f64>>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl<'a> RelationView<'a> {
    pub fn relation(&self) -> RelationId {
        self.r
    }

    pub fn params(&self) -> &'a ModelParams {
        self.params
    }

    pub fn projected(&self, e: EntityId) -> ArrayView1<'_, f64> {
        self.projected.row(e)
    }

    pub fn translated(&self, h: EntityId) -> Vec<f64> {
        let q = self.projected.row(h);
        let q = q.as_slice().expect("standard layout");
        if self.params.is_complex() {
            let mut out = vec![0.0; q.len()];
            rotate(q, &self.cos, &self.sin, false, &mut out);
            out
        } else {
            q.iter()
                .zip(self.params.relation.row(self.r))
                .map(|(a, b)| a + b)
                .collect()
        }
    }

    /// `‖u − W_r e_t‖` for a translated head `u`.
    pub fn tail_distance(&self, translated_head: &[f64], t: EntityId) -> f64 {
        self.diff_distance(translated_head, t)
    }

    /// `‖W_r e_a − W_r e_b‖`.
    pub fn prototype_distance(&self, a: EntityId, b: EntityId) -> f64 {
        let qa = self.projected.row(a);
        self.diff_distance(qa.as_slice().expect("standard layout"), b)
    }

    fn diff_distance(&self, x: &[f64], e: EntityId) -> f64 {
        let y = self.projected.row(e);
        let y = y.as_slice().expect("standard layout");
        let complex = self.params.is_complex();
        match (complex, self.params.norm) {
            (_, Norm::L2) => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            (false, Norm::L1) => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            (true, Norm::L1) => {
                let k = x.len() / 2;
                (0..k)
                    .map(|j| (x[j] - y[j]).hypot(x[k + j] - y[k + j]))
                    .sum()
            }
        }
    }
}
