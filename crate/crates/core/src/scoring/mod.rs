//! Plausibility scoring functions and their analytic gradients for TransE,
//! TransR, and RESCAL.
//!
//! All three scores follow the same sign convention: higher means more
//! plausible. The translation models are therefore negated distances,
//!
//! - TransE:  f(h, r, t) = -||h + r - t||
//! - TransR:  f(h, r, t) = -||M_r h + r - M_r t||
//! - RESCAL:  f(h, r, t) = h^T M_r t
//!
//! which keeps the attack math uniform across models. Norms are L2.

mod checkpoint;

pub use checkpoint::CheckpointError;

use crate::graph::{EntityId, RelationId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    TransE,
    TransR,
    Rescal,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::TransR => "transr",
            ModelKind::Rescal => "rescal",
        }
    }

    fn has_rel_vecs(self) -> bool {
        !matches!(self, ModelKind::Rescal)
    }

    fn has_rel_mats(self) -> bool {
        !matches!(self, ModelKind::TransE)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transe" => Ok(ModelKind::TransE),
            "transr" => Ok(ModelKind::TransR),
            "rescal" => Ok(ModelKind::Rescal),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("translation residual is exactly zero; gradient undefined")]
    ZeroResidual,
}

/// Entity vectors plus per-relation parameters for one model.
///
/// Values live in f64; the checkpoint format quantizes to f32 on disk.
/// Read-only once training finishes: attack and evaluation code take an
/// immutable snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    model: ModelKind,
    dim: usize,
    num_entities: usize,
    num_relations: usize,
    entities: Vec<f64>,
    rel_vecs: Vec<f64>,
    rel_mats: Vec<f64>,
}

/// Gradient of the score with respect to the head and tail entity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGradient {
    pub d_head: Vec<f64>,
    pub d_tail: Vec<f64>,
}

impl EmbeddingStore {
    /// Zero-initialized store of the right shape; the trainer fills it in.
    pub fn zeros(model: ModelKind, num_entities: usize, num_relations: usize, dim: usize) -> Self {
        Self {
            model,
            dim,
            num_entities,
            num_relations,
            entities: vec![0.0; num_entities * dim],
            rel_vecs: if model.has_rel_vecs() {
                vec![0.0; num_relations * dim]
            } else {
                Vec::new()
            },
            rel_mats: if model.has_rel_mats() {
                vec![0.0; num_relations * dim * dim]
            } else {
                Vec::new()
            },
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        &self.entities[e * self.dim..(e + 1) * self.dim]
    }

    pub(crate) fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        &mut self.entities[e * self.dim..(e + 1) * self.dim]
    }

    /// Relation translation vector (TransE/TransR).
    pub fn rel_vec(&self, r: RelationId) -> &[f64] {
        debug_assert!(self.model.has_rel_vecs());
        &self.rel_vecs[r * self.dim..(r + 1) * self.dim]
    }

    pub(crate) fn rel_vec_mut(&mut self, r: RelationId) -> &mut [f64] {
        &mut self.rel_vecs[r * self.dim..(r + 1) * self.dim]
    }

    /// Relation matrix, row-major d*d (TransR projection / RESCAL core).
    pub fn rel_mat(&self, r: RelationId) -> &[f64] {
        debug_assert!(self.model.has_rel_mats());
        let sq = self.dim * self.dim;
        &self.rel_mats[r * sq..(r + 1) * sq]
    }

    pub(crate) fn rel_mat_mut(&mut self, r: RelationId) -> &mut [f64] {
        let sq = self.dim * self.dim;
        &mut self.rel_mats[r * sq..(r + 1) * sq]
    }

    pub(crate) fn params(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.entities, &self.rel_vecs, &self.rel_mats)
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>) {
        (&mut self.entities, &mut self.rel_vecs, &mut self.rel_mats)
    }

    pub fn all_finite(&self) -> bool {
        self.entities.iter().all(|v| v.is_finite())
            && self.rel_vecs.iter().all(|v| v.is_finite())
            && self.rel_mats.iter().all(|v| v.is_finite())
    }

    /// Plausibility of (h, r, t); higher is more plausible.
    pub fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        score_parts(
            self.model,
            self.dim,
            self.entity(h),
            self.rel_view(r),
            self.entity(t),
        )
    }

    /// Score with explicit head/tail vectors (e.g. a shifted embedding).
    pub fn score_with(
        &self,
        head: &[f64],
        r: RelationId,
        tail: &[f64],
    ) -> Result<f64, ScoringError> {
        self.check_dim(head)?;
        self.check_dim(tail)?;
        Ok(score_parts(
            self.model,
            self.dim,
            head,
            self.rel_view(r),
            tail,
        ))
    }

    /// Analytic gradient of the score w.r.t. the head and tail vectors.
    pub fn grad(
        &self,
        h: EntityId,
        r: RelationId,
        t: EntityId,
    ) -> Result<ScoreGradient, ScoringError> {
        grad_parts(
            self.model,
            self.dim,
            self.entity(h),
            self.rel_view(r),
            self.entity(t),
        )
    }

    /// Gradient with explicit head/tail vectors.
    pub fn grad_with(
        &self,
        head: &[f64],
        r: RelationId,
        tail: &[f64],
    ) -> Result<ScoreGradient, ScoringError> {
        self.check_dim(head)?;
        self.check_dim(tail)?;
        grad_parts(self.model, self.dim, head, self.rel_view(r), tail)
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), ScoringError> {
        if v.len() != self.dim {
            return Err(ScoringError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn rel_view(&self, r: RelationId) -> RelView<'_> {
        RelView {
            vec: if self.model.has_rel_vecs() {
                Some(self.rel_vec(r))
            } else {
                None
            },
            mat: if self.model.has_rel_mats() {
                Some(self.rel_mat(r))
            } else {
                None
            },
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct RelView<'a> {
    pub vec: Option<&'a [f64]>,
    pub mat: Option<&'a [f64]>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// y = M x with M row-major d*d.
pub(crate) fn mat_vec(m: &[f64], x: &[f64], y: &mut [f64]) {
    let d = x.len();
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = dot(&m[i * d..(i + 1) * d], x);
    }
}

/// y = M^T x.
pub(crate) fn mat_t_vec(m: &[f64], x: &[f64], y: &mut [f64]) {
    let d = x.len();
    y.fill(0.0);
    for (i, &xi) in x.iter().enumerate() {
        let row = &m[i * d..(i + 1) * d];
        for (yj, &mij) in y.iter_mut().zip(row) {
            *yj += mij * xi;
        }
    }
}

pub(crate) fn score_parts(
    model: ModelKind,
    dim: usize,
    head: &[f64],
    rel: RelView,
    tail: &[f64],
) -> f64 {
    match model {
        ModelKind::TransE => {
            let r = rel.vec.expect("TransE relation vector");
            let mut s = 0.0;
            for i in 0..dim {
                let u = head[i] + r[i] - tail[i];
                s += u * u;
            }
            -s.sqrt()
        }
        ModelKind::TransR => {
            let r = rel.vec.expect("TransR relation vector");
            let m = rel.mat.expect("TransR projection matrix");
            let mut s = 0.0;
            for i in 0..dim {
                let row = &m[i * dim..(i + 1) * dim];
                let u = dot(row, head) + r[i] - dot(row, tail);
                s += u * u;
            }
            -s.sqrt()
        }
        ModelKind::Rescal => {
            let m = rel.mat.expect("RESCAL relation matrix");
            let mut s = 0.0;
            for i in 0..dim {
                s += head[i] * dot(&m[i * dim..(i + 1) * dim], tail);
            }
            s
        }
    }
}

pub(crate) fn grad_parts(
    model: ModelKind,
    dim: usize,
    head: &[f64],
    rel: RelView,
    tail: &[f64],
) -> Result<ScoreGradient, ScoringError> {
    match model {
        ModelKind::TransE => {
            let r = rel.vec.expect("TransE relation vector");
            let mut u = vec![0.0; dim];
            for i in 0..dim {
                u[i] = head[i] + r[i] - tail[i];
            }
            let n = norm(&u);
            if n == 0.0 {
                return Err(ScoringError::ZeroResidual);
            }
            let d_head: Vec<f64> = u.iter().map(|&ui| -ui / n).collect();
            let d_tail: Vec<f64> = u.iter().map(|&ui| ui / n).collect();
            Ok(ScoreGradient { d_head, d_tail })
        }
        ModelKind::TransR => {
            let r = rel.vec.expect("TransR relation vector");
            let m = rel.mat.expect("TransR projection matrix");
            let mut u = vec![0.0; dim];
            for i in 0..dim {
                let row = &m[i * dim..(i + 1) * dim];
                u[i] = dot(row, head) + r[i] - dot(row, tail);
            }
            let n = norm(&u);
            if n == 0.0 {
                return Err(ScoringError::ZeroResidual);
            }
            let mut mtu = vec![0.0; dim];
            mat_t_vec(m, &u, &mut mtu);
            let d_head: Vec<f64> = mtu.iter().map(|&v| -v / n).collect();
            let d_tail: Vec<f64> = mtu.iter().map(|&v| v / n).collect();
            Ok(ScoreGradient { d_head, d_tail })
        }
        ModelKind::Rescal => {
            let m = rel.mat.expect("RESCAL relation matrix");
            let mut d_head = vec![0.0; dim];
            mat_vec(m, tail, &mut d_head);
            let mut d_tail = vec![0.0; dim];
            mat_t_vec(m, head, &mut d_tail);
            Ok(ScoreGradient { d_head, d_tail })
        }
    }
}

/// Full per-triple gradient, including relation parameters; used by the
/// trainer. `None` when the translation residual is exactly zero.
#[derive(Debug, Clone)]
pub(crate) struct FullGradient {
    pub d_head: Vec<f64>,
    pub d_tail: Vec<f64>,
    pub d_rel_vec: Option<Vec<f64>>,
    pub d_rel_mat: Option<Vec<f64>>,
}

pub(crate) fn full_grad_parts(
    model: ModelKind,
    dim: usize,
    head: &[f64],
    rel: RelView,
    tail: &[f64],
) -> Option<FullGradient> {
    match model {
        ModelKind::TransE => {
            let g = grad_parts(model, dim, head, rel, tail).ok()?;
            let d_rel_vec = g.d_head.clone();
            Some(FullGradient {
                d_head: g.d_head,
                d_tail: g.d_tail,
                d_rel_vec: Some(d_rel_vec),
                d_rel_mat: None,
            })
        }
        ModelKind::TransR => {
            let r = rel.vec.expect("TransR relation vector");
            let m = rel.mat.expect("TransR projection matrix");
            let mut u = vec![0.0; dim];
            for i in 0..dim {
                let row = &m[i * dim..(i + 1) * dim];
                u[i] = dot(row, head) + r[i] - dot(row, tail);
            }
            let n = norm(&u);
            if n == 0.0 {
                return None;
            }
            let mut mtu = vec![0.0; dim];
            mat_t_vec(m, &u, &mut mtu);
            let d_head: Vec<f64> = mtu.iter().map(|&v| -v / n).collect();
            let d_tail: Vec<f64> = mtu.iter().map(|&v| v / n).collect();
            let d_rel_vec: Vec<f64> = u.iter().map(|&v| -v / n).collect();
            // d f / d M = -(u / ||u||) (h - t)^T
            let mut d_rel_mat = vec![0.0; dim * dim];
            for i in 0..dim {
                let coef = -u[i] / n;
                let row = &mut d_rel_mat[i * dim..(i + 1) * dim];
                for j in 0..dim {
                    row[j] = coef * (head[j] - tail[j]);
                }
            }
            Some(FullGradient {
                d_head,
                d_tail,
                d_rel_vec: Some(d_rel_vec),
                d_rel_mat: Some(d_rel_mat),
            })
        }
        ModelKind::Rescal => {
            let g = grad_parts(model, dim, head, rel, tail).ok()?;
            // d f / d M = h t^T
            let mut d_rel_mat = vec![0.0; dim * dim];
            for i in 0..dim {
                let row = &mut d_rel_mat[i * dim..(i + 1) * dim];
                for j in 0..dim {
                    row[j] = head[i] * tail[j];
                }
            }
            Some(FullGradient {
                d_head: g.d_head,
                d_tail: g.d_tail,
                d_rel_vec: None,
                d_rel_mat: Some(d_rel_mat),
            })
        }
    }
}
