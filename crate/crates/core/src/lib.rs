//! Instance-based learning for knowledge base completion.
//!
//! The crate bundles:
//!
//! - [`kb`]: TSV ingestion, vocabularies, inverse augmentation and indexes
//! - [`geometry`]: TransE, TransR, RotatE and R-RotatE scoring plus
//!   prototype distances
//! - [`ible`]: prototype plausibility, IBLE aggregation and the CIBLE mix
//! - [`train`]: negative sampling, losses, closed-form gradients, Adam/SGD
//! - [`eval`]: filtered ranking metrics
//! - [`rules`]: Horn-rule enumeration, IBL classification, support and
//!   precision, a path-counting rule reasoner
//! - [`synth`]: synthetic knowledge bases for property tests
//! - [`cli`]: the `cible` command-line front end

pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod ible;
pub mod kb;
pub mod rules;
pub mod synth;
pub mod train;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use eval::{evaluate, rank_of_gold, LinkScorer, ModelScorer, RankingReport, ScorerKind};
pub use geometry::{ModelKind, ModelParams, ModelShape, Norm};
pub use kb::{EntityId, KnowledgeBase, RelationId, Split, Triple, Vocabulary};
pub use train::{train, Objective, TrainConfig, TrainOutcome};
