//! MAP-Elites with tournament-dominance (T-DominO) multi-objective ranking.
//!
//! The crate provides the T-DominO archive and its scalar baselines, a CMA-ES
//! improvement emitter, an NSGA-II reference optimizer, benchmark problems,
//! reporting utilities, and an experiment harness that ties them together.

pub mod analysis;
pub mod archive;
pub mod baseline;
pub mod config;
pub mod emitters;
pub mod error;
pub mod grid;
pub mod harness;
pub mod nsga2;
pub mod problems;
pub mod tdomino;
pub mod types;

pub use archive::{EliteArchive, InsertArchive, InsertOutcome, OutcomeKind};
pub use error::{Error, Result};
pub use grid::{BinIndex, GridSpec};
pub use tdomino::{tdomino_score, AnchorSet, Score, TDominoArchive};
pub use types::{Direction, EvaluatedSolution, FeatureVector, Genome, ObjectiveVector};
