//! Behavior shared by every grid archive.

use serde::{Deserialize, Serialize};

use crate::grid::{BinIndex, GridSpec};
use crate::types::EvaluatedSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    NewBin,
    Replaced,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertOutcome {
    pub kind: OutcomeKind,
    /// Challenger score minus incumbent score at decision time; the
    /// challenger's own score for [`OutcomeKind::NewBin`].
    pub score_delta: f64,
    /// Set when the candidate was refused for being unusable.
    pub diagnostic: Option<String>,
}

impl InsertOutcome {
    pub fn new(kind: OutcomeKind, score_delta: f64) -> Self {
        Self {
            kind,
            score_delta,
            diagnostic: None,
        }
    }

    pub fn invalid(reason: impl Into<String>) -> Self {
        Self {
            kind: OutcomeKind::Rejected,
            score_delta: f64::NEG_INFINITY,
            diagnostic: Some(reason.into()),
        }
    }

    pub fn improved(&self) -> bool {
        matches!(self.kind, OutcomeKind::NewBin | OutcomeKind::Replaced)
    }
}

/// Read access to a one-elite-per-bin archive.
pub trait EliteArchive {
    fn grid(&self) -> &GridSpec;

    /// Occupied bins with their elites, in lexicographic bin order.
    fn elites(&self) -> Vec<(&BinIndex, &EvaluatedSolution)>;

    fn occupied(&self) -> usize {
        self.elites().len()
    }
}

/// Insertion entry point shared by the T-DominO and scalar archives.
pub trait InsertArchive: EliteArchive {
    fn insert(&mut self, candidate: EvaluatedSolution) -> InsertOutcome;
}
