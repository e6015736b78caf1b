//! Scalar-fitness MAP-Elites archives: single objective and weighted sum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::archive::{EliteArchive, InsertArchive, InsertOutcome, OutcomeKind};
use crate::error::{Error, Result};
use crate::grid::{BinIndex, GridSpec};
use crate::types::{feasibility_contest, EvaluatedSolution, ObjectiveVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScoringMode {
    /// Rank by one canonical objective only.
    SingleObjective(usize),
    /// Rank by a dot product with fixed weights.
    WeightedSum(Vec<f64>),
    /// Fitness supplied by the caller (e.g. a static tournament score when
    /// flattening). Only [`ScalarArchive::insert_with_fitness`] accepts
    /// candidates in this mode.
    External,
}

impl ScoringMode {
    pub fn fitness(&self, objs: &ObjectiveVector) -> Result<f64> {
        match self {
            ScoringMode::SingleObjective(i) => objs.0.get(*i).copied().ok_or_else(|| {
                Error::Config(format!(
                    "objective index {i} out of range for {} objectives",
                    objs.len()
                ))
            }),
            ScoringMode::WeightedSum(w) => weighted_sum(objs, w),
            ScoringMode::External => Err(Error::Config(
                "externally scored archive needs an explicit fitness".into(),
            )),
        }
    }
}

/// Default weights `1, 10, 100, ...`, one order of magnitude per objective.
pub fn magnitude_weights(objectives: usize) -> Vec<f64> {
    (0..objectives).map(|i| 10f64.powi(i as i32)).collect()
}

pub fn weighted_sum(objs: &ObjectiveVector, weights: &[f64]) -> Result<f64> {
    if objs.len() != weights.len() {
        return Err(Error::Config(format!(
            "{} weights given for {} objectives",
            weights.len(),
            objs.len()
        )));
    }
    Ok(objs.as_slice().iter().zip(weights).map(|(o, w)| o * w).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarElite {
    pub elite: EvaluatedSolution,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct ScalarArchive {
    grid: GridSpec,
    mode: ScoringMode,
    bins: BTreeMap<BinIndex, ScalarElite>,
}

impl ScalarArchive {
    pub fn new(grid: GridSpec, mode: ScoringMode) -> Self {
        Self {
            grid,
            mode,
            bins: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> &ScoringMode {
        &self.mode
    }

    pub fn get(&self, idx: &BinIndex) -> Option<&ScalarElite> {
        self.bins.get(idx)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BinIndex, &ScalarElite)> {
        self.bins.iter()
    }

    pub fn try_insert(&mut self, candidate: EvaluatedSolution) -> InsertOutcome {
        if !candidate.objectives.is_finite() {
            return InsertOutcome::invalid("non-finite objective value");
        }
        match self.mode.fitness(&candidate.objectives) {
            Ok(f) => self.insert_with_fitness(candidate, f),
            Err(e) => InsertOutcome::invalid(e.to_string()),
        }
    }

    /// MAP-Elites replacement with a precomputed fitness: vacancy wins, then
    /// the feasibility tournament, then strictly greater fitness.
    pub fn insert_with_fitness(&mut self, candidate: EvaluatedSolution, fitness: f64) -> InsertOutcome {
        if !fitness.is_finite() {
            return InsertOutcome::invalid(format!("non-finite fitness {fitness}"));
        }
        if !(candidate.violation >= 0.0) {
            return InsertOutcome::invalid(format!(
                "constraint violation must be non-negative, got {}",
                candidate.violation
            ));
        }
        let idx = match self.grid.bin_index(&candidate.features) {
            Ok(idx) => idx,
            Err(e) => return InsertOutcome::invalid(e.to_string()),
        };
        match self.bins.get_mut(&idx) {
            None => {
                self.bins.insert(
                    idx,
                    ScalarElite {
                        elite: candidate,
                        fitness,
                    },
                );
                InsertOutcome::new(OutcomeKind::NewBin, fitness)
            }
            Some(slot) => {
                let delta = fitness - slot.fitness;
                let wins = match feasibility_contest(candidate.violation, slot.elite.violation) {
                    Some(ord) => ord.is_gt(),
                    None => fitness > slot.fitness,
                };
                if wins {
                    *slot = ScalarElite {
                        elite: candidate,
                        fitness,
                    };
                    InsertOutcome::new(OutcomeKind::Replaced, delta)
                } else {
                    InsertOutcome::new(OutcomeKind::Rejected, delta)
                }
            }
        }
    }
}

impl EliteArchive for ScalarArchive {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn elites(&self) -> Vec<(&BinIndex, &EvaluatedSolution)> {
        self.bins.iter().map(|(k, v)| (k, &v.elite)).collect()
    }
}

impl InsertArchive for ScalarArchive {
    fn insert(&mut self, candidate: EvaluatedSolution) -> InsertOutcome {
        self.try_insert(candidate)
    }
}
