use serde::{Deserialize, Serialize};

use crate::archive::EliteArchive;
use crate::error::{Error, Result};
use crate::nsga2::dominates;
use crate::types::ObjectiveVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdScore {
    pub per_objective: Vec<f64>,
    pub total: f64,
}

/// Per-objective sums of canonical elite objectives, plus their total.
pub fn qd_score<A: EliteArchive + ?Sized>(archive: &A, objectives: usize) -> QdScore {
    let mut per_objective = vec![0.0; objectives];
    for (_, e) in archive.elites() {
        for (acc, v) in per_objective.iter_mut().zip(e.objectives.as_slice()) {
            *acc += v;
        }
    }
    let total = per_objective.iter().sum();
    QdScore {
        per_objective,
        total,
    }
}

pub fn coverage<A: EliteArchive + ?Sized>(archive: &A) -> f64 {
    archive.occupied() as f64 / archive.grid().total_bins() as f64
}

/// Fraction of `solutions` strictly above the bottom quartile of the
/// reference set's range on every objective. Thresholds are
/// `min + 0.25 (max - min)` per objective; a zero-range objective puts the
/// threshold at that value, which no solution at it can exceed.
pub fn balance_fraction(solutions: &[&ObjectiveVector], reference: &[&ObjectiveVector]) -> Result<f64> {
    let Some(first) = reference.first() else {
        return Err(Error::Config("balance reference set is empty".into()));
    };
    let m = first.len();
    if let Some(bad) = reference.iter().chain(solutions).find(|v| v.len() != m) {
        return Err(Error::Config(format!(
            "objective count mismatch: expected {m}, found {}",
            bad.len()
        )));
    }
    if solutions.is_empty() {
        return Ok(0.0);
    }
    let thresholds: Vec<f64> = (0..m)
        .map(|j| {
            let (lo, hi) = reference.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.0[j]), hi.max(v.0[j]))
            });
            lo + 0.25 * (hi - lo)
        })
        .collect();
    let above = solutions
        .iter()
        .filter(|s| s.as_slice().iter().zip(&thresholds).all(|(v, t)| v > t))
        .count();
    Ok(above as f64 / solutions.len() as f64)
}

/// Indices of solutions not strictly dominated by any other; duplicates kept.
pub fn pareto_front(solutions: &[&ObjectiveVector]) -> Vec<usize> {
    (0..solutions.len())
        .filter(|&i| !solutions.iter().any(|o| dominates(o, solutions[i])))
        .collect()
}

/// One row of the per-generation metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub gen: usize,
    pub evals: usize,
    pub coverage: f64,
    pub qd_per_obj: Vec<f64>,
    pub qd_total: f64,
    /// Replacements of existing elites (or surviving offspring for NSGA-II).
    pub churn: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub records: Vec<GenerationRecord>,
}

impl RunMetrics {
    pub fn push(&mut self, record: GenerationRecord) {
        debug_assert!(self.records.last().map_or(true, |r| r.evals < record.evals));
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&GenerationRecord> {
        self.records.last()
    }

    pub fn total_churn(&self) -> usize {
        self.records.iter().map(|r| r.churn).sum()
    }
}
