//! Shared domain types.
//!
//! Every objective vector stored anywhere in this crate is in canonical
//! maximization form. Problems declare a [`Direction`] per objective and the
//! evaluator canonicalizes exactly once via [`canonicalize`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Closed parameter interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Real-valued parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome(pub Vec<f64>);

impl Genome {
    /// Clamp every entry into its bound. Panics if lengths differ.
    pub fn clipped(mut self, bounds: &[Bound]) -> Self {
        assert_eq!(self.0.len(), bounds.len(), "genome/bounds length mismatch");
        for (v, b) in self.0.iter_mut().zip(bounds) {
            *v = b.clip(*v);
        }
        self
    }

    pub fn within(&self, bounds: &[Bound]) -> bool {
        self.0.len() == bounds.len() && self.0.iter().zip(bounds).all(|(v, b)| b.contains(*v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Objective scores in canonical maximization form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSolution {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub features: FeatureVector,
    /// Constraint violation; 0 means feasible.
    pub violation: f64,
}

impl EvaluatedSolution {
    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }
}

/// Map raw objective values into maximization form: minimized entries are negated.
pub fn canonicalize(raw: &[f64], directions: &[Direction]) -> Result<ObjectiveVector> {
    if raw.len() != directions.len() {
        return Err(Error::Config(format!(
            "objective vector has {} entries but {} directions are declared",
            raw.len(),
            directions.len()
        )));
    }
    Ok(ObjectiveVector(
        raw.iter()
            .zip(directions)
            .map(|(&v, d)| match d {
                Direction::Maximize => v,
                Direction::Minimize => -v,
            })
            .collect(),
    ))
}

/// Inverse of [`canonicalize`]; negation is an involution so the rule is the same.
pub fn decanonicalize(canonical: &ObjectiveVector, directions: &[Direction]) -> Result<Vec<f64>> {
    canonicalize(canonical.as_slice(), directions).map(|v| v.0)
}

/// Feasibility tournament: a feasible solution beats an infeasible one, and
/// between two infeasible solutions the smaller violation wins.
///
/// Returns `None` when both are feasible (or equally infeasible), meaning the
/// objective-based comparison decides.
pub fn feasibility_contest(challenger_violation: f64, incumbent_violation: f64) -> Option<Ordering> {
    let c_ok = challenger_violation <= 0.0;
    let i_ok = incumbent_violation <= 0.0;
    match (c_ok, i_ok) {
        (true, true) => None,
        (true, false) => Some(Ordering::Greater),
        (false, true) => Some(Ordering::Less),
        (false, false) => match incumbent_violation.partial_cmp(&challenger_violation) {
            Some(Ordering::Equal) | None => None,
            ord => ord,
        },
    }
}

/// Static description of a benchmark problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: String,
    pub bounds: Vec<Bound>,
    pub directions: Vec<Direction>,
    /// Per-feature `(lo, hi)` grid range.
    pub feature_ranges: Vec<(f64, f64)>,
}

impl ProblemSpec {
    pub fn genome_len(&self) -> usize {
        self.bounds.len()
    }

    pub fn objective_count(&self) -> usize {
        self.directions.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_ranges.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_rules() {
        use Direction::*;
        assert_eq!(canonicalize(&[5.0], &[Maximize]).unwrap().0, vec![5.0]);
        assert_eq!(canonicalize(&[5.0], &[Minimize]).unwrap().0, vec![-5.0]);
        assert_eq!(
            canonicalize(&[1.0, 2.0], &[Minimize, Maximize]).unwrap().0,
            vec![-1.0, 2.0]
        );
        assert!(matches!(
            canonicalize(&[1.0, 2.0], &[Minimize]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn canonicalize_round_trip() {
        use Direction::*;
        let dirs = [Minimize, Maximize, Minimize];
        let raw = [0.5, -3.0, 7.25];
        let c = canonicalize(&raw, &dirs).unwrap();
        assert_eq!(decanonicalize(&c, &dirs).unwrap(), raw.to_vec());
    }

    #[test]
    fn feasibility_rules() {
        assert_eq!(feasibility_contest(0.0, 0.0), None);
        assert_eq!(feasibility_contest(0.0, 2.0), Some(Ordering::Greater));
        assert_eq!(feasibility_contest(1.0, 0.0), Some(Ordering::Less));
        assert_eq!(feasibility_contest(1.0, 2.0), Some(Ordering::Greater));
        assert_eq!(feasibility_contest(3.0, 2.0), Some(Ordering::Less));
        assert_eq!(feasibility_contest(2.0, 2.0), None);
    }

    #[test]
    fn clip_respects_bounds() {
        let b = vec![Bound::new(-1.0, 1.0); 3];
        let g = Genome(vec![-5.0, 0.5, 9.0]).clipped(&b);
        assert_eq!(g.0, vec![-1.0, 0.5, 1.0]);
        assert!(g.within(&b));
    }
}
