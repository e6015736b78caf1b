//! Tournament-dominance ranking and the MAP-Elites archive built on it.
//!
//! A solution's score against a multiset of anchor objective vectors is the
//! product, over objectives, of how many anchors it meets or exceeds on that
//! objective. Balanced solutions win many tournaments on every objective and
//! so outrank extreme solutions that win everything on one objective and
//! nothing on another.

use std::collections::{BTreeMap, VecDeque};

use crate::archive::{EliteArchive, InsertArchive, InsertOutcome, OutcomeKind};
use crate::grid::{BinIndex, GridSpec};
use crate::types::{feasibility_contest, EvaluatedSolution, ObjectiveVector};

/// Tournament-dominance score. Counts multiply, so `u128` with saturation.
pub type Score = u128;

/// Objective vectors a candidate is compared against. Duplicates count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnchorSet {
    points: Vec<ObjectiveVector>,
}

impl AnchorSet {
    pub fn new(points: Vec<ObjectiveVector>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].len() == w[1].len()));
        Self { points }
    }

    pub fn push(&mut self, point: ObjectiveVector) {
        debug_assert!(self.points.first().map_or(true, |p| p.len() == point.len()));
        self.points.push(point);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }
}

/// Product over objectives of the number of anchors `a` with `x[n] >= a[n]`.
/// An empty anchor set scores 0.
///
/// Panics if an anchor's length differs from `x`.
pub fn tdomino_score(x: &ObjectiveVector, anchors: &AnchorSet) -> Score {
    if anchors.is_empty() {
        return 0;
    }
    let x = x.as_slice();
    let mut counts = vec![0u64; x.len()];
    for a in anchors.points() {
        let a = a.as_slice();
        assert_eq!(a.len(), x.len(), "anchor dimension mismatch");
        for (c, (xv, av)) in counts.iter_mut().zip(x.iter().zip(a)) {
            if xv >= av {
                *c += 1;
            }
        }
    }
    counts
        .into_iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c as u128))
}

/// Scores many points against one fixed anchor set by sorting each objective
/// column once and binary-searching, `O(M (A + P) log A)`.
pub fn tdomino_scores_batch(points: &[&ObjectiveVector], anchors: &AnchorSet) -> Vec<Score> {
    if anchors.is_empty() {
        return vec![0; points.len()];
    }
    let m = anchors.points()[0].len();
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|n| {
            let mut col: Vec<f64> = anchors.points().iter().map(|a| a.0[n]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    points
        .iter()
        .map(|x| {
            assert_eq!(x.len(), m, "anchor dimension mismatch");
            columns.iter().zip(x.as_slice()).fold(1u128, |acc, (col, &v)| {
                let count = col.partition_point(|&a| a <= v);
                acc.saturating_mul(count as u128)
            })
        })
        .collect()
}

/// Fixed-capacity FIFO of past objective vectors kept in a bin.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    entries: VecDeque<ObjectiveVector>,
    capacity: usize,
}

impl HistoryBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, v: ObjectiveVector) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(v);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &ObjectiveVector> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TDominoBin {
    pub elite: Option<EvaluatedSolution>,
    pub history: HistoryBuffer,
}

#[derive(Debug, Clone)]
pub struct TDominoArchive {
    grid: GridSpec,
    bins: BTreeMap<BinIndex, TDominoBin>,
    neighbor_radius: usize,
    history_capacity: usize,
}

impl TDominoArchive {
    pub const DEFAULT_NEIGHBOR_RADIUS: usize = 4;
    pub const DEFAULT_HISTORY_CAPACITY: usize = 10;

    pub fn new(grid: GridSpec, neighbor_radius: usize, history_capacity: usize) -> Self {
        Self {
            grid,
            bins: BTreeMap::new(),
            neighbor_radius,
            history_capacity,
        }
    }

    pub fn with_defaults(grid: GridSpec) -> Self {
        Self::new(
            grid,
            Self::DEFAULT_NEIGHBOR_RADIUS,
            Self::DEFAULT_HISTORY_CAPACITY,
        )
    }

    pub fn neighbor_radius(&self) -> usize {
        self.neighbor_radius
    }

    pub fn history_capacity(&self) -> usize {
        self.history_capacity
    }

    pub fn bin(&self, idx: &BinIndex) -> Option<&TDominoBin> {
        self.bins.get(idx)
    }

    pub fn elite(&self, idx: &BinIndex) -> Option<&EvaluatedSolution> {
        self.bins.get(idx).and_then(|b| b.elite.as_ref())
    }

    /// Anchors for a contest in `bin_idx`, in order: challenger, incumbent,
    /// the bin's history (oldest first), then elites of neighboring bins in
    /// lexicographic order.
    pub fn collect_anchors(&self, bin_idx: &BinIndex, challenger: &EvaluatedSolution) -> AnchorSet {
        let mut anchors = AnchorSet::default();
        anchors.push(challenger.objectives.clone());
        if let Some(bin) = self.bins.get(bin_idx) {
            if let Some(elite) = &bin.elite {
                anchors.push(elite.objectives.clone());
            }
            for h in bin.history.iter() {
                anchors.push(h.clone());
            }
        }
        for n in self.grid.neighbors_within(bin_idx, self.neighbor_radius) {
            if let Some(elite) = self.elite(&n) {
                anchors.push(elite.objectives.clone());
            }
        }
        anchors
    }

    pub fn try_insert(&mut self, candidate: EvaluatedSolution) -> InsertOutcome {
        if !candidate.objectives.is_finite() {
            return InsertOutcome::invalid("non-finite objective value");
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
        let anchors = self.collect_anchors(&idx, &candidate);
        let challenger_score = tdomino_score(&candidate.objectives, &anchors);

        let capacity = self.history_capacity;
        let bin = self.bins.entry(idx).or_insert_with(|| TDominoBin {
            elite: None,
            history: HistoryBuffer::new(capacity),
        });

        let Some(incumbent) = &bin.elite else {
            bin.history.push(candidate.objectives.clone());
            bin.elite = Some(candidate);
            return InsertOutcome::new(OutcomeKind::NewBin, challenger_score as f64);
        };

        let incumbent_score = tdomino_score(&incumbent.objectives, &anchors);
        let delta = challenger_score as f64 - incumbent_score as f64;
        let wins = match feasibility_contest(candidate.violation, incumbent.violation) {
            Some(ord) => ord.is_gt(),
            None => challenger_score > incumbent_score,
        };
        if !wins {
            return InsertOutcome::new(OutcomeKind::Rejected, delta);
        }
        let replaced = bin.elite.replace(candidate).expect("incumbent present");
        bin.history.push(replaced.objectives);
        let new_objs = bin.elite.as_ref().map(|e| e.objectives.clone()).expect("just set");
        bin.history.push(new_objs);
        InsertOutcome::new(OutcomeKind::Replaced, delta)
    }
}

impl EliteArchive for TDominoArchive {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn elites(&self) -> Vec<(&BinIndex, &EvaluatedSolution)> {
        self.bins
            .iter()
            .filter_map(|(k, b)| b.elite.as_ref().map(|e| (k, e)))
            .collect()
    }
}

impl InsertArchive for TDominoArchive {
    fn insert(&mut self, candidate: EvaluatedSolution) -> InsertOutcome {
        self.try_insert(candidate)
    }
}

/// Scores every elite against all current elites of the archive. For
/// reporting and flattening only; insertion never uses this.
pub fn static_scores<A: EliteArchive + ?Sized>(archive: &A) -> BTreeMap<BinIndex, Score> {
    let elites = archive.elites();
    let anchors = AnchorSet::new(elites.iter().map(|(_, e)| e.objectives.clone()).collect());
    let points: Vec<&ObjectiveVector> = elites.iter().map(|(_, e)| &e.objectives).collect();
    let scores = tdomino_scores_batch(&points, &anchors);
    elites
        .into_iter()
        .zip(scores)
        .map(|((k, _), s)| (k.clone(), s))
        .collect()
}
