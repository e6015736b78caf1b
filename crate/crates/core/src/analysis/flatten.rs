use std::collections::BTreeMap;

use crate::archive::EliteArchive;
use crate::baseline::{ScalarArchive, ScoringMode};
use crate::error::{Error, Result};
use crate::grid::{BinIndex, GridSpec};
use crate::tdomino::{static_scores, Score};
use crate::types::{EvaluatedSolution, FeatureVector};

/// Projects an archive onto feature axes `(i, j)`.
///
/// Every source elite is scored against the whole source archive, re-binned
/// on the two chosen features, and each target cell keeps its highest
/// scorer; ties go to the elite from the lexicographically earlier source
/// bin. The stored fitness is the static score.
pub fn flatten<A: EliteArchive + ?Sized>(
    source: &A,
    axes: (usize, usize),
    target: GridSpec,
) -> Result<ScalarArchive> {
    let (i, j) = axes;
    let d = source.grid().axes();
    if i == j || i >= d || j >= d {
        return Err(Error::Config(format!(
            "invalid axis pair ({i}, {j}) for a {d}-feature archive"
        )));
    }
    if target.axes() != 2 {
        return Err(Error::Config("flattening target grid must have two axes".into()));
    }
    let scores = static_scores(source);
    let mut best: BTreeMap<BinIndex, (Score, &EvaluatedSolution)> = BTreeMap::new();
    for (idx, elite) in source.elites() {
        let projected = FeatureVector(vec![elite.features.0[i], elite.features.0[j]]);
        let cell = target.bin_index(&projected)?;
        let score = scores[idx];
        match best.get(&cell) {
            Some((held, _)) if *held >= score => {}
            _ => {
                best.insert(cell, (score, elite));
            }
        }
    }
    let mut out = ScalarArchive::new(target, ScoringMode::External);
    for (_, (score, elite)) in best {
        let mut flat = elite.clone();
        flat.features = FeatureVector(vec![elite.features.0[i], elite.features.0[j]]);
        let outcome = out.insert_with_fitness(flat, score as f64);
        debug_assert!(outcome.improved());
    }
    Ok(out)
}

/// Every `i < j` view of an archive, each on the source grid's axes.
pub fn flatten_all_pairs<A: EliteArchive + ?Sized>(source: &A) -> Result<Vec<((usize, usize), ScalarArchive)>> {
    let d = source.grid().axes();
    let mut views = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let target = source.grid().project(i, j)?;
            views.push(((i, j), flatten(source, (i, j), target)?));
        }
    }
    Ok(views)
}
