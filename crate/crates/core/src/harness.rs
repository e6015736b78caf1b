//! Experiment orchestration: one run per replicate, exports, and a summary.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    balance_fraction, coverage, export_population, export_run, qd_score, GenerationRecord, QdScore, RunMetrics,
};
use crate::archive::{InsertArchive, OutcomeKind};
use crate::baseline::{magnitude_weights, ScalarArchive, ScoringMode};
use crate::config::{AlgorithmId, RunConfig};
use crate::emitters::{ImprovementEmitter, RankedFeedback};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::nsga2::{Nsga2, Nsga2Config};
use crate::problems::Problem;
use crate::tdomino::TDominoArchive;
use crate::types::{EvaluatedSolution, Genome, ObjectiveVector};

pub enum FinalState {
    Archive(Box<dyn InsertArchive + Send>),
    Population(Vec<EvaluatedSolution>),
}

pub struct RunResult {
    pub algo: AlgorithmId,
    pub grid: GridSpec,
    pub metrics: RunMetrics,
    pub state: FinalState,
}

impl RunResult {
    /// Final archive elites, or the final population for NSGA-II.
    pub fn solutions(&self) -> Vec<&EvaluatedSolution> {
        match &self.state {
            FinalState::Archive(a) => a.elites().into_iter().map(|(_, e)| e).collect(),
            FinalState::Population(p) => p.iter().collect(),
        }
    }

    pub fn objectives(&self) -> Vec<&ObjectiveVector> {
        self.solutions().into_iter().map(|s| &s.objectives).collect()
    }

    pub fn archive(&self) -> Option<&(dyn InsertArchive + Send)> {
        match &self.state {
            FinalState::Archive(a) => Some(a.as_ref()),
            FinalState::Population(_) => None,
        }
    }

    pub fn evaluations(&self) -> usize {
        self.metrics.last().map_or(0, |r| r.evals)
    }
}

pub fn build_grid(config: &RunConfig, problem: &dyn Problem) -> Result<GridSpec> {
    GridSpec::new(config.grid.clone(), problem.spec().feature_ranges.clone())
}

fn evaluate_batch(problem: &dyn Problem, batch: &[Genome]) -> Result<Vec<EvaluatedSolution>> {
    batch.par_iter().map(|g| problem.evaluate(g)).collect()
}

/// Runs one algorithm to the generation budget with the given seed.
pub fn run_algorithm(config: &RunConfig, seed: u64) -> Result<RunResult> {
    config.validate()?;
    let problem = config.problem.build();
    let grid = build_grid(config, problem.as_ref())?;
    match config.algo {
        AlgorithmId::Nsga2 => run_nsga2(config, problem.as_ref(), grid, seed),
        algo => {
            let objectives = problem.spec().objective_count();
            let archive: Box<dyn InsertArchive + Send> = match algo {
                AlgorithmId::Tdomino => Box::new(TDominoArchive::new(grid.clone(), config.neighbor_radius, config.history)),
                AlgorithmId::MeSingle => Box::new(ScalarArchive::new(grid.clone(), ScoringMode::SingleObjective(config.single_index))),
                AlgorithmId::MeSum => Box::new(ScalarArchive::new(
                    grid.clone(),
                    ScoringMode::WeightedSum(config.weights.clone().unwrap_or_else(|| magnitude_weights(objectives))),
                )),
                AlgorithmId::Nsga2 => unreachable!(),
            };
            run_map_elites(config, problem.as_ref(), grid, archive, seed)
        }
    }
}

fn run_map_elites(
    config: &RunConfig,
    problem: &dyn Problem,
    grid: GridSpec,
    mut archive: Box<dyn InsertArchive + Send>,
    seed: u64,
) -> Result<RunResult> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let bounds = problem.spec().bounds.clone();
    let objectives = problem.spec().objective_count();
    let mut emitters: Vec<ImprovementEmitter> = (0..config.emitters)
        .map(|_| ImprovementEmitter::new(bounds.clone(), config.batch_size, master.gen()))
        .collect();
    let mut metrics = RunMetrics::default();
    let mut evals = 0;
    for gen in 1..=config.gens {
        let mut churn = 0;
        for emitter in &mut emitters {
            let batch = emitter.ask();
            let evaluated = evaluate_batch(problem, &batch)?;
            evals += evaluated.len();
            let entries = batch
                .into_iter()
                .zip(evaluated)
                .map(|(g, s)| {
                    let outcome = archive.insert(s);
                    if outcome.kind == OutcomeKind::Replaced {
                        churn += 1;
                    }
                    (g, outcome)
                })
                .collect();
            let elites = archive.elites();
            let genomes: Vec<&Genome> = elites.iter().map(|(_, e)| &e.genome).collect();
            emitter.tell(&RankedFeedback { entries }, &genomes);
        }
        let qd = qd_score(archive.as_ref(), objectives);
        metrics.push(GenerationRecord {
            gen,
            evals,
            coverage: coverage(archive.as_ref()),
            qd_per_obj: qd.per_objective,
            qd_total: qd.total,
            churn,
            restarts: emitters.iter().map(|e| e.restarts()).sum(),
        });
    }
    Ok(RunResult {
        algo: config.algo,
        grid,
        metrics,
        state: FinalState::Archive(archive),
    })
}

/// The random initial population is generation 1, so every algorithm
/// evaluates `gens * emitters * batch_size` solutions.
fn run_nsga2(config: &RunConfig, problem: &dyn Problem, grid: GridSpec, seed: u64) -> Result<RunResult> {
    let nsga_config = Nsga2Config {
        population: config.evaluations_per_generation(),
        ..Default::default()
    };
    let objectives = problem.spec().objective_count();
    let mut nsga = Nsga2::new(problem, nsga_config, seed)?;
    let mut visited = BTreeSet::new();
    let mut metrics = RunMetrics::default();
    let total_bins = grid.total_bins() as f64;
    let mut record = |gen: usize, members: &[EvaluatedSolution], evals: usize, churn: usize| -> Result<()> {
        let mut per = vec![0.0; objectives];
        for m in members {
            visited.insert(grid.bin_index(&m.features)?);
            for (acc, v) in per.iter_mut().zip(m.objectives.as_slice()) {
                *acc += v;
            }
        }
        metrics.push(GenerationRecord {
            gen,
            evals,
            coverage: visited.len() as f64 / total_bins,
            qd_total: per.iter().sum(),
            qd_per_obj: per,
            churn,
            restarts: 0,
        });
        Ok(())
    };
    record(1, nsga.members(), nsga.evaluations(), 0)?;
    for gen in 2..=config.gens {
        let survived = nsga.evolve_generation()?;
        record(gen, nsga.members(), nsga.evaluations(), survived)?;
    }
    Ok(RunResult {
        algo: config.algo,
        grid,
        metrics,
        state: FinalState::Population(nsga.members().to_vec()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub rep: usize,
    pub seed: u64,
    pub status: String,
    pub evals: Option<usize>,
    pub coverage: Option<f64>,
    pub qd: Option<QdScore>,
    /// Final solutions judged against their own objective ranges.
    pub balance_self: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Linear-interpolation quantiles; `None` for an empty sample.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some(Quartiles {
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub problem: String,
    pub algo: String,
    pub replicates: Vec<ReplicateSummary>,
    pub failed: usize,
    pub coverage: Option<Quartiles>,
    pub qd_total: Option<Quartiles>,
    pub balance_self: Option<Quartiles>,
}

impl ExperimentSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            0
        } else {
            1
        }
    }
}

pub fn replicate_dir(config: &RunConfig, rep: usize) -> PathBuf {
    config
        .out
        .join(config.problem.as_str())
        .join(config.algo.as_str())
        .join(format!("rep{rep}"))
}

fn run_and_export(config: &RunConfig, rep: usize) -> Result<ReplicateSummary> {
    let seed = config.replicate_seed(rep);
    let result = run_algorithm(config, seed)?;
    let problem = config.problem.build();
    let spec = problem.spec();
    let dir = replicate_dir(config, rep);
    match &result.state {
        FinalState::Archive(a) => {
            export_run(a.as_ref(), &spec.directions, spec.genome_len(), &result.metrics, &dir)?;
        }
        FinalState::Population(p) => {
            export_population(p, &result.grid, &spec.directions, &result.metrics, &dir)?;
        }
    }
    let objs = result.objectives();
    let last = result.metrics.last();
    Ok(ReplicateSummary {
        rep,
        seed,
        status: "ok".into(),
        evals: last.map(|r| r.evals),
        coverage: last.map(|r| r.coverage),
        qd: last.map(|r| QdScore {
            per_objective: r.qd_per_obj.clone(),
            total: r.qd_total,
        }),
        balance_self: if objs.is_empty() {
            None
        } else {
            Some(balance_fraction(&objs, &objs)?)
        },
    })
}

/// Runs every replicate (in parallel), exports each into
/// `<out>/<problem>/<algo>/rep<k>/`, and writes `summary.json` beside them.
/// A replicate that errors or panics is recorded as failed.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let replicates: Vec<ReplicateSummary> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let outcome = catch_unwind(AssertUnwindSafe(|| run_and_export(config, rep)));
            let status = match outcome {
                Ok(Ok(summary)) => return summary,
                Ok(Err(e)) => format!("failed: {e}"),
                Err(panic) => {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "unknown panic".into());
                    format!("failed: panic: {msg}")
                }
            };
            ReplicateSummary {
                rep,
                seed: config.replicate_seed(rep),
                status,
                evals: None,
                coverage: None,
                qd: None,
                balance_self: None,
            }
        })
        .collect();
    let ok: Vec<&ReplicateSummary> = replicates.iter().filter(|r| r.status == "ok").collect();
    let collect = |f: &dyn Fn(&ReplicateSummary) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let summary = ExperimentSummary {
        problem: config.problem.as_str().into(),
        algo: config.algo.as_str().into(),
        failed: replicates.len() - ok.len(),
        coverage: quartiles(&collect(&|r| r.coverage)),
        qd_total: quartiles(&collect(&|r| r.qd.as_ref().map(|q| q.total))),
        balance_self: quartiles(&collect(&|r| r.balance_self)),
        replicates,
    };
    let dir = config.out.join(config.problem.as_str()).join(config.algo.as_str());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("summary.json");
    let body = serde_json::to_string_pretty(&summary).map_err(|e| Error::Evaluation(e.to_string()))?;
    fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::BenchmarkId;

    #[test]
    fn quartile_interpolation() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        let q = quartiles(&[1.0, 2.0]).unwrap();
        assert_eq!(q.median, 1.5);
        assert!(quartiles(&[]).is_none());
    }

    #[test]
    fn map_elites_budget_is_gens_times_batch() {
        let mut cfg = RunConfig::new(BenchmarkId::RastriginMoo, AlgorithmId::Tdomino);
        cfg.gens = 10;
        let r = run_algorithm(&cfg, 1).unwrap();
        assert_eq!(r.evaluations(), 4000);
        assert_eq!(r.metrics.records.len(), 10);
        let rec = &r.metrics.records;
        assert!(rec.windows(2).all(|w| w[0].evals < w[1].evals && w[0].coverage <= w[1].coverage));
    }

    #[test]
    fn budget_parity_across_algorithms() {
        for algo in AlgorithmId::ALL {
            let mut cfg = RunConfig::new(BenchmarkId::Zdt3, algo);
            cfg.gens = 3;
            cfg.batch_size = 20;
            let r = run_algorithm(&cfg, 5).unwrap();
            assert_eq!(r.evaluations(), 120, "{algo}");
        }
    }

    #[test]
    fn replicate_seeds_are_offsets() {
        let mut cfg = RunConfig::new(BenchmarkId::Zdt3, AlgorithmId::Nsga2);
        cfg.seed = 40;
        assert_eq!(cfg.replicate_seed(3), 43);
    }
}
