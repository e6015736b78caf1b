//! NSGA-II reference optimizer: non-dominated sorting, crowding distance,
//! binary tournaments, SBX crossover and polynomial mutation with
//! (mu + lambda) survival.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::emitters::uniform_genome;
use crate::error::Result;
use crate::problems::Problem;
use crate::types::{feasibility_contest, Bound, EvaluatedSolution, Genome, ObjectiveVector};

/// Pareto dominance in maximization form. Panics on length mismatch.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    assert_eq!(a.len(), b.len(), "objective length mismatch");
    let mut strictly = false;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Ordered fronts of member indices; each front in ascending index order.
pub type FrontPartition = Vec<Vec<usize>>;

/// Fast non-dominated sort for an arbitrary dominance relation over `0..n`.
pub fn sort_by_dominance<F>(n: usize, dominates: F) -> FrontPartition
where
    F: Fn(usize, usize) -> bool,
{
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            if dominates(p, q) {
                dominated_by_me[p].push(q);
                dom_count[q] += 1;
            } else if dominates(q, p) {
                dominated_by_me[q].push(p);
                dom_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dom_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                dom_count[q] -= 1;
                if dom_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

pub fn fast_nondominated_sort(objs: &[&ObjectiveVector]) -> FrontPartition {
    sort_by_dominance(objs.len(), |a, b| dominates(objs[a], objs[b]))
}

/// Deb's constrained dominance: feasibility first, then Pareto dominance.
pub fn constrained_dominates(a: &EvaluatedSolution, b: &EvaluatedSolution) -> bool {
    match feasibility_contest(a.violation, b.violation) {
        Some(ord) => ord.is_gt(),
        None if a.is_feasible() => dominates(&a.objectives, &b.objectives),
        // equally infeasible
        None => false,
    }
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(front: &[&ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        order.sort_by(|&a, &b| front[a].0[obj].total_cmp(&front[b].0[obj]));
        let lo = front[order[0]].0[obj];
        let hi = front[order[n - 1]].0[obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]].0[obj] - front[order[w - 1]].0[obj];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Config {
    pub population: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means `1 / n`.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 400,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
        }
    }
}

/// Rank (front number) and crowding distance of each member.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

pub fn rank_population(members: &[EvaluatedSolution]) -> (FrontPartition, Ranking) {
    let fronts = sort_by_dominance(members.len(), |a, b| {
        constrained_dominates(&members[a], &members[b])
    });
    let mut rank = vec![0; members.len()];
    let mut crowding = vec![0.0; members.len()];
    for (r, front) in fronts.iter().enumerate() {
        let objs: Vec<&ObjectiveVector> = front.iter().map(|&i| &members[i].objectives).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&objs)) {
            rank[i] = r;
            crowding[i] = d;
        }
    }
    (fronts, Ranking { rank, crowding })
}

pub struct Nsga2<'p> {
    problem: &'p dyn Problem,
    config: Nsga2Config,
    members: Vec<EvaluatedSolution>,
    rng: ChaCha8Rng,
    evaluations: usize,
}

impl<'p> Nsga2<'p> {
    /// Random initial population of `config.population` evaluated members.
    pub fn new(problem: &'p dyn Problem, config: Nsga2Config, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = &problem.spec().bounds;
        let members = (0..config.population)
            .map(|_| problem.evaluate(&uniform_genome(bounds, &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            problem,
            members,
            evaluations: config.population,
            config,
            rng,
        })
    }

    pub fn from_population(
        problem: &'p dyn Problem,
        config: Nsga2Config,
        members: Vec<EvaluatedSolution>,
        seed: u64,
    ) -> Self {
        Self {
            problem,
            config,
            members,
            rng: ChaCha8Rng::seed_from_u64(seed),
            evaluations: 0,
        }
    }

    pub fn members(&self) -> &[EvaluatedSolution] {
        &self.members
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// One generation: N offspring by tournament + SBX + mutation, then the
    /// best N of parents and offspring by (rank, crowding). Returns the
    /// number of offspring that survived.
    pub fn evolve_generation(&mut self) -> Result<usize> {
        let n = self.config.population;
        let (_, ranking) = rank_population(&self.members);
        let bounds = self.problem.spec().bounds.clone();
        let pm = self.config.mutation_prob.unwrap_or(1.0 / bounds.len() as f64);

        let mut offspring_genomes = Vec::with_capacity(n);
        while offspring_genomes.len() < n {
            let a = self.tournament(&ranking);
            let b = self.tournament(&ranking);
            let (mut c1, mut c2) = (self.members[a].genome.clone(), self.members[b].genome.clone());
            if self.rng.gen::<f64>() < self.config.crossover_prob {
                sbx(&mut c1, &mut c2, &bounds, self.config.crossover_eta, &mut self.rng);
            }
            polynomial_mutation(&mut c1, &bounds, pm, self.config.mutation_eta, &mut self.rng);
            polynomial_mutation(&mut c2, &bounds, pm, self.config.mutation_eta, &mut self.rng);
            offspring_genomes.push(c1.clipped(&bounds));
            if offspring_genomes.len() < n {
                offspring_genomes.push(c2.clipped(&bounds));
            }
        }
        let offspring = offspring_genomes
            .iter()
            .map(|g| self.problem.evaluate(g))
            .collect::<Result<Vec<_>>>()?;
        self.evaluations += offspring.len();

        let parents = self.members.len();
        let mut combined = std::mem::take(&mut self.members);
        combined.extend(offspring);
        let keep = survivors(&combined, n);
        let survived_offspring = keep.iter().filter(|&&i| i >= parents).count();
        let mut slots: Vec<Option<EvaluatedSolution>> = combined.into_iter().map(Some).collect();
        self.members = keep.into_iter().map(|i| slots[i].take().expect("unique")).collect();
        Ok(survived_offspring)
    }

    fn tournament(&mut self, ranking: &Ranking) -> usize {
        let n = self.members.len();
        let a = self.rng.gen_range(0..n);
        let b = self.rng.gen_range(0..n);
        let (ma, mb) = (&self.members[a], &self.members[b]);
        let ord = feasibility_contest(ma.violation, mb.violation).unwrap_or_else(|| {
            ranking.rank[b]
                .cmp(&ranking.rank[a])
                .then(ranking.crowding[a].total_cmp(&ranking.crowding[b]))
        });
        match ord {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => *[a, b].choose(&mut self.rng).expect("two"),
        }
    }
}

/// Indices of the best `n` members by front, then crowding distance
/// (descending) within the split front; index order breaks ties.
pub fn survivors(members: &[EvaluatedSolution], n: usize) -> Vec<usize> {
    let (fronts, ranking) = rank_population(members);
    let mut keep = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
            continue;
        }
        let mut split = front;
        split.sort_by(|&a, &b| ranking.crowding[b].total_cmp(&ranking.crowding[a]).then(a.cmp(&b)));
        keep.extend(split.into_iter().take(n - keep.len()));
        break;
    }
    keep
}

/// Bounded simulated binary crossover, applied per variable with probability 1/2.
pub fn sbx<R: Rng + ?Sized>(a: &mut Genome, b: &mut Genome, bounds: &[Bound], eta: f64, rng: &mut R) {
    for (i, bound) in bounds.iter().enumerate() {
        if rng.gen::<f64>() >= 0.5 {
            continue;
        }
        let (x1, x2) = (a.0[i], b.0[i]);
        if (x1 - x2).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        let (lo, hi) = (bound.lo, bound.hi);
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
        let c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
        let c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1));
        let (c1, c2) = (bound.clip(c1), bound.clip(c2));
        if rng.gen::<f64>() < 0.5 {
            a.0[i] = c2;
            b.0[i] = c1;
        } else {
            a.0[i] = c1;
            b.0[i] = c2;
        }
    }
}

/// Bounded polynomial mutation.
pub fn polynomial_mutation<R: Rng + ?Sized>(g: &mut Genome, bounds: &[Bound], prob: f64, eta: f64, rng: &mut R) {
    for (x, bound) in g.0.iter_mut().zip(bounds) {
        if rng.gen::<f64>() >= prob {
            continue;
        }
        let width = bound.width();
        if width <= 0.0 {
            continue;
        }
        let d1 = (*x - bound.lo) / width;
        let d2 = (bound.hi - *x) / width;
        let pow = 1.0 / (eta + 1.0);
        let u: f64 = rng.gen();
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *x = bound.clip(*x + dq * width);
    }
}
