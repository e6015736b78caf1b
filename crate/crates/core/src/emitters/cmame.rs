//! CMA-ES improvement emitter.
//!
//! Samples are ranked by what they did to the archive: samples that opened a
//! new bin come first, then samples that replaced an elite, each tier by
//! descending score delta. Only improving samples act as parents. A batch
//! without a single improvement restarts the emitter from a random elite.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::uniform_genome;
use crate::archive::{InsertOutcome, OutcomeKind};
use crate::types::{Bound, Genome};

/// Distribution state of one emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub covariance: DMatrix<f64>,
    pub path_sigma: DVector<f64>,
    pub path_c: DVector<f64>,
    pub batch_size: usize,
    pub generation: usize,
    pub restarts: usize,
    /// `B` and `D` of `C = B diag(D^2) B^T`.
    eigvecs: DMatrix<f64>,
    eigvals_sqrt: DVector<f64>,
}

impl EmitterState {
    fn fresh(mean: DVector<f64>, sigma: f64, batch_size: usize, restarts: usize) -> Self {
        let d = mean.len();
        Self {
            mean,
            sigma,
            covariance: DMatrix::identity(d, d),
            path_sigma: DVector::zeros(d),
            path_c: DVector::zeros(d),
            batch_size,
            generation: 0,
            restarts,
            eigvecs: DMatrix::identity(d, d),
            eigvals_sqrt: DVector::from_element(d, 1.0),
        }
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    fn is_healthy(&self) -> bool {
        self.sigma.is_finite()
            && self.sigma > 0.0
            && self.mean.iter().all(|v| v.is_finite())
            && self.covariance.iter().all(|v| v.is_finite())
            && self.path_sigma.iter().all(|v| v.is_finite())
            && self.path_c.iter().all(|v| v.is_finite())
    }

    /// Refresh `B` and `D`; false when `C` is not positive definite.
    fn decompose(&mut self) -> bool {
        let eig = SymmetricEigen::new(self.covariance.clone());
        if eig.eigenvalues.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return false;
        }
        self.eigvals_sqrt = eig.eigenvalues.map(f64::sqrt);
        self.eigvecs = eig.eigenvectors;
        true
    }
}

/// Per-sample archive outcome for the last batch, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeedback {
    pub entries: Vec<(Genome, InsertOutcome)>,
}

/// Sample indices in emitter rank order: new bins, replacements, rejections;
/// each group by descending delta, ties by sample order.
pub fn rank_feedback(feedback: &RankedFeedback) -> Vec<usize> {
    let tier = |k: OutcomeKind| match k {
        OutcomeKind::NewBin => 0,
        OutcomeKind::Replaced => 1,
        OutcomeKind::Rejected => 2,
    };
    let mut order: Vec<usize> = (0..feedback.entries.len()).collect();
    order.sort_by(|&a, &b| {
        let (oa, ob) = (&feedback.entries[a].1, &feedback.entries[b].1);
        tier(oa.kind)
            .cmp(&tier(ob.kind))
            .then(ob.score_delta.total_cmp(&oa.score_delta))
    });
    order
}

/// Standard CMA-ES learning rates for dimension `d` and weights `w`.
struct Strategy {
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(d: usize, parents: usize) -> Self {
        let n = d as f64;
        // w_i ∝ ln(mu + 1/2) - ln(i), normalized to sum 1
        let raw: Vec<f64> = (1..=parents)
            .map(|i| (parents as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        // c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        // d_sigma = 1 + 2 max(0, sqrt((mu_eff - 1)/(n + 1)) - 1) + c_sigma
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        // c_c = (4 + mu_eff/n) / (n + 4 + 2 mu_eff/n)
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        // c_1 = 2 / ((n + 1.3)^2 + mu_eff)
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        // c_mu = min(1 - c_1, 2 (mu_eff - 2 + 1/mu_eff) / ((n + 2)^2 + mu_eff))
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        // E||N(0, I)|| ≈ sqrt(n) (1 - 1/(4n) + 1/(21 n^2))
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu: c_mu.max(0.0),
            chi_n,
        }
    }
}

/// A CMA-ES distribution driven by archive-improvement feedback.
#[derive(Debug, Clone)]
pub struct ImprovementEmitter {
    state: EmitterState,
    bounds: Vec<Bound>,
    initial_sigma: f64,
    rng: ChaCha8Rng,
    pending: usize,
}

impl ImprovementEmitter {
    pub const DEFAULT_BATCH: usize = 200;

    /// Initial mean uniform in bounds, `sigma0 = 0.1 * mean parameter width`.
    pub fn new(bounds: Vec<Bound>, batch_size: usize, seed: u64) -> Self {
        let width = bounds.iter().map(Bound::width).sum::<f64>() / bounds.len().max(1) as f64;
        Self::with_sigma(bounds, batch_size, 0.1 * width, seed)
    }

    pub fn with_sigma(bounds: Vec<Bound>, batch_size: usize, sigma0: f64, seed: u64) -> Self {
        assert!(batch_size > 0, "batch size must be positive");
        assert!(sigma0 > 0.0, "initial step size must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = DVector::from_vec(uniform_genome(&bounds, &mut rng).0);
        Self {
            state: EmitterState::fresh(mean, sigma0, batch_size, 0),
            bounds,
            initial_sigma: sigma0,
            rng,
            pending: 0,
        }
    }

    pub fn state(&self) -> &EmitterState {
        &self.state
    }

    pub fn restarts(&self) -> usize {
        self.state.restarts
    }

    pub fn batch_size(&self) -> usize {
        self.state.batch_size
    }

    /// Override the step size, e.g. to probe the degenerate limit.
    pub fn set_sigma(&mut self, sigma: f64) {
        assert!(sigma > 0.0);
        self.state.sigma = sigma;
    }

    /// Draws `batch_size` samples from `N(mean, sigma^2 C)`, clipped to bounds.
    pub fn ask(&mut self) -> Vec<Genome> {
        let d = self.state.dimension();
        let bd = &self.state.eigvecs * DMatrix::from_diagonal(&self.state.eigvals_sqrt);
        let batch = (0..self.state.batch_size)
            .map(|_| {
                let z = DVector::from_fn(d, |_, _| self.rng.sample::<f64, _>(StandardNormal));
                let x = &self.state.mean + (&bd * z) * self.state.sigma;
                Genome(x.as_slice().to_vec()).clipped(&self.bounds)
            })
            .collect();
        self.pending = self.state.batch_size;
        batch
    }

    /// Updates the distribution from the archive outcomes of the last batch.
    /// `elites` are restart candidates for the mean.
    pub fn tell(&mut self, feedback: &RankedFeedback, elites: &[&Genome]) {
        debug_assert_eq!(feedback.entries.len(), self.pending, "feedback must cover the last batch");
        self.pending = 0;
        let order = rank_feedback(feedback);
        let parents: Vec<&Genome> = order
            .iter()
            .map(|&i| &feedback.entries[i])
            .filter(|(_, o)| o.improved())
            .map(|(g, _)| g)
            .collect();
        if parents.is_empty() {
            self.restart(elites);
            return;
        }
        self.update(&parents);
        if !self.state.is_healthy() || !self.state.decompose() || !self.sigma_in_range() {
            self.restart(elites);
        }
    }

    fn sigma_in_range(&self) -> bool {
        let s = self.state.sigma / self.initial_sigma;
        (1e-12..=1e8).contains(&s)
    }

    fn update(&mut self, parents: &[&Genome]) {
        let st = &mut self.state;
        let d = st.dimension();
        let n = d as f64;
        let strat = Strategy::new(d, parents.len());
        let old_mean = st.mean.clone();
        let sigma = st.sigma;

        let steps: Vec<DVector<f64>> = parents
            .iter()
            .map(|g| (DVector::from_column_slice(g.as_slice()) - &old_mean) / sigma)
            .collect();
        let mut y_w = DVector::zeros(d);
        for (w, y) in strat.weights.iter().zip(&steps) {
            y_w += y * *w;
        }
        st.mean = &old_mean + &y_w * sigma;

        // C^{-1/2} = B D^{-1} B^T
        let inv_d = st.eigvals_sqrt.map(|v| 1.0 / v);
        let c_inv_sqrt = &st.eigvecs * DMatrix::from_diagonal(&inv_d) * st.eigvecs.transpose();

        let cs = strat.c_sigma;
        st.path_sigma = &st.path_sigma * (1.0 - cs) + (&c_inv_sqrt * &y_w) * (cs * (2.0 - cs) * strat.mu_eff).sqrt();

        let gen = (st.generation + 1) as f64;
        let ps_norm = st.path_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gen)).sqrt() < (1.4 + 2.0 / (n + 1.0)) * strat.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };

        let cc = strat.c_c;
        st.path_c = &st.path_c * (1.0 - cc) + &y_w * (h * (cc * (2.0 - cc) * strat.mu_eff).sqrt());

        // C <- (1 - c1 - cmu) C + c1 (pc pc^T + (1 - h) cc (2 - cc) C) + cmu sum w_i y_i y_i^T
        let mut rank_mu = DMatrix::zeros(d, d);
        for (w, y) in strat.weights.iter().zip(&steps) {
            rank_mu += (y * y.transpose()) * *w;
        }
        let rank_one = &st.path_c * st.path_c.transpose();
        let c1 = strat.c_1;
        let cmu = strat.c_mu;
        st.covariance = &st.covariance * (1.0 - c1 - cmu)
            + (rank_one + &st.covariance * ((1.0 - h) * cc * (2.0 - cc))) * c1
            + rank_mu * cmu;
        st.covariance = (&st.covariance + st.covariance.transpose()) * 0.5;

        // sigma <- sigma exp((cs/ds)(||ps|| / chi_n - 1))
        st.sigma *= ((cs / strat.d_sigma) * (ps_norm / strat.chi_n - 1.0)).exp();
        st.generation += 1;
    }

    fn restart(&mut self, elites: &[&Genome]) {
        let mean = match elites.choose(&mut self.rng) {
            Some(g) => g.as_slice().to_vec(),
            None => uniform_genome(&self.bounds, &mut self.rng).0,
        };
        let restarts = self.state.restarts + 1;
        self.state = EmitterState::fresh(
            DVector::from_vec(mean),
            self.initial_sigma,
            self.state.batch_size,
            restarts,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(d: usize) -> Vec<Bound> {
        vec![Bound::new(-2.0, 2.0); d]
    }

    fn outcome(kind: OutcomeKind, delta: f64) -> InsertOutcome {
        InsertOutcome::new(kind, delta)
    }

    fn feedback(batch: &[Genome], f: impl Fn(usize, &Genome) -> InsertOutcome) -> RankedFeedback {
        RankedFeedback {
            entries: batch.iter().enumerate().map(|(i, g)| (g.clone(), f(i, g))).collect(),
        }
    }

    #[test]
    fn batch_shape_and_bounds() {
        let mut e = ImprovementEmitter::new(bounds(10), 200, 3);
        let batch = e.ask();
        assert_eq!(batch.len(), 200);
        assert!(batch.iter().all(|g| g.len() == 10 && g.within(&bounds(10))));
    }

    #[test]
    fn tiny_sigma_collapses_to_mean() {
        let mut e = ImprovementEmitter::new(bounds(4), 20, 3);
        e.set_sigma(1e-300);
        let mean = e.state().mean.as_slice().to_vec();
        for g in e.ask() {
            assert_eq!(g.0, mean);
        }
    }

    #[test]
    fn identical_state_gives_identical_batches() {
        let mut a = ImprovementEmitter::new(bounds(5), 30, 11);
        let mut b = a.clone();
        assert_eq!(a.ask(), b.ask());
        let mut c = ImprovementEmitter::new(bounds(5), 30, 11);
        let mut d = ImprovementEmitter::new(bounds(5), 30, 11);
        assert_eq!(c.ask(), d.ask());
    }

    #[test]
    fn all_rejected_triggers_restart() {
        let mut e = ImprovementEmitter::new(bounds(3), 10, 5);
        let batch = e.ask();
        let elite = Genome(vec![1.5, -1.5, 0.25]);
        e.tell(&feedback(&batch, |_, _| outcome(OutcomeKind::Rejected, -1.0)), &[&elite]);
        assert_eq!(e.restarts(), 1);
        assert_eq!(e.state().mean.as_slice(), elite.as_slice());
        assert_eq!(e.state().sigma, 0.4);
        assert_eq!(e.state().covariance, DMatrix::identity(3, 3));
        assert_eq!(e.state().generation, 0);
    }

    #[test]
    fn two_tier_ranking() {
        let g = Genome(vec![0.0]);
        let fb = RankedFeedback {
            entries: vec![
                (g.clone(), outcome(OutcomeKind::Replaced, 7.0)),
                (g.clone(), outcome(OutcomeKind::Rejected, 100.0)),
                (g.clone(), outcome(OutcomeKind::NewBin, 3.0)),
                (g.clone(), outcome(OutcomeKind::Replaced, 9.0)),
                (g.clone(), outcome(OutcomeKind::NewBin, 5.0)),
            ],
        };
        assert_eq!(rank_feedback(&fb), vec![4, 2, 3, 0, 1]);
    }

    #[test]
    fn update_keeps_state_valid() {
        let mut e = ImprovementEmitter::new(bounds(6), 40, 9);
        for step in 0..30 {
            let batch = e.ask();
            // reward samples close to a target point; first half improve
            let target = [1.0, -0.5, 0.3, 0.0, 1.2, -1.0];
            let fb = feedback(&batch, |i, g| {
                let d: f64 = g.0.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
                if i % 2 == step % 2 {
                    outcome(OutcomeKind::Replaced, -d)
                } else {
                    outcome(OutcomeKind::Rejected, -d)
                }
            });
            e.tell(&fb, &[]);
            let s = e.state();
            assert!(s.sigma > 0.0 && s.sigma.is_finite());
            let c = &s.covariance;
            for i in 0..6 {
                for j in 0..6 {
                    assert!((c[(i, j)] - c[(j, i)]).abs() <= 1e-9);
                }
            }
            assert!(SymmetricEigen::new(c.clone()).eigenvalues.iter().all(|&v| v > 0.0));
        }
        assert_eq!(e.restarts(), 0);
    }

    #[test]
    fn mean_moves_toward_improving_samples() {
        let mut e = ImprovementEmitter::new(bounds(2), 50, 21);
        let target = [1.5, 1.5];
        let dist = |m: &[f64]| ((m[0] - target[0]).powi(2) + (m[1] - target[1]).powi(2)).sqrt();
        let start = dist(e.state().mean.as_slice());
        for _ in 0..40 {
            let batch = e.ask();
            let mut d: Vec<(usize, f64)> = batch.iter().enumerate().map(|(i, g)| (i, dist(&g.0))).collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1));
            let good: Vec<usize> = d[..10].iter().map(|p| p.0).collect();
            let fb = feedback(&batch, |i, g| {
                if good.contains(&i) {
                    outcome(OutcomeKind::Replaced, -dist(&g.0))
                } else {
                    outcome(OutcomeKind::Rejected, -dist(&g.0))
                }
            });
            e.tell(&fb, &[]);
        }
        assert!(dist(e.state().mean.as_slice()) < 0.1 * start.max(0.1));
    }
}
