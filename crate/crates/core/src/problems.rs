//! Benchmark problems: shifted-center Rastrigin pair, ZDT3, DTLZ3 and a
//! constrained Rastrigin variant.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{canonicalize, Bound, Direction, EvaluatedSolution, FeatureVector, Genome, ProblemSpec};

/// Raw (non-canonical) evaluation output.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvaluation {
    pub objectives: Vec<f64>,
    pub features: Vec<f64>,
    pub violation: f64,
}

pub trait Problem: Send + Sync {
    fn spec(&self) -> &ProblemSpec;

    fn evaluate_raw(&self, x: &[f64]) -> RawEvaluation;

    /// Checks the genome, evaluates, and canonicalizes objectives.
    fn evaluate(&self, genome: &Genome) -> Result<EvaluatedSolution> {
        let spec = self.spec();
        if genome.len() != spec.genome_len() {
            return Err(Error::Precondition(format!(
                "{} expects {} parameters, got {}",
                spec.id,
                spec.genome_len(),
                genome.len()
            )));
        }
        if let Some((i, v)) = genome
            .as_slice()
            .iter()
            .enumerate()
            .find(|(i, v)| !spec.bounds[*i].contains(**v))
        {
            return Err(Error::Precondition(format!(
                "{}: parameter {i} = {v} outside [{}, {}]",
                spec.id, spec.bounds[i].lo, spec.bounds[i].hi
            )));
        }
        let raw = self.evaluate_raw(genome.as_slice());
        Ok(EvaluatedSolution {
            genome: genome.clone(),
            objectives: canonicalize(&raw.objectives, &spec.directions)?,
            features: FeatureVector(raw.features),
            violation: raw.violation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkId {
    RastriginMoo,
    Zdt3,
    Dtlz3,
    RastriginMooConstrained,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [
        BenchmarkId::RastriginMoo,
        BenchmarkId::Zdt3,
        BenchmarkId::Dtlz3,
        BenchmarkId::RastriginMooConstrained,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkId::RastriginMoo => "rastrigin_moo",
            BenchmarkId::Zdt3 => "zdt3",
            BenchmarkId::Dtlz3 => "dtlz3",
            BenchmarkId::RastriginMooConstrained => "rastrigin_moo_constrained",
        }
    }

    pub fn build(&self) -> Box<dyn Problem> {
        match self {
            BenchmarkId::RastriginMoo => Box::new(RastriginMoo::new()),
            BenchmarkId::Zdt3 => Box::new(Zdt3::new(30)),
            BenchmarkId::Dtlz3 => Box::new(Dtlz3::new(10, 5).expect("10 variables, 5 objectives")),
            BenchmarkId::RastriginMooConstrained => Box::new(RastriginMoo::constrained()),
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .iter()
            .copied()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = BenchmarkId::ALL.iter().map(|b| b.as_str()).collect();
                Error::Config(format!(
                    "unknown problem `{s}`; valid ids: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Two Rastrigin functions with centers `lambda[0]` and `lambda[1]`, made
/// positive by a constant offset of 200 and maximized. Features are the
/// first two parameters.
#[derive(Debug, Clone)]
pub struct RastriginMoo {
    spec: ProblemSpec,
    pub lambda: [f64; 2],
    constrained: bool,
}

impl RastriginMoo {
    pub const DIM: usize = 10;
    pub const OFFSET: f64 = 200.0;

    pub fn new() -> Self {
        Self::with_centers([0.0, 2.2])
    }

    /// Same objectives plus violation `max(0, x1 + x2)`.
    pub fn constrained() -> Self {
        let mut p = Self::new();
        p.constrained = true;
        p.spec.id = BenchmarkId::RastriginMooConstrained.as_str().into();
        p
    }

    pub fn with_centers(lambda: [f64; 2]) -> Self {
        Self {
            spec: ProblemSpec {
                id: BenchmarkId::RastriginMoo.as_str().into(),
                bounds: vec![Bound::new(-2.0, 2.0); Self::DIM],
                directions: vec![Direction::Maximize; 2],
                feature_ranges: vec![(-2.0, 2.0); 2],
            },
            lambda,
            constrained: false,
        }
    }

    fn objective(x: &[f64], center: f64) -> f64 {
        let s: f64 = x
            .iter()
            .map(|&xi| {
                let d = xi - center;
                d * d - 10.0 * (2.0 * PI * d).cos()
            })
            .sum();
        Self::OFFSET - s
    }
}

impl Default for RastriginMoo {
    fn default() -> Self {
        Self::new()
    }
}

impl Problem for RastriginMoo {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate_raw(&self, x: &[f64]) -> RawEvaluation {
        RawEvaluation {
            objectives: vec![Self::objective(x, self.lambda[0]), Self::objective(x, self.lambda[1])],
            features: vec![x[0], x[1]],
            violation: if self.constrained {
                (x[0] + x[1]).max(0.0)
            } else {
                0.0
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Zdt3 {
    spec: ProblemSpec,
}

impl Zdt3 {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "ZDT3 needs at least two variables");
        Self {
            spec: ProblemSpec {
                id: BenchmarkId::Zdt3.as_str().into(),
                bounds: vec![Bound::new(0.0, 1.0); n],
                directions: vec![Direction::Minimize; 2],
                feature_ranges: vec![(0.0, 1.0); 2],
            },
        }
    }

    /// Distance function; 1 on the Pareto-optimal set.
    pub fn g(x: &[f64]) -> f64 {
        let n = x.len();
        1.0 + 9.0 / (n - 1) as f64 * x[1..].iter().sum::<f64>()
    }

    pub fn h(f1: f64, g: f64) -> f64 {
        let r = f1 / g;
        1.0 - r.sqrt() - r * (10.0 * PI * f1).sin()
    }
}

impl Problem for Zdt3 {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate_raw(&self, x: &[f64]) -> RawEvaluation {
        let f1 = x[0];
        let g = Self::g(x);
        RawEvaluation {
            objectives: vec![f1, g * Self::h(f1, g)],
            features: vec![x[0], x[1]],
            violation: 0.0,
        }
    }
}

/// DTLZ3 with `n` variables and `m` objectives; the last `k = n - m + 1`
/// variables feed the multimodal distance function. Features are the 6th
/// and 7th parameters.
#[derive(Debug, Clone)]
pub struct Dtlz3 {
    spec: ProblemSpec,
    objectives: usize,
}

impl Dtlz3 {
    pub const FEATURE_AXES: [usize; 2] = [5, 6];

    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 2 || n < m || n < Self::FEATURE_AXES[1] + 1 {
            return Err(Error::Config(format!(
                "DTLZ3 needs 2 <= objectives <= variables and at least 7 variables, got n={n}, m={m}"
            )));
        }
        Ok(Self {
            spec: ProblemSpec {
                id: BenchmarkId::Dtlz3.as_str().into(),
                bounds: vec![Bound::new(0.0, 1.0); n],
                directions: vec![Direction::Minimize; m],
                feature_ranges: vec![(0.0, 1.0); 2],
            },
            objectives: m,
        })
    }

    pub fn k(&self) -> usize {
        self.spec.genome_len() - self.objectives + 1
    }

    /// Distance function over the trailing `k` variables; 0 iff all equal 0.5.
    pub fn g(&self, x: &[f64]) -> f64 {
        let tail = &x[self.objectives - 1..];
        let s: f64 = tail
            .iter()
            .map(|&xi| {
                let d = xi - 0.5;
                d * d - (20.0 * PI * d).cos()
            })
            .sum();
        100.0 * (tail.len() as f64 + s)
    }
}

impl Problem for Dtlz3 {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate_raw(&self, x: &[f64]) -> RawEvaluation {
        let m = self.objectives;
        let scale = 1.0 + self.g(x);
        let half_pi = PI / 2.0;
        let objectives = (0..m)
            .map(|obj| {
                // objective `obj` (0-based) multiplies cos over the first
                // m-1-obj position variables and, unless obj == 0, a sine of the next
                let cos_len = m - 1 - obj;
                let mut f = scale;
                for &xi in &x[..cos_len] {
                    f *= (xi * half_pi).cos();
                }
                if obj > 0 {
                    f *= (x[cos_len] * half_pi).sin();
                }
                f
            })
            .collect();
        RawEvaluation {
            objectives,
            features: Self::FEATURE_AXES.iter().map(|&i| x[i]).collect(),
            violation: 0.0,
        }
    }
}
