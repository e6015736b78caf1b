//! Feature-grid geometry: binning and Chebyshev neighborhoods.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::FeatureVector;

/// Multi-index of a grid cell. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinIndex(pub Vec<usize>);

impl BinIndex {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for BinIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dims: Vec<usize>,
    ranges: Vec<(f64, f64)>,
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, ranges: Vec<(f64, f64)>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("grid needs at least one feature axis".into()));
        }
        if dims.len() != ranges.len() {
            return Err(Error::Config(format!(
                "grid has {} bin counts but {} ranges",
                dims.len(),
                ranges.len()
            )));
        }
        if let Some(axis) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Config(format!("grid axis {axis} has zero bins")));
        }
        for (axis, &(lo, hi)) in ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "grid axis {axis} range [{lo}, {hi}] is not a finite interval with lo < hi"
                )));
            }
        }
        Ok(Self { dims, ranges })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn axes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_bins(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn contains(&self, idx: &BinIndex) -> bool {
        idx.0.len() == self.dims.len() && idx.0.iter().zip(&self.dims).all(|(i, d)| i < d)
    }

    /// Sub-grid over two axes, used when flattening.
    pub fn project(&self, i: usize, j: usize) -> Result<GridSpec> {
        if i == j || i >= self.axes() || j >= self.axes() {
            return Err(Error::Config(format!(
                "invalid axis pair ({i}, {j}) for a {}-axis grid",
                self.axes()
            )));
        }
        GridSpec::new(
            vec![self.dims[i], self.dims[j]],
            vec![self.ranges[i], self.ranges[j]],
        )
    }

    /// Bin of a feature vector; out-of-range values clamp to the edge bins.
    pub fn bin_index(&self, features: &FeatureVector) -> Result<BinIndex> {
        if features.len() != self.dims.len() {
            return Err(Error::Config(format!(
                "feature vector has {} entries, grid has {} axes",
                features.len(),
                self.dims.len()
            )));
        }
        let mut out = Vec::with_capacity(self.dims.len());
        for (axis, (&f, (&bins, &(lo, hi)))) in features
            .as_slice()
            .iter()
            .zip(self.dims.iter().zip(&self.ranges))
            .enumerate()
        {
            if !f.is_finite() {
                return Err(Error::Evaluation(format!(
                    "feature {axis} is not finite ({f})"
                )));
            }
            let t = ((f - lo) / (hi - lo) * bins as f64).floor();
            let idx = if t < 0.0 {
                0
            } else {
                (t as usize).min(bins - 1)
            };
            out.push(idx);
        }
        Ok(BinIndex(out))
    }

    /// All bins other than `center` within Chebyshev distance `radius`,
    /// truncated at the grid edges, in lexicographic order.
    pub fn neighbors_within(&self, center: &BinIndex, radius: usize) -> Vec<BinIndex> {
        debug_assert!(self.contains(center));
        if radius == 0 {
            return Vec::new();
        }
        let lows: Vec<usize> = center.0.iter().map(|&c| c.saturating_sub(radius)).collect();
        let highs: Vec<usize> = center
            .0
            .iter()
            .zip(&self.dims)
            .map(|(&c, &d)| (c + radius).min(d - 1))
            .collect();
        let mut out = Vec::new();
        let mut cur = lows.clone();
        loop {
            if cur != center.0 {
                out.push(BinIndex(cur.clone()));
            }
            // odometer increment, last axis fastest
            let mut axis = cur.len();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < highs[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lows[axis];
            }
        }
    }

    /// Every bin of the grid in lexicographic order.
    pub fn all_bins(&self) -> Vec<BinIndex> {
        let mut out = Vec::with_capacity(self.total_bins());
        let mut cur = vec![0usize; self.dims.len()];
        loop {
            out.push(BinIndex(cur.clone()));
            let mut axis = cur.len();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] + 1 < self.dims[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = 0;
            }
        }
    }
}
