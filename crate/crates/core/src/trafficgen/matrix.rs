use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TrafficError;
use crate::netmodel::Topology;

/// Rack-to-rack traffic weights; `weights[i][j]` is the relative share of
/// flows from rack `i` to rack `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrafficMatrix {
    pub weights: Vec<Vec<f64>>,
}

impl TrafficMatrix {
    /// All distinct rack pairs equally likely.
    pub fn uniform(n_racks: usize) -> Self {
        let weights = (0..n_racks)
            .map(|i| (0..n_racks).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self { weights }
    }

    /// Uniform, except pairs touching rack `hot` weigh `factor` times more.
    pub fn hotspot(n_racks: usize, hot: usize, factor: f64) -> Self {
        let mut m = Self::uniform(n_racks);
        for i in 0..n_racks {
            for j in 0..n_racks {
                if i != j && (i == hot || j == hot) {
                    m.weights[i][j] *= factor;
                }
            }
        }
        m
    }

    /// Whitespace-separated rows of weights; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TrafficError> {
        let mut weights = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            weights.push(row.map_err(|_| TrafficError::BadMatrix("unparsable weight"))?);
        }
        let m = Self { weights };
        m.check_shape(m.weights.len())?;
        Ok(m)
    }

    fn check_shape(&self, n: usize) -> Result<(), TrafficError> {
        if self.weights.len() != n || self.weights.iter().any(|r| r.len() != n) {
            return Err(TrafficError::BadMatrix("must be square with one row per rack"));
        }
        if self.weights.iter().flatten().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(TrafficError::BadMatrix("weights must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn validate(&self, topo: &Topology) -> Result<(), TrafficError> {
        self.check_shape(topo.n_racks())?;
        if self.total() <= 0.0 {
            return Err(TrafficError::BadMatrix("all weights are zero"));
        }
        for (i, row) in self.weights.iter().enumerate() {
            if row[i] > 0.0 && topo.hosts_in_rack(i).len() < 2 {
                return Err(TrafficError::BadMatrix("intra-rack weight on a single-host rack"));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    /// Positive entries `(src_rack, dst_rack, weight)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(move |(j, &w)| (i, j, w))
        })
    }

    pub fn n_racks(&self) -> usize {
        self.weights.len()
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            weights: vec![vec![0.0; n]; n],
        }
    }
}
