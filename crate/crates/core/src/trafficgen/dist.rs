use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Pareto};
use serde::{Deserialize, Serialize};

use super::TrafficError;
use crate::math::{ln, round};

/// Tail index of the Pareto size distribution.
pub const PARETO_SHAPE: f64 = 1.5;
/// Shape of the log-normal size distribution.
const LOGNORMAL_SIZE_SIGMA: f64 = 1.0;

/// Flow-size distribution. The parametric ones have mean `theta`; the
/// empirical one ignores it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SizeDist {
    Exponential,
    Pareto,
    /// Normal with standard deviation `theta/2`, clamped to at least 1 byte.
    Gaussian,
    LogNormal,
    Empirical(EmpiricalCdf),
}

impl SizeDist {
    pub(super) fn validate(&self) -> Result<(), TrafficError> {
        match self {
            SizeDist::Empirical(c) => EmpiricalCdf::new(c.points.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Expected size in bytes (before rounding).
    pub fn mean(&self, theta: f64) -> f64 {
        match self {
            SizeDist::Empirical(c) => c.mean(),
            _ => theta,
        }
    }

    /// One size in bytes, at least 1.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> u64 {
        let x = match self {
            SizeDist::Exponential => Exp::new(1.0 / theta).expect("theta > 0").sample(rng),
            SizeDist::Pareto => {
                let scale = theta * (PARETO_SHAPE - 1.0) / PARETO_SHAPE;
                Pareto::new(scale, PARETO_SHAPE).expect("theta > 0").sample(rng)
            }
            SizeDist::Gaussian => Normal::new(theta, theta / 2.0).expect("theta > 0").sample(rng),
            SizeDist::LogNormal => {
                let s = LOGNORMAL_SIZE_SIGMA;
                LogNormal::new(ln(theta) - s * s / 2.0, s).expect("theta > 0").sample(rng)
            }
            SizeDist::Empirical(c) => c.quantile(rng.random::<f64>()),
        };
        round(x).max(1.0) as u64
    }
}

/// Piecewise-linear CDF through `(size_bytes, cumulative_probability)`
/// points. Mass below the first point sits at the first size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub points: Vec<(f64, f64)>,
}

impl EmpiricalCdf {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, TrafficError> {
        if points.is_empty() {
            return Err(TrafficError::BadCdf("no points"));
        }
        for &(x, p) in &points {
            if !(x > 0.0 && x.is_finite()) {
                return Err(TrafficError::BadCdf("sizes must be positive"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(TrafficError::BadCdf("probabilities must lie in [0, 1]"));
            }
        }
        if points.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
            return Err(TrafficError::BadCdf("points must be non-decreasing"));
        }
        let last = points[points.len() - 1].1;
        if (last - 1.0).abs() > 1e-9 {
            return Err(TrafficError::BadCdf("total mass must be 1"));
        }
        Ok(Self { points })
    }

    /// Two whitespace-separated columns per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TrafficError> {
        let mut points = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(TrafficError::BadCdf("expected two columns per line"));
            };
            let (Ok(x), Ok(p)) = (a.parse::<f64>(), b.parse::<f64>()) else {
                return Err(TrafficError::BadCdf("unparsable number"));
            };
            points.push((x, p));
        }
        Self::new(points)
    }

    pub fn mean(&self) -> f64 {
        let (x0, p0) = self.points[0];
        let mut m = x0 * p0;
        for w in self.points.windows(2) {
            let ((xa, pa), (xb, pb)) = (w[0], w[1]);
            m += (pb - pa) * (xa + xb) / 2.0;
        }
        m
    }

    /// Inverse CDF at `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let pts = &self.points;
        if u <= pts[0].1 {
            return pts[0].0;
        }
        let k = pts.partition_point(|&(_, p)| p < u).min(pts.len() - 1);
        let ((xa, pa), (xb, pb)) = (pts[k - 1], pts[k]);
        if pb <= pa {
            return xb;
        }
        xa + (u - pa) / (pb - pa) * (xb - xa)
    }
}
