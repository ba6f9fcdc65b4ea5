//! Weight bundle files and probe files.
//!
//! A probe file is JSON `{"input": ProbeInput, "expected": ProbeOutput}`.
//! A bundle passes the probe when every runtime head output `got` satisfies
//! `|got − expected| ≤ tol · max(1, |expected|)`.

use std::fs;
use std::path::Path;

use m4_core::engine::{probe_forward, ProbeInput, ProbeOutput};
use m4_core::nn::{ModelWeights, WeightBundle};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, Error, Result};

pub const PROBE_TOLERANCE: f64 = 1e-5;

pub fn load_bundle(path: &Path) -> Result<WeightBundle> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(WeightBundle::decode(&bytes)?)
}

pub fn load_weights(path: &Path) -> Result<ModelWeights> {
    Ok(ModelWeights::from_bundle(&load_bundle(path)?)?)
}

pub fn save_bundle(path: &Path, bundle: &WeightBundle) -> Result<()> {
    fs::write(path, bundle.encode()).map_err(io_err(path))
}

pub fn save_weights(path: &Path, w: &ModelWeights) -> Result<()> {
    save_bundle(path, &w.to_bundle())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFile {
    pub input: ProbeInput,
    pub expected: ProbeOutput,
}

impl ProbeFile {
    /// Records the runtime's own outputs for `input`.
    pub fn generate(w: &ModelWeights, input: ProbeInput) -> Result<Self> {
        let expected = probe_forward(w, &input)?;
        Ok(ProbeFile { input, expected })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(json_err(path))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(json_err(path))?;
        fs::write(path, text + "\n").map_err(io_err(path))
    }

    /// Runs the runtime forward and compares every head output.
    pub fn check(&self, w: &ModelWeights, tol: f64) -> Result<ProbeOutput> {
        let got = probe_forward(w, &self.input)?;
        let close = |field: String, g: f64, e: f64| {
            if (g - e).abs() <= tol * e.abs().max(1.0) {
                Ok(())
            } else {
                Err(Error::ProbeMismatch {
                    field,
                    got: g,
                    expected: e,
                })
            }
        };
        close("slowdown".into(), got.slowdown, self.expected.slowdown)?;
        close("remaining".into(), got.remaining, self.expected.remaining)?;
        if got.queue.len() != self.expected.queue.len() {
            return Err(Error::ProbeMismatch {
                field: "queue length".into(),
                got: got.queue.len() as f64,
                expected: self.expected.queue.len() as f64,
            });
        }
        for (i, (&g, &e)) in got.queue.iter().zip(&self.expected.queue).enumerate() {
            close(format!("queue[{i}]"), g, e)?;
        }
        Ok(got)
    }
}
