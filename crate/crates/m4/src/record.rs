//! Per-run results and their directory layout.
//!
//! A run directory holds three files:
//!
//! - `run.json`: [`RunMeta`].
//! - `flows.jsonl`: one [`FlowRecord`] per line, ascending id.
//! - `events.jsonl`: one event per line in processing order, fields
//!   `time`, `kind`, `flow`.
//!
//! Field order inside each line follows the struct declarations.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use m4_core::netmodel::EventRecord;
use m4_core::source::RunOutput;
use m4_core::trafficgen::ThroughputRecord;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, Error, Result};
use crate::scenario::Backend;

pub const META_FILE: &str = "run.json";
pub const FLOWS_FILE: &str = "flows.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub size: u64,
    pub arrival: f64,
    pub fct: f64,
    pub ideal: f64,
    pub slowdown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: String,
    pub backend: Backend,
    pub n_flows: usize,
    pub n_events: usize,
    /// Simulation time only; excludes workload sampling and file IO.
    pub wall_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub flows: Vec<FlowRecord>,
    pub events: Vec<EventRecord>,
}

impl RunRecord {
    pub fn from_output(scenario: &str, backend: Backend, out: RunOutput, wall_s: f64) -> Self {
        let mut flows: Vec<FlowRecord> = out
            .flows
            .iter()
            .map(|f| FlowRecord {
                id: f.id.0,
                src: f.src.0,
                dst: f.dst.0,
                size: f.size,
                arrival: f.arrival,
                fct: f.fct,
                ideal: f.ideal,
                slowdown: f.slowdown(),
            })
            .collect();
        flows.sort_by_key(|f| f.id);
        RunRecord {
            meta: RunMeta {
                scenario: scenario.to_string(),
                backend,
                n_flows: flows.len(),
                n_events: out.events.len(),
                wall_s,
                throughput: None,
            },
            flows,
            events: out.events,
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let meta = dir.join(META_FILE);
        let text = serde_json::to_string_pretty(&self.meta).map_err(json_err(&meta))?;
        fs::write(&meta, text + "\n").map_err(io_err(&meta))?;
        write_jsonl(&dir.join(FLOWS_FILE), &self.flows)?;
        write_jsonl(&dir.join(EVENTS_FILE), &self.events)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: RunMeta = serde_json::from_str(&text).map_err(json_err(&meta_path))?;
        let flows: Vec<FlowRecord> = read_jsonl(&dir.join(FLOWS_FILE))?;
        let events = read_jsonl(&dir.join(EVENTS_FILE))?;
        if flows.len() != meta.n_flows {
            return Err(Error::FlowSetMismatch(format!(
                "{}: run.json lists {} flows, flows.jsonl has {}",
                dir.display(),
                meta.n_flows,
                flows.len()
            )));
        }
        Ok(RunRecord { meta, flows, events })
    }

    /// True when `dir` looks like a run directory.
    pub fn is_run_dir(dir: &Path) -> bool {
        dir.join(META_FILE).is_file()
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(json_err(path))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_err(path)))
        .collect()
}
