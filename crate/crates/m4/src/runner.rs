//! Runs a prepared scenario on one backend and times the simulation.

use std::time::Instant;

use m4_core::engine::m4_run;
use m4_core::fluid;
use m4_core::nn::ModelWeights;
use m4_core::packet::{self, GroundTruthTrace, PacketConfig};
use m4_core::source::{ArrivalSource, RunOutput, ScheduleSource};
use m4_core::trafficgen::{ClosedLoopSource, ThroughputRecord};

use crate::error::{Error, Result};
use crate::record::RunRecord;
use crate::scenario::{Arrivals, Backend, Prepared};

/// The packet backend's full trace, for dataset building.
pub fn packet_trace(prep: &Prepared, cfg: PacketConfig) -> Result<(GroundTruthTrace, Option<ThroughputRecord>)> {
    match &prep.arrivals {
        Arrivals::Open(flows) => {
            let tr = packet::run(&prep.topo, &mut ScheduleSource::new(flows.clone()), cfg)?;
            Ok((tr, None))
        }
        Arrivals::Closed(spec) => {
            let mut src = ClosedLoopSource::new(spec, &prep.topo)?;
            let tr = packet::run(&prep.topo, &mut src, cfg)?;
            Ok((tr, Some(src.report())))
        }
    }
}

fn simulate<S: ArrivalSource>(
    prep: &Prepared,
    backend: Backend,
    weights: Option<&ModelWeights>,
    src: &mut S,
) -> Result<RunOutput> {
    Ok(match backend {
        Backend::Fluid => fluid::run(&prep.topo, src)?,
        Backend::Packet => {
            let tr = packet::run(&prep.topo, src, PacketConfig::from_network(&prep.net)?)?;
            RunOutput {
                flows: tr.flows,
                events: tr.events,
            }
        }
        Backend::Learned => {
            let w = weights.ok_or(Error::MissingWeights)?;
            m4_run(src, &prep.topo, &prep.net, w, false)?.run
        }
    })
}

/// Runs `prep` on `backend`. Wall time covers the simulation only.
pub fn run_prepared(prep: &Prepared, backend: Backend, weights: Option<&ModelWeights>) -> Result<RunRecord> {
    if backend == Backend::Learned && weights.is_none() {
        return Err(Error::MissingWeights);
    }
    match &prep.arrivals {
        Arrivals::Open(flows) => {
            let mut src = ScheduleSource::new(flows.clone());
            let t0 = Instant::now();
            let out = simulate(prep, backend, weights, &mut src)?;
            let wall = t0.elapsed().as_secs_f64();
            Ok(RunRecord::from_output(&prep.id, backend, out, wall))
        }
        Arrivals::Closed(spec) => {
            let mut src = ClosedLoopSource::new(spec, &prep.topo)?;
            let t0 = Instant::now();
            let out = simulate(prep, backend, weights, &mut src)?;
            let wall = t0.elapsed().as_secs_f64();
            let mut rec = RunRecord::from_output(&prep.id, backend, out, wall);
            rec.meta.throughput = Some(src.report());
            Ok(rec)
        }
    }
}
