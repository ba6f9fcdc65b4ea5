//! Arrival sources and per-flow results shared by all backends.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::netmodel::{EventRecord, FlowId, FlowSpec, NodeId};

/// Supplies flows to a simulator in arrival order.
///
/// Simulators call [`ArrivalSource::on_completion`] synchronously at every
/// departure, so a closed-loop source can release new flows whose arrival
/// time is the completion timestamp.
pub trait ArrivalSource {
    /// Arrival time of the next ready flow.
    fn peek_time(&self) -> Option<f64>;

    /// Removes and returns the next ready flow.
    fn next_flow(&mut self) -> Option<FlowSpec>;

    /// Completion callback.
    fn on_completion(&mut self, _flow: FlowId, _time: f64) {}
}

/// Open-loop source over a precomputed schedule.
#[derive(Debug, Clone)]
pub struct ScheduleSource {
    flows: Vec<FlowSpec>,
    next: usize,
}

impl ScheduleSource {
    /// `flows` must already be sorted by arrival time; simulators reject
    /// out-of-order arrivals.
    pub fn new(flows: Vec<FlowSpec>) -> Self {
        Self { flows, next: 0 }
    }
}

impl ArrivalSource for ScheduleSource {
    fn peek_time(&self) -> Option<f64> {
        self.flows.get(self.next).map(|f| f.arrival)
    }

    fn next_flow(&mut self) -> Option<FlowSpec> {
        let f = self.flows.get(self.next).cloned();
        if f.is_some() {
            self.next += 1;
        }
        f
    }
}

/// Outcome of one completed flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    pub arrival: f64,
    pub fct: f64,
    pub ideal: f64,
}

impl FlowResult {
    pub fn slowdown(&self) -> f64 {
        self.fct / self.ideal
    }
}

/// Per-flow results (in completion order) and the processed event log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub flows: Vec<FlowResult>,
    pub events: Vec<EventRecord>,
}

/// An arrival source produced a flow earlier than the simulation clock.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("flow {flow} arrives at {time} before the clock {clock}")]
pub struct OrderingError {
    pub flow: FlowId,
    pub time: f64,
    pub clock: f64,
}
