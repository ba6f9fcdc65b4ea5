//! Max-min fair fluid simulator.
//!
//! Between events every active flow drains at its max-min fair rate; rates
//! are recomputed over all active flows at every arrival and departure. The
//! model has no queues and no propagation delay, so FCTs are pure
//! bandwidth-sharing times.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::netmodel::{ideal_fct, EventKind, EventRecord, FlowId, FlowSpec, LinkId, Topology};
use crate::source::{ArrivalSource, FlowResult, OrderingError, RunOutput};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluidError {
    #[error("flow at position {0} has an empty path")]
    EmptyPath(usize),
    #[error("flow at position {index} uses unknown link {link}")]
    UnknownLink { index: usize, link: LinkId },
    #[error(transparent)]
    Ordering(#[from] OrderingError),
}

/// Max-min fair rates by progressive filling.
///
/// `paths[i]` is the link list of flow `i`; `capacity[l]` is the capacity of
/// link `l` in bits per second. Repeatedly finds the link with the smallest
/// fair share `remaining capacity / unfrozen flows`, freezes its unfrozen
/// flows at that share, and charges the share to every link they cross.
pub fn maxmin_rates<P: AsRef<[LinkId]>>(
    paths: &[P],
    capacity: &[f64],
) -> Result<Vec<f64>, FluidError> {
    let n_links = capacity.len();
    let mut on_link: Vec<Vec<usize>> = vec![Vec::new(); n_links];
    for (i, p) in paths.iter().enumerate() {
        let p = p.as_ref();
        if p.is_empty() {
            return Err(FluidError::EmptyPath(i));
        }
        for &l in p {
            if l.index() >= n_links {
                return Err(FluidError::UnknownLink { index: i, link: l });
            }
            on_link[l.index()].push(i);
        }
    }
    let mut remaining: Vec<f64> = capacity.to_vec();
    let mut unfrozen: Vec<usize> = on_link.iter().map(Vec::len).collect();
    let mut active_links: Vec<usize> = (0..n_links).filter(|&l| unfrozen[l] > 0).collect();
    let mut rate = vec![0.0; paths.len()];
    let mut frozen = vec![false; paths.len()];

    while !active_links.is_empty() {
        let mut best = active_links[0];
        let mut best_share = remaining[best] / unfrozen[best] as f64;
        for &l in &active_links[1..] {
            let share = remaining[l] / unfrozen[l] as f64;
            if share < best_share {
                best = l;
                best_share = share;
            }
        }
        let share = best_share.max(0.0);
        for &i in &on_link[best] {
            if frozen[i] {
                continue;
            }
            frozen[i] = true;
            rate[i] = share;
            for &l in paths[i].as_ref() {
                remaining[l.index()] -= share;
                unfrozen[l.index()] -= 1;
            }
        }
        active_links.retain(|&l| unfrozen[l] > 0);
    }
    Ok(rate)
}

/// One active flow of the fluid model.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidFlow {
    pub spec: FlowSpec,
    /// Bytes not yet transmitted.
    pub remaining: f64,
    /// Bits per second.
    pub rate: f64,
}

impl FluidFlow {
    /// Time until this flow drains at its current rate.
    pub fn time_to_finish(&self) -> f64 {
        if self.rate > 0.0 {
            self.remaining * 8.0 / self.rate
        } else {
            f64::INFINITY
        }
    }
}

/// Remaining sizes and rates of the active flows at `clock`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FluidState {
    pub clock: f64,
    pub flows: BTreeMap<FlowId, FluidFlow>,
}

impl FluidState {
    /// Drains every flow at its current rate for `dt` seconds.
    pub fn advance_remaining(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0);
        if dt > 0.0 {
            for f in self.flows.values_mut() {
                f.remaining -= f.rate * dt / 8.0;
            }
            self.clock += dt;
        }
    }

    /// Recomputes max-min rates over every active flow.
    pub fn reallocate(&mut self, topo: &Topology) -> Result<(), FluidError> {
        let capacity: Vec<f64> = topo.links().iter().map(|l| l.capacity_bps).collect();
        let paths: Vec<&[LinkId]> = self.flows.values().map(|f| f.spec.path.as_slice()).collect();
        let rates = maxmin_rates(&paths, &capacity)?;
        for (f, r) in self.flows.values_mut().zip(rates) {
            f.rate = r;
        }
        Ok(())
    }

    /// Earliest departure `(time, flow)`; ties resolve to the lowest id.
    pub fn next_departure(&self) -> Option<(f64, FlowId)> {
        let mut best: Option<(f64, FlowId)> = None;
        for (&id, f) in &self.flows {
            let t = self.clock + f.time_to_finish();
            if t.is_finite() && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, id));
            }
        }
        best
    }
}

/// A flow counts as drained once less than this many bytes remain (or a
/// tiny fraction of its size for very large flows).
fn drained(f: &FluidFlow) -> bool {
    f.remaining <= (1e-6f64).max(f.spec.size as f64 * 1e-12)
}

/// Runs the fluid simulator until the source is exhausted and every flow
/// has departed.
pub fn run<S: ArrivalSource + ?Sized>(
    topo: &Topology,
    source: &mut S,
) -> Result<RunOutput, FluidError> {
    let mut state = FluidState::default();
    let mut out = RunOutput::default();
    loop {
        let arrival = source.peek_time();
        let departure = state.next_departure();
        match (arrival, departure) {
            (None, None) => break,
            (a, Some((td, _))) if a.is_none_or(|ta| td <= ta) => {
                let dt = (td - state.clock).max(0.0);
                state.advance_remaining(dt);
                state.clock = td.max(state.clock);
                let done: Vec<FlowId> = state
                    .flows
                    .iter()
                    .filter(|(_, f)| drained(f) || state.clock + f.time_to_finish() <= td)
                    .map(|(&id, _)| id)
                    .collect();
                for id in &done {
                    let f = state.flows.remove(id).expect("flow is active");
                    out.events.push(EventRecord {
                        time: state.clock,
                        kind: EventKind::Departure,
                        flow: *id,
                    });
                    out.flows.push(FlowResult {
                        id: *id,
                        src: f.spec.src,
                        dst: f.spec.dst,
                        size: f.spec.size,
                        arrival: f.spec.arrival,
                        fct: state.clock - f.spec.arrival,
                        ideal: ideal_fct(&f.spec, topo),
                    });
                }
                for id in done {
                    source.on_completion(id, state.clock);
                }
                state.reallocate(topo)?;
            }
            (Some(ta), _) => {
                if ta < state.clock {
                    let flow = source.next_flow().map(|f| f.id).unwrap_or_default();
                    return Err(OrderingError {
                        flow,
                        time: ta,
                        clock: state.clock,
                    }
                    .into());
                }
                state.advance_remaining(ta - state.clock);
                state.clock = ta;
                while source.peek_time() == Some(ta) {
                    let spec = source.next_flow().expect("peeked");
                    out.events.push(EventRecord {
                        time: ta,
                        kind: EventKind::Arrival,
                        flow: spec.id,
                    });
                    state.flows.insert(
                        spec.id,
                        FluidFlow {
                            remaining: spec.size as f64,
                            rate: 0.0,
                            spec,
                        },
                    );
                }
                state.reallocate(topo)?;
            }
            (None, Some(_)) => unreachable!("handled by the departure arm"),
        }
    }
    Ok(out)
}
