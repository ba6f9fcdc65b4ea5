use alloc::collections::{BTreeMap, BinaryHeap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::dctcp::{dctcp_window_update, CcState};
use crate::math::round;
use crate::netmodel::{
    ideal_fct_for, CcProtocol, EventKind, EventRecord, FlowError, FlowId, FlowSpec, LinkId,
    NetworkConfig, NodeRole, Topology, MTU_BYTES,
};
use crate::source::{ArrivalSource, FlowResult, OrderingError};

/// ACK packets are 40 bytes on the wire.
pub const ACK_BYTES: u64 = 40;
/// Retransmission timeout as a multiple of the unloaded path round trip.
pub const RTO_RTT_MULTIPLIER: u64 = 10;

const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PacketError {
    #[error("congestion control {0} is not supported by the packet simulator")]
    UnsupportedCc(&'static str),
    #[error("flow {flow}: {source}")]
    BadFlow { flow: FlowId, source: FlowError },
    #[error("flow {0} was already started")]
    DuplicateFlow(FlowId),
    #[error("flow {0}: no reverse link for the ACK path")]
    NoReversePath(FlowId),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("byte conservation violated for flow {flow}: {detail}")]
    Conservation { flow: FlowId, detail: String },
}

/// How senders size their window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SenderMode {
    /// Slow start, then the DCTCP law; switches mark at `k_bytes`.
    Dctcp { k_bytes: u64 },
    /// Constant window; switches never mark.
    FixedWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketConfig {
    pub mode: SenderMode,
    /// Per switch egress port; host NIC queues are unbounded.
    pub buffer_bytes: u64,
    pub init_window_bytes: u64,
    /// Checks byte conservation after every packet event (slow).
    pub audit: bool,
    /// Width of the delivered-bytes histogram bins, if wanted.
    pub goodput_bin_s: Option<f64>,
}

impl PacketConfig {
    pub fn from_network(cfg: &NetworkConfig) -> Result<Self, PacketError> {
        let mode = match cfg.cc {
            CcProtocol::Dctcp { k_bytes } => SenderMode::Dctcp { k_bytes },
            CcProtocol::Timely { .. } => return Err(PacketError::UnsupportedCc("TIMELY")),
            CcProtocol::Dcqcn { .. } => return Err(PacketError::UnsupportedCc("DCQCN")),
        };
        Ok(Self {
            mode,
            buffer_bytes: cfg.buffer_bytes,
            init_window_bytes: cfg.init_window_bytes,
            audit: false,
            goodput_bin_s: None,
        })
    }

    pub fn fixed_window(window_bytes: u64, buffer_bytes: u64) -> Self {
        Self {
            mode: SenderMode::FixedWindow,
            buffer_bytes,
            init_window_bytes: window_bytes,
            audit: false,
            goodput_bin_s: None,
        }
    }
}

/// Remaining bytes of every active flow right after a flow-level event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainingSample {
    pub time: f64,
    pub kind: EventKind,
    pub flow: FlowId,
    /// Ascending flow id. Includes the departing flow (at 0).
    pub remaining: Vec<(FlowId, u64)>,
}

/// Queue occupancy each link of the path showed the flow's first packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstPacketQueue {
    pub flow: FlowId,
    pub links: Vec<LinkId>,
    pub bytes: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketStats {
    pub drops: u64,
    pub timeouts: u64,
    pub data_packets_sent: u64,
    pub packet_events: u64,
    /// Highest occupancy seen per directed link.
    pub max_occupancy: Vec<u64>,
    /// In-order bytes delivered per goodput bin.
    pub delivered_bins: Vec<u64>,
}

/// Everything a packet run produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthTrace {
    /// Completion order.
    pub flows: Vec<FlowResult>,
    pub events: Vec<EventRecord>,
    /// One per entry of `events`.
    pub remaining: Vec<RemainingSample>,
    /// Ascending flow id.
    pub first_packet_queue: Vec<FirstPacketQueue>,
    pub stats: PacketStats,
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    Data { ce: bool, first: bool },
    Ack { ack: u64, ece: bool },
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    flow: u32,
    seq: u64,
    len: u64,
    hop: u16,
    payload: Payload,
}

impl Packet {
    fn is_data(&self) -> bool {
        matches!(self.payload, Payload::Data { .. })
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    TxDone(u32),
    Arrive(Packet),
    Timer(u32),
}

struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // min-heap on (time, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Port {
    queue: VecDeque<Packet>,
    occupancy: u64,
    busy: bool,
    switch: bool,
    ps_per_byte: f64,
    prop_ps: u64,
}

impl Port {
    fn ser_ps(&self, bytes: u64) -> u64 {
        round(bytes as f64 * self.ps_per_byte) as u64
    }
}

struct Flow {
    spec: FlowSpec,
    rev: Vec<LinkId>,
    ideal: f64,
    start_ps: u64,
    rto_ps: u64,
    // sender
    cc: CcState,
    slow_start: bool,
    next_seq: u64,
    high_seq: u64,
    snd_una: u64,
    window_end: u64,
    acked_in_window: u64,
    marked_in_window: u64,
    rto_deadline: u64,
    timer_pending: bool,
    // receiver
    rcv_next: u64,
    done: bool,
    // accounting
    sent_bytes: u64,
    dropped_bytes: u64,
    received_bytes: u64,
    lossy: bool,
    first_queue: Vec<Option<u64>>,
}

impl Flow {
    fn remaining(&self) -> u64 {
        self.spec.size - self.rcv_next
    }
}

struct Sim<'t> {
    topo: &'t Topology,
    cfg: PacketConfig,
    ports: Vec<Port>,
    flows: Vec<Flow>,
    by_id: BTreeMap<FlowId, u32>,
    active: BTreeMap<FlowId, u32>,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    now: u64,
    out: GroundTruthTrace,
    completed: Vec<(FlowId, f64)>,
    bin_ps: Option<u64>,
}

fn to_ps(t: f64) -> u64 {
    round(t * PS_PER_S) as u64
}

fn to_s(ps: u64) -> f64 {
    ps as f64 / PS_PER_S
}

impl<'t> Sim<'t> {
    fn new(topo: &'t Topology, cfg: PacketConfig) -> Self {
        let ports = topo
            .links()
            .iter()
            .map(|l| Port {
                queue: VecDeque::new(),
                occupancy: 0,
                busy: false,
                switch: topo.role(l.src) != Some(NodeRole::Host),
                ps_per_byte: 8.0 * PS_PER_S / l.capacity_bps,
                prop_ps: to_ps(l.prop_delay_s),
            })
            .collect();
        let out = GroundTruthTrace {
            stats: PacketStats {
                max_occupancy: vec![0; topo.n_links()],
                ..PacketStats::default()
            },
            ..GroundTruthTrace::default()
        };
        Self {
            topo,
            cfg,
            ports,
            flows: Vec::new(),
            by_id: BTreeMap::new(),
            active: BTreeMap::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0,
            out,
            completed: Vec::new(),
            bin_ps: cfg.goodput_bin_s.map(to_ps).filter(|&b| b > 0),
        }
    }

    fn schedule(&mut self, time: u64, event: Event) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn reverse_path(&self, spec: &FlowSpec) -> Result<Vec<LinkId>, PacketError> {
        spec.path
            .iter()
            .rev()
            .map(|&l| {
                let fwd = self.topo.link(l);
                self.topo
                    .out_links(fwd.dst)
                    .iter()
                    .copied()
                    .find(|&r| self.topo.link(r).dst == fwd.src)
                    .ok_or(PacketError::NoReversePath(spec.id))
            })
            .collect()
    }

    fn unloaded_rtt_ps(&self, path: &[LinkId], rev: &[LinkId]) -> u64 {
        let leg = |links: &[LinkId], bytes: u64| -> u64 {
            links
                .iter()
                .map(|l| {
                    let p = &self.ports[l.index()];
                    p.prop_ps + p.ser_ps(bytes)
                })
                .sum()
        };
        leg(path, MTU_BYTES) + leg(rev, ACK_BYTES)
    }

    fn start_flow(&mut self, spec: FlowSpec) -> Result<(), PacketError> {
        spec.validate(self.topo)
            .map_err(|source| PacketError::BadFlow { flow: spec.id, source })?;
        if self.by_id.contains_key(&spec.id) {
            return Err(PacketError::DuplicateFlow(spec.id));
        }
        let rev = self.reverse_path(&spec)?;
        let rto_ps = RTO_RTT_MULTIPLIER * self.unloaded_rtt_ps(&spec.path, &rev);
        let idx = self.flows.len() as u32;
        let ideal = ideal_fct_for(spec.size, &spec.path, self.topo);
        let init = self.cfg.init_window_bytes as f64;
        let flow = Flow {
            rev,
            ideal,
            start_ps: self.now,
            rto_ps,
            cc: CcState::new(init),
            slow_start: matches!(self.cfg.mode, SenderMode::Dctcp { .. }),
            next_seq: 0,
            high_seq: 0,
            snd_una: 0,
            window_end: 0,
            acked_in_window: 0,
            marked_in_window: 0,
            rto_deadline: 0,
            timer_pending: false,
            rcv_next: 0,
            done: false,
            sent_bytes: 0,
            dropped_bytes: 0,
            received_bytes: 0,
            lossy: false,
            first_queue: vec![None; spec.path.len()],
            spec,
        };
        let id = flow.spec.id;
        self.by_id.insert(id, idx);
        self.active.insert(id, idx);
        self.flows.push(flow);
        self.flow_event(EventKind::Arrival, id);
        self.try_send(idx);
        Ok(())
    }

    fn flow_event(&mut self, kind: EventKind, flow: FlowId) {
        let time = to_s(self.now);
        self.out.events.push(EventRecord { time, kind, flow });
        let mut remaining: Vec<(FlowId, u64)> = self
            .active
            .iter()
            .map(|(&id, &i)| (id, self.flows[i as usize].remaining()))
            .collect();
        if kind == EventKind::Departure {
            remaining.push((flow, 0));
            remaining.sort_unstable_by_key(|&(id, _)| id);
        }
        self.out.remaining.push(RemainingSample {
            time,
            kind,
            flow,
            remaining,
        });
    }

    fn try_send(&mut self, fi: u32) {
        loop {
            let f = &mut self.flows[fi as usize];
            if f.next_seq >= f.spec.size {
                break;
            }
            let len = MTU_BYTES.min(f.spec.size - f.next_seq);
            let inflight = f.next_seq - f.snd_una;
            let wnd = f.cc.cwnd.max(MTU_BYTES as f64);
            if (inflight + len) as f64 > wnd {
                break;
            }
            let first = f.next_seq == 0 && f.high_seq == 0;
            let pkt = Packet {
                flow: fi,
                seq: f.next_seq,
                len,
                hop: 0,
                payload: Payload::Data { ce: false, first },
            };
            f.next_seq += len;
            f.high_seq = f.high_seq.max(f.next_seq);
            f.sent_bytes += len;
            let link = f.spec.path[0];
            let arm = !f.timer_pending;
            if arm {
                f.timer_pending = true;
                f.rto_deadline = self.now + f.rto_ps;
            }
            let deadline = f.rto_deadline;
            self.out.stats.data_packets_sent += 1;
            if arm {
                self.schedule(deadline, Event::Timer(fi));
            }
            self.enqueue(link, pkt);
        }
    }

    fn enqueue(&mut self, link: LinkId, mut pkt: Packet) {
        let li = link.index();
        let port = &mut self.ports[li];
        let occ = port.occupancy;
        if let Payload::Data { first: true, .. } = pkt.payload {
            self.flows[pkt.flow as usize].first_queue[pkt.hop as usize] = Some(occ);
        }
        if port.switch && occ + pkt.len > self.cfg.buffer_bytes {
            self.out.stats.drops += 1;
            if pkt.is_data() {
                let f = &mut self.flows[pkt.flow as usize];
                f.dropped_bytes += pkt.len;
                f.lossy = true;
            }
            return;
        }
        if let (SenderMode::Dctcp { k_bytes }, Payload::Data { ce, .. }) =
            (self.cfg.mode, &mut pkt.payload)
        {
            if port.switch && occ >= k_bytes {
                *ce = true;
            }
        }
        port.occupancy += pkt.len;
        port.queue.push_back(pkt);
        let m = &mut self.out.stats.max_occupancy[li];
        *m = (*m).max(port.occupancy);
        if !port.busy {
            port.busy = true;
            let t = self.now + port.ser_ps(pkt.len);
            self.schedule(t, Event::TxDone(li as u32));
        }
    }

    fn tx_done(&mut self, li: u32) {
        let port = &mut self.ports[li as usize];
        let pkt = port.queue.pop_front().expect("busy port has a packet");
        port.occupancy -= pkt.len;
        let arrive = self.now + port.prop_ps;
        let next = port.queue.front().map(|p| p.len);
        match next {
            Some(len) => {
                let t = self.now + port.ser_ps(len);
                self.schedule(t, Event::TxDone(li));
            }
            None => port.busy = false,
        }
        self.schedule(arrive, Event::Arrive(pkt));
    }

    fn arrive(&mut self, mut pkt: Packet) {
        let f = &self.flows[pkt.flow as usize];
        let path = if pkt.is_data() { &f.spec.path } else { &f.rev };
        let next_hop = pkt.hop as usize + 1;
        if next_hop < path.len() {
            let link = path[next_hop];
            pkt.hop = next_hop as u16;
            self.enqueue(link, pkt);
            return;
        }
        match pkt.payload {
            Payload::Data { ce, .. } => self.receive_data(pkt, ce),
            Payload::Ack { ack, ece } => self.receive_ack(pkt.flow, ack, ece),
        }
    }

    fn receive_data(&mut self, pkt: Packet, ce: bool) {
        let fi = pkt.flow as usize;
        let f = &mut self.flows[fi];
        f.received_bytes += pkt.len;
        let mut delivered = 0;
        if pkt.seq == f.rcv_next {
            f.rcv_next += pkt.len;
            delivered = pkt.len;
        }
        let ack = Packet {
            flow: pkt.flow,
            seq: 0,
            len: ACK_BYTES,
            hop: 0,
            payload: Payload::Ack {
                ack: f.rcv_next,
                ece: ce,
            },
        };
        let ack_link = f.rev[0];
        let finished = !f.done && f.rcv_next == f.spec.size;
        if let (Some(bin), true) = (self.bin_ps, delivered > 0) {
            let b = (self.now / bin) as usize;
            let bins = &mut self.out.stats.delivered_bins;
            if bins.len() <= b {
                bins.resize(b + 1, 0);
            }
            bins[b] += delivered;
        }
        if finished {
            self.finish(pkt.flow);
        }
        self.enqueue(ack_link, ack);
    }

    fn finish(&mut self, fi: u32) {
        let f = &mut self.flows[fi as usize];
        f.done = true;
        let id = f.spec.id;
        let fct = to_s(self.now - f.start_ps);
        self.out.flows.push(FlowResult {
            id,
            src: f.spec.src,
            dst: f.spec.dst,
            size: f.spec.size,
            arrival: f.spec.arrival,
            fct,
            ideal: f.ideal,
        });
        self.active.remove(&id);
        self.flow_event(EventKind::Departure, id);
        self.completed.push((id, to_s(self.now)));
    }

    fn receive_ack(&mut self, fi: u32, ack: u64, ece: bool) {
        let f = &mut self.flows[fi as usize];
        if ack <= f.snd_una {
            return;
        }
        let newly = ack - f.snd_una;
        f.snd_una = ack;
        f.next_seq = f.next_seq.max(ack);
        f.rto_deadline = self.now + f.rto_ps;
        if let SenderMode::Dctcp { .. } = self.cfg.mode {
            f.acked_in_window += newly;
            if ece {
                f.marked_in_window += newly;
                f.slow_start = false;
            } else if f.slow_start {
                f.cc.cwnd += newly as f64;
            }
            if f.snd_una >= f.window_end {
                let frac = if f.acked_in_window > 0 {
                    f.marked_in_window as f64 / f.acked_in_window as f64
                } else {
                    0.0
                };
                let updated = dctcp_window_update(f.cc, frac);
                f.cc.alpha = updated.alpha;
                if !(f.slow_start && frac == 0.0) {
                    f.cc.cwnd = updated.cwnd;
                }
                f.window_end = f.next_seq.max(f.snd_una + 1);
                f.acked_in_window = 0;
                f.marked_in_window = 0;
            }
        }
        self.try_send(fi);
    }

    fn timer(&mut self, fi: u32) {
        let now = self.now;
        let f = &mut self.flows[fi as usize];
        if f.snd_una >= f.spec.size {
            f.timer_pending = false;
            return;
        }
        if f.rto_deadline > now {
            let t = f.rto_deadline;
            self.schedule(t, Event::Timer(fi));
            return;
        }
        // go-back-N
        f.next_seq = f.snd_una;
        f.cc.cwnd = (f.cc.cwnd / 2.0).max(MTU_BYTES as f64);
        if let SenderMode::FixedWindow = self.cfg.mode {
            f.cc.cwnd = (self.cfg.init_window_bytes as f64).max(MTU_BYTES as f64);
        }
        f.slow_start = false;
        f.window_end = f.snd_una;
        f.acked_in_window = 0;
        f.marked_in_window = 0;
        f.lossy = true;
        f.rto_deadline = now + f.rto_ps;
        let t = f.rto_deadline;
        self.out.stats.timeouts += 1;
        self.schedule(t, Event::Timer(fi));
        self.try_send(fi);
    }

    /// Injected = dropped + received + in network, and for flows that never
    /// lost a packet, delivered + in network + unsent = size.
    fn audit(&self) -> Result<(), PacketError> {
        let mut in_net = vec![0u64; self.flows.len()];
        for port in &self.ports {
            for p in port.queue.iter().filter(|p| p.is_data()) {
                in_net[p.flow as usize] += p.len;
            }
        }
        for s in self.heap.iter() {
            if let Event::Arrive(p) = s.event {
                if p.is_data() {
                    in_net[p.flow as usize] += p.len;
                }
            }
        }
        for (f, net) in self.flows.iter().zip(in_net) {
            let fail = |detail: String| PacketError::Conservation {
                flow: f.spec.id,
                detail,
            };
            if f.sent_bytes != f.dropped_bytes + f.received_bytes + net {
                return Err(fail(format!(
                    "sent {} != dropped {} + received {} + in network {}",
                    f.sent_bytes, f.dropped_bytes, f.received_bytes, net
                )));
            }
            if !f.lossy {
                let unsent = f.spec.size - f.high_seq;
                if f.rcv_next + net + unsent != f.spec.size {
                    return Err(fail(format!(
                        "delivered {} + in network {} + unsent {} != size {}",
                        f.rcv_next, net, unsent, f.spec.size
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs the packet simulator until the source is exhausted and every flow
/// has delivered its last byte.
pub fn run<S: ArrivalSource + ?Sized>(
    topo: &Topology,
    source: &mut S,
    cfg: PacketConfig,
) -> Result<GroundTruthTrace, PacketError> {
    let mut sim = Sim::new(topo, cfg);
    loop {
        for (id, t) in core::mem::take(&mut sim.completed) {
            source.on_completion(id, t);
        }
        let next_arrival = source.peek_time();
        if next_arrival.is_none() && sim.active.is_empty() {
            break;
        }
        let heap_time = sim.heap.peek().map(|s| s.time);
        let take_arrival = match (next_arrival, heap_time) {
            (Some(ta), Some(th)) => to_ps(ta) < th,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!("active flows always have pending events"),
        };
        if take_arrival {
            let ta = next_arrival.expect("checked");
            let t = to_ps(ta);
            let spec = source.next_flow().expect("peeked");
            if t < sim.now {
                return Err(OrderingError {
                    flow: spec.id,
                    time: ta,
                    clock: to_s(sim.now),
                }
                .into());
            }
            sim.now = t;
            sim.start_flow(spec)?;
        } else {
            let s = sim.heap.pop().expect("peeked");
            sim.now = s.time;
            sim.out.stats.packet_events += 1;
            match s.event {
                Event::TxDone(li) => sim.tx_done(li),
                Event::Arrive(pkt) => sim.arrive(pkt),
                Event::Timer(fi) => sim.timer(fi),
            }
        }
        if sim.cfg.audit {
            sim.audit()?;
        }
    }
    let mut fpq: Vec<FirstPacketQueue> = sim
        .flows
        .iter()
        .map(|f| FirstPacketQueue {
            flow: f.spec.id,
            links: f.spec.path.clone(),
            bytes: f.first_queue.iter().map(|q| q.unwrap_or(0)).collect(),
        })
        .collect();
    fpq.sort_unstable_by_key(|q| q.flow);
    sim.out.first_packet_queue = fpq;
    Ok(sim.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{build_fattree, ecmp_route, NodeId};
    use crate::source::ScheduleSource;

    fn flow(topo: &Topology, id: u32, src: u32, dst: u32, size: u64, at: f64) -> FlowSpec {
        let path = ecmp_route(topo, NodeId(src), NodeId(dst), FlowId(id), 0).unwrap();
        FlowSpec {
            id: FlowId(id),
            src: NodeId(src),
            dst: NodeId(dst),
            size,
            arrival: at,
            path,
        }
    }

    fn dctcp() -> PacketConfig {
        let mut c = PacketConfig::from_network(&NetworkConfig::default()).unwrap();
        c.audit = true;
        c
    }

    #[test]
    fn single_packet_matches_ideal_exactly() {
        let topo = build_fattree(2, 4, 4, 1).unwrap();
        for dst in [1, 5, 20] {
            let f = flow(&topo, 0, 0, dst, 1000, 0.0);
            let tr = run(&topo, &mut ScheduleSource::new(vec![f]), dctcp()).unwrap();
            let r = &tr.flows[0];
            assert!((r.slowdown() - 1.0).abs() < 1e-12, "{}", r.slowdown());
            assert_eq!(tr.events.len(), 2);
        }
    }

    #[test]
    fn shared_egress_queue_observed_by_later_packet() {
        let topo = build_fattree(2, 4, 4, 1).unwrap();
        let fs = vec![flow(&topo, 0, 1, 0, 1000, 0.0), flow(&topo, 1, 2, 0, 1000, 0.0)];
        let tr = run(&topo, &mut ScheduleSource::new(fs), dctcp()).unwrap();
        let q0 = &tr.first_packet_queue[0].bytes;
        let q1 = &tr.first_packet_queue[1].bytes;
        assert_eq!(q0, &[0, 0]);
        assert_eq!(q1, &[0, 1000]);
    }

    #[test]
    fn duplicate_flow_ids_are_rejected() {
        let topo = build_fattree(2, 4, 4, 1).unwrap();
        let fs = vec![flow(&topo, 3, 1, 0, 1000, 0.0), flow(&topo, 3, 2, 0, 1000, 1e-6)];
        let err = run(&topo, &mut ScheduleSource::new(fs), dctcp()).unwrap_err();
        assert_eq!(err, PacketError::DuplicateFlow(FlowId(3)));
    }

    #[test]
    fn unsupported_protocols_are_explicit() {
        let cfg = NetworkConfig {
            cc: CcProtocol::Timely {
                t_low_ns: 50_000,
                t_high_ns: 120_000,
            },
            ..NetworkConfig::default()
        };
        assert_eq!(
            PacketConfig::from_network(&cfg),
            Err(PacketError::UnsupportedCc("TIMELY"))
        );
    }

    #[test]
    fn incast_drops_recover_and_conserve_bytes() {
        let topo = build_fattree(2, 4, 4, 1).unwrap();
        let mut cfg = dctcp();
        cfg.buffer_bytes = 100_000;
        let fs: Vec<FlowSpec> = (1..16).map(|i| flow(&topo, i, i, 0, 60_000, 0.0)).collect();
        let tr = run(&topo, &mut ScheduleSource::new(fs), cfg).unwrap();
        assert_eq!(tr.flows.len(), 15);
        assert!(tr.stats.drops > 0);
        for (l, &m) in tr.stats.max_occupancy.iter().enumerate() {
            if topo.role(topo.links()[l].src) != Some(NodeRole::Host) {
                assert!(m <= cfg.buffer_bytes);
            }
        }
        for s in &tr.remaining {
            assert!(s.remaining.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn remaining_is_non_increasing_and_ends_at_zero() {
        let topo = build_fattree(2, 4, 4, 1).unwrap();
        let fs: Vec<FlowSpec> = (0..6)
            .map(|i| flow(&topo, i, i, 31 - i, 20_000 + 7_000 * i as u64, i as f64 * 3e-6))
            .collect();
        let tr = run(&topo, &mut ScheduleSource::new(fs), dctcp()).unwrap();
        let mut last: BTreeMap<FlowId, u64> = BTreeMap::new();
        for s in &tr.remaining {
            for &(id, r) in &s.remaining {
                if let Some(&p) = last.get(&id) {
                    assert!(r <= p);
                }
                last.insert(id, r);
            }
            if s.kind == EventKind::Departure {
                assert!(s.remaining.contains(&(s.flow, 0)));
            }
        }
        assert_eq!(tr.events.len(), 12);
    }
}
