use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{FlowId, LinkId, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteError {
    #[error("node {0} is not a host")]
    NotAHost(NodeId),
    #[error("source and destination are the same host {0}")]
    SameEndpoints(NodeId),
    #[error("no path from {src} to {dst}")]
    Unreachable { src: NodeId, dst: NodeId },
}

const UNREACHABLE: u32 = u32::MAX;

/// Shortest-path distances and path counts towards one destination.
#[derive(Debug, Clone)]
struct DstTable {
    dist: Vec<u32>,
    count: Vec<u64>,
}

impl DstTable {
    fn build(topo: &Topology, dst: NodeId) -> Self {
        let n = topo.n_nodes();
        let mut dist = vec![UNREACHABLE; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        dist[dst.index()] = 0;
        queue.push_back(dst);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &l in topo.in_links(v) {
                let u = topo.link(l).src;
                if dist[u.index()] == UNREACHABLE {
                    dist[u.index()] = dist[v.index()] + 1;
                    queue.push_back(u);
                }
            }
        }
        // BFS order is non-decreasing in distance, so successors are done
        // before predecessors.
        let mut count = vec![0u64; n];
        count[dst.index()] = 1;
        for &u in order.iter().skip(1) {
            let du = dist[u.index()];
            let mut c: u64 = 0;
            for &l in topo.out_links(u) {
                let v = topo.link(l).dst;
                if dist[v.index()] != UNREACHABLE && dist[v.index()] + 1 == du {
                    c = c.saturating_add(count[v.index()]);
                }
            }
            count[u.index()] = c;
        }
        Self { dist, count }
    }

    fn next_hops<'a>(
        &'a self,
        topo: &'a Topology,
        u: NodeId,
    ) -> impl Iterator<Item = (LinkId, NodeId)> + 'a {
        let du = self.dist[u.index()];
        topo.out_links(u).iter().filter_map(move |&l| {
            let v = topo.link(l).dst;
            let dv = self.dist[v.index()];
            (dv != UNREACHABLE && dv + 1 == du).then_some((l, v))
        })
    }

    /// The `k`-th shortest path from `src`, ordering paths lexicographically
    /// by link id.
    fn unrank(&self, topo: &Topology, src: NodeId, dst: NodeId, mut k: u64) -> Vec<LinkId> {
        let mut path = Vec::with_capacity(self.dist[src.index()] as usize);
        let mut u = src;
        while u != dst {
            let mut chosen = None;
            for (l, v) in self.next_hops(topo, u) {
                let c = self.count[v.index()];
                if k < c {
                    chosen = Some((l, v));
                    break;
                }
                k -= c;
            }
            // Counts saturate only on astronomically wide fabrics; fall back
            // to the last candidate there.
            let (l, v) = chosen
                .or_else(|| self.next_hops(topo, u).last())
                .expect("a node on a shortest path has a next hop");
            path.push(l);
            u = v;
        }
        path
    }
}

fn check_endpoints(topo: &Topology, src: NodeId, dst: NodeId) -> Result<(), RouteError> {
    for node in [src, dst] {
        if !topo.is_host(node) {
            return Err(RouteError::NotAHost(node));
        }
    }
    if src == dst {
        return Err(RouteError::SameEndpoints(src));
    }
    Ok(())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit mix of the ECMP key.
pub(crate) fn ecmp_hash(src: NodeId, dst: NodeId, flow: FlowId, seed: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ u64::from(src.0));
    h = splitmix64(h ^ (u64::from(dst.0) << 1));
    splitmix64(h ^ (u64::from(flow.0) << 2))
}

/// Picks one shortest `src → dst` path by hashing `(src, dst, flow, seed)`
/// over the set of equal-cost paths.
pub fn ecmp_route(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    flow: FlowId,
    seed: u64,
) -> Result<Vec<LinkId>, RouteError> {
    check_endpoints(topo, src, dst)?;
    let table = DstTable::build(topo, dst);
    route_with(&table, topo, src, dst, flow, seed)
}

fn route_with(
    table: &DstTable,
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    flow: FlowId,
    seed: u64,
) -> Result<Vec<LinkId>, RouteError> {
    let paths = table.count[src.index()];
    if table.dist[src.index()] == UNREACHABLE || paths == 0 {
        return Err(RouteError::Unreachable { src, dst });
    }
    let k = ecmp_hash(src, dst, flow, seed) % paths;
    Ok(table.unrank(topo, src, dst, k))
}

/// ECMP router with per-destination tables precomputed for every host.
#[derive(Debug, Clone)]
pub struct Router<'t> {
    topo: &'t Topology,
    tables: Vec<Option<DstTable>>,
}

impl<'t> Router<'t> {
    pub fn new(topo: &'t Topology) -> Self {
        let mut tables = vec![None; topo.n_nodes()];
        for &h in topo.hosts() {
            tables[h.index()] = Some(DstTable::build(topo, h));
        }
        Self { topo, tables }
    }

    pub fn topology(&self) -> &'t Topology {
        self.topo
    }

    fn table(&self, dst: NodeId) -> &DstTable {
        self.tables[dst.index()]
            .as_ref()
            .expect("tables exist for every host")
    }

    /// Same result as [`ecmp_route`], without rebuilding the BFS table.
    pub fn route(
        &self,
        src: NodeId,
        dst: NodeId,
        flow: FlowId,
        seed: u64,
    ) -> Result<Vec<LinkId>, RouteError> {
        check_endpoints(self.topo, src, dst)?;
        route_with(self.table(dst), self.topo, src, dst, flow, seed)
    }

    /// Hop count of a shortest path, if any.
    pub fn distance(&self, src: NodeId, dst: NodeId) -> Option<usize> {
        let d = self.table(dst).dist[src.index()];
        (d != UNREACHABLE).then_some(d as usize)
    }

    /// Number of equal-cost shortest paths.
    pub fn path_count(&self, src: NodeId, dst: NodeId) -> u64 {
        self.table(dst).count[src.index()]
    }

    /// Every shortest path, in hash-index order.
    pub fn all_paths(&self, src: NodeId, dst: NodeId) -> Vec<Vec<LinkId>> {
        let t = self.table(dst);
        (0..t.count[src.index()])
            .map(|k| t.unrank(self.topo, src, dst, k))
            .collect()
    }

    /// Probability that a flow hashed uniformly over the equal-cost set
    /// crosses each link, as `(link, probability)` pairs.
    pub fn link_usage(&self, src: NodeId, dst: NodeId) -> Vec<(LinkId, f64)> {
        let t = self.table(dst);
        let total = t.count[src.index()];
        if src == dst || total == 0 {
            return Vec::new();
        }
        let total = total as f64;
        let mut fwd = vec![0u64; self.topo.n_nodes()];
        fwd[src.index()] = 1;
        let mut frontier = vec![src];
        let mut usage = Vec::new();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                for (l, v) in t.next_hops(self.topo, u) {
                    if fwd[v.index()] == 0 {
                        next.push(v);
                    }
                    fwd[v.index()] = fwd[v.index()].saturating_add(fwd[u.index()]);
                    let through = fwd[u.index()] as f64 * t.count[v.index()] as f64;
                    usage.push((l, through / total));
                }
            }
            next.sort_unstable();
            next.dedup();
            next.retain(|&v| v != dst);
            frontier = next;
        }
        usage
    }
}
