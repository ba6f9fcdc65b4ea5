//! Event-affected sub-networks and their bipartite flow/link graphs.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::netmodel::{FlowId, LinkId};
use crate::nn::{Adjacency, Matrix, NnError};

/// Active flows indexed both ways: flow → path and link → flows.
#[derive(Debug, Clone, Default)]
pub struct FlowLinkIndex {
    paths: BTreeMap<FlowId, Vec<LinkId>>,
    on_link: BTreeMap<LinkId, BTreeSet<FlowId>>,
}

impl FlowLinkIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, flow: FlowId, path: &[LinkId]) {
        self.remove(flow);
        for &l in path {
            self.on_link.entry(l).or_default().insert(flow);
        }
        self.paths.insert(flow, path.to_vec());
    }

    pub fn remove(&mut self, flow: FlowId) -> Option<Vec<LinkId>> {
        let path = self.paths.remove(&flow)?;
        for l in &path {
            if let Some(set) = self.on_link.get_mut(l) {
                set.remove(&flow);
                if set.is_empty() {
                    self.on_link.remove(l);
                }
            }
        }
        Some(path)
    }

    pub fn contains(&self, flow: FlowId) -> bool {
        self.paths.contains_key(&flow)
    }

    pub fn path(&self, flow: FlowId) -> Option<&[LinkId]> {
        self.paths.get(&flow).map(Vec::as_slice)
    }

    pub fn flows_on(&self, link: LinkId) -> impl Iterator<Item = FlowId> + '_ {
        self.on_link.get(&link).into_iter().flat_map(|s| s.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn flows(&self) -> impl Iterator<Item = FlowId> + '_ {
        self.paths.keys().copied()
    }
}

/// Flows and links of one connected component, both ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Component {
    pub flows: Vec<FlowId>,
    pub links: Vec<LinkId>,
}

/// The connected component containing `trigger`, where two flows are
/// adjacent when they share a directed link. Empty if `trigger` is not
/// active.
pub fn affected_component(index: &FlowLinkIndex, trigger: FlowId) -> Component {
    if !index.contains(trigger) {
        return Component::default();
    }
    let mut flows = BTreeSet::new();
    let mut links = BTreeSet::new();
    let mut queue = VecDeque::new();
    flows.insert(trigger);
    queue.push_back(trigger);
    while let Some(f) = queue.pop_front() {
        for &l in index.path(f).unwrap_or_default() {
            if !links.insert(l) {
                continue;
            }
            for g in index.flows_on(l) {
                if flows.insert(g) {
                    queue.push_back(g);
                }
            }
        }
    }
    Component {
        flows: flows.into_iter().collect(),
        links: links.into_iter().collect(),
    }
}

/// Entities a departure updates: the departing flow's component without
/// that flow, restricted to links the remaining members traverse. Call
/// while `departing` is still indexed.
pub fn departure_members(index: &FlowLinkIndex, departing: FlowId) -> Component {
    let flows: Vec<FlowId> = affected_component(index, departing)
        .flows
        .into_iter()
        .filter(|&g| g != departing)
        .collect();
    let links: BTreeSet<LinkId> = flows
        .iter()
        .flat_map(|&g| index.path(g).unwrap_or_default().iter().copied())
        .collect();
    Component {
        flows,
        links: links.into_iter().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("flow {0} has no hidden state")]
    MissingFlowState(FlowId),
    #[error("link {0} has no hidden state")]
    MissingLinkState(LinkId),
    #[error("flow {0} is not active")]
    UnknownFlow(FlowId),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Bipartite graph over a component. Graph node `i < flows.len()` is
/// `flows[i]`; node `flows.len() + j` is `links[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteSnapshot {
    pub flows: Vec<FlowId>,
    pub links: Vec<LinkId>,
    /// `(flow index, link index)` for every path membership.
    pub edges: Vec<(usize, usize)>,
    pub flow_features: Matrix,
    pub link_features: Matrix,
}

impl BipartiteSnapshot {
    pub fn n_nodes(&self) -> usize {
        self.flows.len() + self.links.len()
    }

    pub fn adjacency(&self) -> Adjacency {
        let nf = self.flows.len();
        let e: Vec<(usize, usize)> = self.edges.iter().map(|&(f, l)| (f, nf + l)).collect();
        Adjacency::from_edges(self.n_nodes(), &e).expect("edge indices are in range")
    }

    /// Flow rows followed by link rows.
    pub fn node_features(&self) -> Matrix {
        let d = self.flow_features.cols();
        let mut data = Vec::with_capacity(self.n_nodes() * d);
        data.extend_from_slice(self.flow_features.as_slice());
        data.extend_from_slice(self.link_features.as_slice());
        Matrix::from_vec(self.n_nodes(), d, data).expect("row widths agree")
    }
}

/// Builds the snapshot for `component`, reading node features from the
/// given hidden-state lookups.
pub fn build_bipartite<'a>(
    component: &Component,
    index: &FlowLinkIndex,
    dim: usize,
    flow_state: impl Fn(FlowId) -> Option<&'a [f32]>,
    link_state: impl Fn(LinkId) -> Option<&'a [f32]>,
) -> Result<BipartiteSnapshot, SnapshotError> {
    let link_pos: BTreeMap<LinkId, usize> =
        component.links.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut edges = Vec::new();
    let mut frows = Vec::with_capacity(component.flows.len() * dim);
    for (fi, &f) in component.flows.iter().enumerate() {
        let path = index.path(f).ok_or(SnapshotError::UnknownFlow(f))?;
        for l in path {
            if let Some(&li) = link_pos.get(l) {
                edges.push((fi, li));
            }
        }
        let h = flow_state(f).ok_or(SnapshotError::MissingFlowState(f))?;
        frows.extend_from_slice(h);
    }
    let mut lrows = Vec::with_capacity(component.links.len() * dim);
    for &l in &component.links {
        lrows.extend_from_slice(link_state(l).ok_or(SnapshotError::MissingLinkState(l))?);
    }
    Ok(BipartiteSnapshot {
        flows: component.flows.clone(),
        links: component.links.clone(),
        edges,
        flow_features: Matrix::from_vec(component.flows.len(), dim, frows)?,
        link_features: Matrix::from_vec(component.links.len(), dim, lrows)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn l(i: u32) -> LinkId {
        LinkId(i)
    }

    fn f(i: u32) -> FlowId {
        FlowId(i)
    }

    /// F1{L1,L2}, F2{L2,L3,L4}, F3{L4,L5,L6}, F4{L7}.
    fn chain() -> FlowLinkIndex {
        let mut ix = FlowLinkIndex::new();
        ix.insert(f(1), &[l(1), l(2)]);
        ix.insert(f(2), &[l(2), l(3), l(4)]);
        ix.insert(f(3), &[l(4), l(5), l(6)]);
        ix.insert(f(4), &[l(7)]);
        ix
    }

    #[test]
    fn chained_flows_form_one_component() {
        let ix = chain();
        let c = affected_component(&ix, f(1));
        assert_eq!(c.flows, vec![f(1), f(2), f(3)]);
        assert_eq!(c.links, (1..=6).map(l).collect::<Vec<_>>());
        let s = build_bipartite(&c, &ix, 1, |_| Some(&[0.0][..]), |_| Some(&[1.0][..])).unwrap();
        assert_eq!((s.flows.len(), s.links.len(), s.edges.len()), (3, 6, 8));
        let adj = s.adjacency();
        // link L2 (node 3 + 1) touches F1 and F2
        assert_eq!(adj.neighbors(4), &[0, 1]);
    }

    #[test]
    fn isolated_flow() {
        let ix = chain();
        let c = affected_component(&ix, f(4));
        assert_eq!(c.flows, vec![f(4)]);
        assert_eq!(c.links, vec![l(7)]);
        assert_eq!(affected_component(&ix, f(9)), Component::default());
    }

    #[test]
    fn single_flow_two_links() {
        let mut ix = FlowLinkIndex::new();
        ix.insert(f(0), &[l(3), l(8)]);
        let c = affected_component(&ix, f(0));
        let s = build_bipartite(&c, &ix, 2, |_| Some(&[1.0, 2.0][..]), |_| Some(&[3.0, 4.0][..]))
            .unwrap();
        assert_eq!(s.edges, vec![(0, 0), (0, 1)]);
        assert_eq!(s.node_features().row(2), &[3.0, 4.0]);
    }

    #[test]
    fn missing_state_is_reported() {
        let ix = chain();
        let c = affected_component(&ix, f(4));
        let err = build_bipartite(&c, &ix, 1, |_| None, |_| Some(&[0.0][..])).unwrap_err();
        assert_eq!(err, SnapshotError::MissingFlowState(f(4)));
    }

    #[test]
    fn removal_splits_component() {
        let mut ix = chain();
        ix.remove(f(2));
        assert_eq!(affected_component(&ix, f(1)).flows, vec![f(1)]);
        assert_eq!(ix.flows_on(l(2)).collect::<Vec<_>>(), vec![f(1)]);
        assert_eq!(ix.flows_on(l(3)).count(), 0);
    }

    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }

    proptest! {
        #[test]
        fn matches_union_find(
            paths in prop::collection::vec(prop::collection::btree_set(0u32..12, 1..4), 1..15),
            trig in 0usize..15,
        ) {
            let n = paths.len();
            let trig = trig % n;
            let mut ix = FlowLinkIndex::new();
            for (i, p) in paths.iter().enumerate() {
                let p: Vec<LinkId> = p.iter().map(|&x| l(x)).collect();
                ix.insert(f(i as u32), &p);
            }
            let mut parent: Vec<usize> = (0..n).collect();
            for a in 0..n {
                for b in a + 1..n {
                    if !paths[a].is_disjoint(&paths[b]) {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        parent[ra] = rb;
                    }
                }
            }
            let root = find(&mut parent, trig);
            let want: Vec<FlowId> =
                (0..n).filter(|&i| find(&mut parent, i) == root).map(|i| f(i as u32)).collect();
            let c = affected_component(&ix, f(trig as u32));
            prop_assert_eq!(&c.flows, &want);
            let s = build_bipartite(&c, &ix, 1, |_| Some(&[0.0][..]), |_| Some(&[0.0][..])).unwrap();
            let edges: usize = c.flows.iter().map(|x| paths[x.0 as usize].len()).sum();
            prop_assert_eq!(s.edges.len(), edges);
        }
    }
}
