use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{check_dim, Linear, Matrix};
use super::NnError;

/// Undirected neighbor lists in CSR form. Each node's neighbors are stored
/// in ascending index order with duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Adjacency {
    /// Builds the adjacency from undirected edges `(a, b)`; each edge adds
    /// `b` to `a`'s list and `a` to `b`'s.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, NnError> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for &(a, b) in edges {
            for node in [a, b] {
                if node >= n_nodes {
                    return Err(NnError::BadAdjacency { node, n_nodes });
                }
            }
            lists[a].push(b);
            lists[b].push(a);
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        let mut neighbors = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            neighbors.extend_from_slice(&l);
            offsets.push(neighbors.len());
        }
        Ok(Self { offsets, neighbors })
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// One GraphSAGE layer with sum aggregation:
/// `h'_v = act(W_self h_v + W_neigh Σ_{u∈N(v)} h_u + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SageParams {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `[out, in]`
    pub weight_self: Vec<f32>,
    /// `[out, in]`
    pub weight_neigh: Vec<f32>,
    pub bias: Vec<f32>,
}

impl SageParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight_self: vec![0.0; in_dim * out_dim],
            weight_neigh: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn check(&self) -> Result<(), NnError> {
        let n = self.in_dim * self.out_dim;
        check_dim("sage weight_self", n, self.weight_self.len())?;
        check_dim("sage weight_neigh", n, self.weight_neigh.len())?;
        check_dim("sage bias", self.out_dim, self.bias.len())
    }
}

/// Sums neighbor features. Within each coordinate the terms are added in
/// ascending value order, so the result does not depend on how nodes are
/// numbered.
fn aggregate(adj: &Adjacency, x: &Matrix) -> Matrix {
    let d = x.cols();
    let mut out = Matrix::zeros(x.rows(), d);
    let mut scratch: Vec<f32> = Vec::new();
    for v in 0..adj.n_nodes() {
        let nb = adj.neighbors(v);
        let orow = out.row_mut(v);
        match nb.len() {
            0 => {}
            1 => orow.copy_from_slice(x.row(nb[0])),
            2 => {
                let (a, b) = (x.row(nb[0]), x.row(nb[1]));
                for k in 0..d {
                    orow[k] = a[k] + b[k];
                }
            }
            _ => {
                for k in 0..d {
                    scratch.clear();
                    scratch.extend(nb.iter().map(|&u| x.row(u)[k]));
                    scratch.sort_unstable_by(f32::total_cmp);
                    orow[k] = scratch.iter().fold(0.0f32, |s, &t| s + t);
                }
            }
        }
    }
    out
}

pub fn sage_layer(
    adj: &Adjacency,
    x: &Matrix,
    p: &SageParams,
    act: Activation,
) -> Result<Matrix, NnError> {
    p.check()?;
    check_dim("sage input", p.in_dim, x.cols())?;
    check_dim("sage nodes", adj.n_nodes(), x.rows())?;
    let agg = aggregate(adj, x);
    let self_map = Linear {
        in_dim: p.in_dim,
        out_dim: p.out_dim,
        weight: p.weight_self.clone(),
        bias: p.bias.clone(),
    };
    let neigh_map = Linear {
        in_dim: p.in_dim,
        out_dim: p.out_dim,
        weight: p.weight_neigh.clone(),
        bias: Vec::new(),
    };
    let mut out = self_map.forward_rows(x)?;
    neigh_map.accumulate_rows(&agg, &mut out, false)?;
    if act == Activation::Relu {
        for r in 0..out.rows() {
            for v in out.row_mut(r) {
                *v = v.max(0.0);
            }
        }
    }
    Ok(out)
}
