//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use m4_core::nn::{GruParams, MlpParams, SageParams};

/// Max-min rates by raising one common water level. Every unfrozen flow
/// sits at the level; the next level is the smallest level at which some
/// link saturates given the frozen load on it. Link loads are recomputed
/// from scratch each round instead of being decremented.
pub fn maxmin_oracle(paths: &[Vec<usize>], cap: &[f64]) -> Vec<f64> {
    let n = paths.len();
    let mut rate = vec![0.0; n];
    let mut frozen = vec![false; n];
    while frozen.iter().any(|f| !f) {
        let mut level = f64::INFINITY;
        for (l, &c) in cap.iter().enumerate() {
            let (mut fixed, mut free) = (0.0, 0usize);
            for (i, p) in paths.iter().enumerate() {
                if p.contains(&l) {
                    if frozen[i] {
                        fixed += rate[i];
                    } else {
                        free += 1;
                    }
                }
            }
            if free > 0 {
                level = level.min((c - fixed) / free as f64);
            }
        }
        let mut saturated = vec![false; cap.len()];
        for (l, &c) in cap.iter().enumerate() {
            let load: f64 = paths
                .iter()
                .enumerate()
                .filter(|(_, p)| p.contains(&l))
                .map(|(i, _)| if frozen[i] { rate[i] } else { level })
                .sum();
            saturated[l] = load >= c * (1.0 - 1e-12);
        }
        for i in 0..n {
            if !frozen[i] {
                rate[i] = level;
                if paths[i].iter().any(|&l| saturated[l]) {
                    frozen[i] = true;
                }
            }
        }
    }
    rate
}

/// Checks the bottleneck characterization of max-min fairness: the
/// allocation is feasible and every flow crosses a saturated link on which
/// no flow has a larger rate.
pub fn check_maxmin_conditions(paths: &[Vec<usize>], cap: &[f64], rate: &[f64], tol: f64) -> Result<(), String> {
    let load = |l: usize| -> f64 {
        paths
            .iter()
            .zip(rate)
            .filter(|(p, _)| p.contains(&l))
            .map(|(_, r)| r)
            .sum()
    };
    for (l, &c) in cap.iter().enumerate() {
        if load(l) > c + tol * c {
            return Err(format!("link {l} overloaded: {} > {c}", load(l)));
        }
    }
    for (i, p) in paths.iter().enumerate() {
        let has_bottleneck = p.iter().any(|&l| {
            let saturated = load(l) >= cap[l] - tol * cap[l];
            let largest = paths
                .iter()
                .zip(rate)
                .filter(|(q, _)| q.contains(&l))
                .all(|(_, &r)| r <= rate[i] + tol * cap[l]);
            saturated && largest
        });
        if !has_bottleneck {
            return Err(format!("flow {i} has no bottleneck link"));
        }
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `W[o] · x` with `W` row-major `[out, in]`, in f64.
fn matvec(w: &[f32], x: &[f64], out: usize) -> Vec<f64> {
    let k = x.len();
    (0..out)
        .map(|o| (0..k).map(|j| w[o * k + j] as f64 * x[j]).sum())
        .collect()
}

/// GRU step written out gate by gate.
pub fn ref_gru(x: &[f32], h: &[f32], p: &GruParams) -> Vec<f64> {
    let hd = p.hidden_dim;
    let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let hv: Vec<f64> = h.iter().map(|&v| v as f64).collect();
    let wx = matvec(&p.weight_ih, &x, 3 * hd);
    let uh = matvec(&p.weight_hh, &hv, 3 * hd);
    let b: Vec<f64> = p.bias.iter().map(|&v| v as f64).collect();
    (0..hd)
        .map(|j| {
            let r = sigmoid(wx[j] + uh[j] + b[j]);
            let z = sigmoid(wx[hd + j] + uh[hd + j] + b[hd + j]);
            let n = (wx[2 * hd + j] + r * uh[2 * hd + j] + b[2 * hd + j]).tanh();
            (1.0 - z) * n + z * hv[j]
        })
        .collect()
}

/// Sum-aggregation GraphSAGE layer over undirected edges.
pub fn ref_sage(n: usize, edges: &[(usize, usize)], x: &[Vec<f32>], p: &SageParams, relu: bool) -> Vec<Vec<f64>> {
    let mut nbrs = vec![std::collections::BTreeSet::new(); n];
    for &(a, b) in edges {
        nbrs[a].insert(b);
        nbrs[b].insert(a);
    }
    (0..n)
        .map(|v| {
            let own: Vec<f64> = x[v].iter().map(|&t| t as f64).collect();
            let mut agg = vec![0.0; p.in_dim];
            for &u in &nbrs[v] {
                for (a, &t) in agg.iter_mut().zip(&x[u]) {
                    *a += t as f64;
                }
            }
            let s = matvec(&p.weight_self, &own, p.out_dim);
            let g = matvec(&p.weight_neigh, &agg, p.out_dim);
            (0..p.out_dim)
                .map(|o| {
                    let y = s[o] + g[o] + p.bias[o] as f64;
                    if relu {
                        y.max(0.0)
                    } else {
                        y
                    }
                })
                .collect()
        })
        .collect()
}

/// Two-layer perceptron with a ReLU hidden layer.
pub fn ref_mlp(x: &[f32], p: &MlpParams) -> Vec<f64> {
    let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let h: Vec<f64> = matvec(&p.layer1.weight, &x, p.layer1.out_dim)
        .into_iter()
        .zip(&p.layer1.bias)
        .map(|(v, &b)| (v + b as f64).max(0.0))
        .collect();
    matvec(&p.layer2.weight, &h, p.layer2.out_dim)
        .into_iter()
        .zip(&p.layer2.bias)
        .map(|(v, &b)| v + b as f64)
        .collect()
}

/// Least-squares line `y = a + b x`; returns `(a, b, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// Closed-form FCTs of two equal-size flows sharing one bottleneck of
/// `c` bps, the second arriving `t1` seconds after the first while the
/// first is still active.
pub fn staggered_pair_fcts(size: f64, c: f64, t1: f64) -> (f64, f64) {
    let left_a = size - c * t1 / 8.0;
    let done_a = t1 + 2.0 * left_a * 8.0 / c;
    let sent_b = left_a;
    let done_b = done_a + (size - sent_b) * 8.0 / c;
    (done_a, done_b - t1)
}
