// Bisects the adjacency-gradient bug: hand-computed reverse pass for a
// one- and two-layer GCN compared against the implementation and FD.

use graphtrap_core::gnn::{self, normalize_adjacency, Arch, LayerParams, ModelConfig, ModelState};
use graphtrap_core::graphdata::Graph;
use graphtrap_core::numkit::{self, matmul, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

fn random_graph(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut adjacency = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < 0.4 {
                adjacency.set(u, v, 1.0);
                adjacency.set(v, u, 1.0);
            }
        }
    }
    let mut features = Matrix::zeros(n, 3);
    for i in 0..n {
        for j in 0..3 {
            features.set(i, j, rng.gen_range(-1.5..1.5));
        }
    }
    Graph::new(0, adjacency, features, 0).unwrap()
}

fn loss_at(state: &ModelState, adjacency: &Matrix, features: &Matrix) -> f64 {
    let trace = gnn::forward_parts(state, adjacency, features).unwrap();
    numkit::softmax_cross_entropy(trace.logits(), 0).unwrap().0
}

fn weights(state: &ModelState) -> Vec<Matrix> {
    state
        .layers
        .iter()
        .map(|l| match l {
            LayerParams::Dense { weight } => weight.clone(),
            _ => unreachable!(),
        })
        .collect()
}

/// Hand-rolled forward + reverse for an L-layer GCN, returning dL/d(norm).
fn hand_dnorm(state: &ModelState, g: &Graph) -> Matrix {
    let ws = weights(state);
    let norm = normalize_adjacency(g.adjacency());
    let n = g.num_nodes();

    let mut z = g.features().clone();
    let mut inputs = Vec::new();
    let mut pres = Vec::new();
    for w in &ws {
        inputs.push(z.clone());
        let pre = matmul(&norm, &matmul(&z, w).unwrap()).unwrap();
        z = numkit::relu(&pre);
        pres.push(pre);
    }
    let (pooled, argmax) = numkit::row_max_pool(&z).unwrap();
    let logits = matmul(&pooled, &state.classifier_weight)
        .unwrap()
        .add(&state.classifier_bias)
        .unwrap();
    let (_, dlogits) = numkit::softmax_cross_entropy(&logits, 0).unwrap();
    let dpooled = matmul(&dlogits, &state.classifier_weight.transpose()).unwrap();
    let mut dz = Matrix::zeros(n, z.cols());
    for (j, &row) in argmax.iter().enumerate() {
        dz.set(row, j, dpooled.get(0, j));
    }
    let mut dnorm = Matrix::zeros(n, n);
    for l in (0..ws.len()).rev() {
        let mut dpre = dz.clone();
        for i in 0..dpre.rows() {
            for j in 0..dpre.cols() {
                if pres[l].get(i, j) <= 0.0 {
                    dpre.set(i, j, 0.0);
                }
            }
        }
        let message = matmul(&inputs[l], &ws[l]).unwrap();
        dnorm.add_scaled(&matmul(&dpre, &message.transpose()).unwrap(), 1.0).unwrap();
        let up = matmul(&norm.transpose(), &dpre).unwrap();
        dz = matmul(&up, &ws[l].transpose()).unwrap();
    }
    dnorm
}

/// Chain through the degree normalization (validated exact in isolation).
fn chain(a: &Matrix, t: &Matrix) -> Matrix {
    let n = a.rows();
    let mut tilde = a.clone();
    for u in 0..n {
        tilde.set(u, u, tilde.get(u, u) + 1.0);
    }
    let degrees: Vec<f64> = (0..n).map(|u| tilde.row(u).iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = Matrix::zeros(n, n);
    for p in 0..n {
        let mut correction = 0.0;
        for v in 0..n {
            correction += t.get(p, v) * tilde.get(p, v) * inv_sqrt[v];
            correction += t.get(v, p) * tilde.get(v, p) * inv_sqrt[v];
        }
        let correction = -0.5 * correction * inv_sqrt[p].powi(3);
        for q in 0..n {
            out.set(p, q, t.get(p, q) * inv_sqrt[p] * inv_sqrt[q] + correction);
        }
    }
    out
}

fn main() {
    for layers in [1usize, 2] {
        let widths: Vec<usize> = if layers == 1 { vec![5] } else { vec![5, 4] };
        let cfg = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&widths);
        let state = ModelState::init(&cfg, 1000).unwrap();
        let g = random_graph(4, 2000);

        let trace = gnn::forward(&state, &g).unwrap();
        let grads = gnn::backward(&state, &trace, 0, true).unwrap();
        let impl_grad = grads.adjacency.unwrap();

        let dnorm = hand_dnorm(&state, &g);
        let raw = chain(g.adjacency(), &dnorm);

        let h = 1e-6;
        println!("== {layers} layer(s)");
        for u in 0..4 {
            for v in (u + 1)..4 {
                let orig = g.adjacency().get(u, v);
                let mut p = g.adjacency().clone();
                p.set(u, v, orig + h);
                p.set(v, u, orig + h);
                let plus = loss_at(&state, &p, g.features());
                p.set(u, v, orig - h);
                p.set(v, u, orig - h);
                let minus = loss_at(&state, &p, g.features());
                let fd = (plus - minus) / (2.0 * h);
                let hand = raw.get(u, v) + raw.get(v, u);
                println!(
                    "({u},{v}): impl {:+.9} hand {:+.9} fd {:+.9}",
                    impl_grad.get(u, v),
                    hand,
                    fd
                );
            }
        }
    }
}
