// FD over the normalized matrix itself: is the accumulated
// dL/d(norm) of the two-layer backward complete?

use graphtrap_core::gnn::{normalize_adjacency, Arch, LayerParams, ModelConfig, ModelState};
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

/// Forward with an arbitrary injected propagation matrix.
fn loss_with_norm(state: &ModelState, norm: &Matrix, x: &Matrix) -> f64 {
    let ws = weights(state);
    let mut z = x.clone();
    for w in &ws {
        z = numkit::relu(&matmul(norm, &matmul(&z, w).unwrap()).unwrap());
    }
    let (pooled, _) = numkit::row_max_pool(&z).unwrap();
    let logits = matmul(&pooled, &state.classifier_weight)
        .unwrap()
        .add(&state.classifier_bias)
        .unwrap();
    numkit::softmax_cross_entropy(&logits, 0).unwrap().0
}

/// Same reverse accumulation the implementation performs.
fn hand_dnorm(state: &ModelState, norm: &Matrix, x: &Matrix) -> Matrix {
    let ws = weights(state);
    let n = x.rows();
    let mut z = x.clone();
    let mut inputs = Vec::new();
    let mut pres = Vec::new();
    for w in &ws {
        inputs.push(z.clone());
        let pre = matmul(norm, &matmul(&z, w).unwrap()).unwrap();
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

fn main() {
    let cfg = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[5, 4]);
    let state = ModelState::init(&cfg, 1000).unwrap();
    let g = random_graph(4, 2000);
    let norm = normalize_adjacency(g.adjacency());
    let x = g.features();

    let analytic = hand_dnorm(&state, &norm, x);
    let h = 1e-6;
    for p in 0..4 {
        for q in 0..4 {
            let orig = norm.get(p, q);
            let mut probe = norm.clone();
            probe.set(p, q, orig + h);
            let plus = loss_with_norm(&state, &probe, x);
            probe.set(p, q, orig - h);
            let minus = loss_with_norm(&state, &probe, x);
            let fd = (plus - minus) / (2.0 * h);
            let a = analytic.get(p, q);
            let flag = if (a - fd).abs() > 1e-6 * a.abs().max(fd.abs()).max(1e-9) {
                " <-- MISMATCH"
            } else {
                ""
            };
            println!("norm ({p},{q}): analytic {a:+.9} fd {fd:+.9}{flag}");
        }
    }
}
