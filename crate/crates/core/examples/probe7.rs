// Digs into the criterion-1 round-0 adjacency gradient discrepancy.

use graphtrap_core::gnn::{self, Arch, ModelConfig, ModelState};
use graphtrap_core::graphdata::Graph;
use graphtrap_core::numkit::{self, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

fn random_graph(n: usize, edge_prob: f64, dim: usize, label: usize, seed: u64) -> Graph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut adjacency = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < edge_prob {
                adjacency.set(u, v, 1.0);
                adjacency.set(v, u, 1.0);
            }
        }
    }
    let mut features = Matrix::zeros(n, dim);
    for i in 0..n {
        for j in 0..dim {
            features.set(i, j, rng.gen_range(-1.5..1.5));
        }
    }
    Graph::new(0, adjacency, features, label).unwrap()
}

fn loss_at(state: &ModelState, adjacency: &Matrix, features: &Matrix, label: usize) -> f64 {
    let trace = gnn::forward_parts(state, adjacency, features).unwrap();
    numkit::softmax_cross_entropy(trace.logits(), label).unwrap().0
}

fn main() {
    let cfg = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[5, 4]);
    let state = ModelState::init(&cfg, 1000).unwrap();
    let g = random_graph(4, 0.4, 3, 0, 2000);
    println!("adjacency:");
    for u in 0..4 {
        println!("  {:?}", g.adjacency().row(u));
    }
    let trace = gnn::forward(&state, &g).unwrap();
    let grads = gnn::backward(&state, &trace, 0, true).unwrap();
    let analytic = grads.adjacency.unwrap();
    println!("analytic grad (0,1) = {}", analytic.get(0, 1));
    println!("full analytic:");
    for u in 0..4 {
        println!("  {:?}", analytic.row(u));
    }

    let orig = g.adjacency().get(0, 1);
    for exp in 2..9 {
        let h = 10f64.powi(-exp);
        let mut p = g.adjacency().clone();
        p.set(0, 1, orig + h);
        p.set(1, 0, orig + h);
        let plus = loss_at(&state, &p, g.features(), 0);
        p.set(0, 1, orig - h);
        p.set(1, 0, orig - h);
        let minus = loss_at(&state, &p, g.features(), 0);
        println!("h=1e-{exp}: fd = {}", (plus - minus) / (2.0 * h));
    }

    // Directed probes around the original value.
    for (u, v) in [(0usize, 1usize), (1, 0)] {
        let h = 1e-6;
        let mut p = g.adjacency().clone();
        p.set(u, v, orig + h);
        let plus = loss_at(&state, &p, g.features(), 0);
        p.set(u, v, orig - h);
        let minus = loss_at(&state, &p, g.features(), 0);
        println!("directed ({u},{v}): fd = {}", (plus - minus) / (2.0 * h));
    }
}
