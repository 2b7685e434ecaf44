//! Subgraph-trigger and random-flip baselines.

use super::{
    per_candidate_seed, AttackError, AttackKind, FlipEntry, PoisonOutcome, PoisonPlan,
    STREAM_FLIPS, STREAM_HOSTS, STREAM_TRIGGER,
};
use crate::graphdata::{Dataset, Graph, SplitPlan};
use crate::numkit::Matrix;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// A fixed trigger subgraph: symmetric zero-diagonal adjacency on
/// `size` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphTrigger {
    pub size: usize,
    pub density: f64,
    pub seed: u64,
    /// Undirected edges (i < j) in local trigger coordinates.
    pub edges: Vec<(usize, usize)>,
}

impl SubgraphTrigger {
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.size, self.size);
        for &(i, j) in &self.edges {
            a.set(i, j, 1.0);
            a.set(j, i, 1.0);
        }
        a
    }
}

/// Erdős–Rényi trigger: each of the C(size, 2) pairs is included
/// independently with probability `density`.
pub fn er_subgraph_trigger(
    size: usize,
    density: f64,
    seed: u64,
) -> Result<SubgraphTrigger, AttackError> {
    if size < 2 {
        return Err(AttackError::TriggerTooSmall(size));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(AttackError::BadDensity(density));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..size {
        for j in (i + 1)..size {
            if rng.gen::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    Ok(SubgraphTrigger {
        size,
        density,
        seed,
        edges,
    })
}

/// Implants the trigger into `size` host nodes drawn uniformly under the
/// seed: the induced adjacency among the hosts is overwritten by the
/// trigger, edges outside the host set and all features are untouched.
pub fn implant_subgraph(
    g: &Graph,
    trigger: &SubgraphTrigger,
    seed: u64,
) -> Result<Graph, AttackError> {
    let n = g.num_nodes();
    if n < trigger.size {
        return Err(AttackError::TriggerTooLarge {
            trigger: trigger.size,
            nodes: n,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let hosts = rand::seq::index::sample(&mut rng, n, trigger.size).into_vec();
    let trigger_adj = trigger.adjacency();

    let mut out = g.clone();
    for i in 0..trigger.size {
        for j in (i + 1)..trigger.size {
            let (u, v) = (hosts[i], hosts[j]);
            if out.adjacency().get(u, v) != trigger_adj.get(i, j) {
                out = out.flip_edge(u, v)?;
            }
        }
    }
    Ok(out)
}

/// Universal-trigger baseline: one ER trigger per run, implanted into
/// every relabeled candidate with per-candidate host choices.
pub fn subgraph_poison(
    d: &Dataset,
    split: &SplitPlan,
    y_t: usize,
    trigger_size: usize,
    trigger_density: f64,
    seed: u64,
) -> Result<PoisonOutcome, AttackError> {
    if split.target_class != y_t {
        return Err(AttackError::TargetClassMismatch {
            split: split.target_class,
            attack: y_t,
        });
    }
    let trigger = er_subgraph_trigger(
        trigger_size,
        trigger_density,
        per_candidate_seed(seed, STREAM_TRIGGER, 0),
    )?;

    let mut entries = Vec::new();
    let mut poison_half = |ids: &[usize]| -> Result<Vec<Graph>, AttackError> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let relabeled = d.graph(id).with_label(y_t);
            let poisoned =
                implant_subgraph(&relabeled, &trigger, per_candidate_seed(seed, STREAM_HOSTS, id))?;
            entries.push(FlipEntry {
                graph_id: id,
                flips: adjacency_diff(&relabeled, &poisoned),
            });
            out.push(poisoned);
        }
        Ok(out)
    };
    let train_graphs = poison_half(&split.poison_train_ids)?;
    let test_graphs = poison_half(&split.poison_test_ids)?;

    Ok(PoisonOutcome {
        train_graphs,
        test_graphs,
        plan: PoisonPlan {
            attack: AttackKind::Subgraph.name().to_string(),
            target_class: y_t,
            budget: 0,
            seed,
            surrogate_checkpoint: None,
            entries,
        },
        surrogate: None,
    })
}

/// Control baseline: flip `budget` uniformly random distinct pairs per
/// relabeled candidate.
pub fn random_flip_poison(
    d: &Dataset,
    split: &SplitPlan,
    y_t: usize,
    budget: usize,
    seed: u64,
) -> Result<PoisonOutcome, AttackError> {
    if split.target_class != y_t {
        return Err(AttackError::TargetClassMismatch {
            split: split.target_class,
            attack: y_t,
        });
    }
    let mut entries = Vec::new();
    let mut poison_half = |ids: &[usize]| -> Result<Vec<Graph>, AttackError> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let relabeled = d.graph(id).with_label(y_t);
            let n = relabeled.num_nodes();
            let pairs = n * (n - 1) / 2;
            if budget > pairs {
                return Err(AttackError::BudgetTooLarge { budget, pairs });
            }
            let mut rng =
                ChaCha20Rng::seed_from_u64(per_candidate_seed(seed, STREAM_FLIPS, id));
            let chosen = rand::seq::index::sample(&mut rng, pairs, budget).into_vec();
            let mut flips: Vec<(usize, usize)> =
                chosen.into_iter().map(|k| pair_from_index(k, n)).collect();
            flips.sort_unstable();
            let mut poisoned = relabeled;
            for &(u, v) in &flips {
                poisoned = poisoned.flip_edge(u, v)?;
            }
            entries.push(FlipEntry { graph_id: id, flips });
            out.push(poisoned);
        }
        Ok(out)
    };
    let train_graphs = poison_half(&split.poison_train_ids)?;
    let test_graphs = poison_half(&split.poison_test_ids)?;

    Ok(PoisonOutcome {
        train_graphs,
        test_graphs,
        plan: PoisonPlan {
            attack: AttackKind::Random.name().to_string(),
            target_class: y_t,
            budget,
            seed,
            surrogate_checkpoint: None,
            entries,
        },
        surrogate: None,
    })
}

/// Maps a linear index in 0..C(n,2) to the k-th pair (u, v) with u < v
/// in lexicographic order.
pub(crate) fn pair_from_index(mut k: usize, n: usize) -> (usize, usize) {
    for u in 0..n {
        let row = n - u - 1;
        if k < row {
            return (u, u + 1 + k);
        }
        k -= row;
    }
    unreachable!("index within C(n,2)")
}

/// Undirected pairs on which two graphs differ.
pub(crate) fn adjacency_diff(a: &Graph, b: &Graph) -> Vec<(usize, usize)> {
    let n = a.num_nodes();
    let mut out = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if a.adjacency().get(u, v) != b.adjacency().get(u, v) {
                out.push((u, v));
            }
        }
    }
    out
}
