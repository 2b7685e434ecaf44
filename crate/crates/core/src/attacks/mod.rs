//! Trigger generation and training-set poisoning.
//!
//! The main attack relabels candidate graphs to the target class, trains
//! a surrogate GCN on the poisoned training mix, and then flips the M
//! undirected edges with the highest score S = grad (x) (2A - 1), where
//! grad is the surrogate's loss gradient with respect to the adjacency
//! matrix. Positive scores mark flips that move each entry against its
//! gradient, shrinking the loss toward the target class.
//!
//! Baselines: a fixed Erdős–Rényi subgraph implanted as a universal
//! trigger, and uniformly random edge flips under the same budget.

mod baselines;

pub use baselines::{
    er_subgraph_trigger, implant_subgraph, random_flip_poison, subgraph_poison, SubgraphTrigger,
};

use crate::gnn::{self, backward, forward, Arch, ModelConfig, ModelState, TrainConfig};
use crate::graphdata::{DataError, Dataset, Graph, SplitPlan};
use crate::numkit::{Matrix, NumError};
use crate::seedmix::derive_seed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("surrogate must be a GCN, got {0}")]
    SurrogateNotGcn(Arch),
    #[error("budget {budget} exceeds the {pairs} available node pairs")]
    BudgetTooLarge { budget: usize, pairs: usize },
    #[error("trigger needs {trigger} nodes but the graph has {nodes}")]
    TriggerTooLarge { trigger: usize, nodes: usize },
    #[error("trigger size must be at least 2, got {0}")]
    TriggerTooSmall(usize),
    #[error("trigger density {0} outside [0,1]")]
    BadDensity(f64),
    #[error("split was computed for target class {split}, attack uses {attack}")]
    TargetClassMismatch { split: usize, attack: usize },
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] gnn::ModelError),
}

/// Sentinel planted on the score-matrix diagonal so self-loops can never
/// be selected.
pub const DIAGONAL_SENTINEL: f64 = f64::NEG_INFINITY;

/// Loss gradient of the surrogate's cross-entropy toward `y_t` with
/// respect to the graph's adjacency matrix; symmetric, zero diagonal.
pub fn attack_gradient(
    surrogate: &ModelState,
    g: &Graph,
    y_t: usize,
) -> Result<Matrix, AttackError> {
    if surrogate.config.arch != Arch::Gcn {
        return Err(AttackError::SurrogateNotGcn(surrogate.config.arch));
    }
    let trace = forward(surrogate, g)?;
    let grads = backward(surrogate, &trace, y_t, true)?;
    Ok(grads.adjacency.expect("requested adjacency gradient"))
}

/// S = grad (x) (2A - 1): the gradient's sign is kept on existing edges
/// and inverted on absent ones. The diagonal is forced to the sentinel.
pub fn score_matrix(grad: &Matrix, adjacency: &Matrix) -> Result<Matrix, AttackError> {
    let mut scores = grad.hadamard(&adjacency.map(|a| 2.0 * a - 1.0))?;
    for u in 0..scores.rows().min(scores.cols()) {
        scores.set(u, u, DIAGONAL_SENTINEL);
    }
    Ok(scores)
}

/// The `budget` undirected pairs (u < v) with the largest scores; ties
/// break lexicographically on (u, v).
pub fn select_perturbations(
    scores: &Matrix,
    budget: usize,
) -> Result<Vec<(usize, usize)>, AttackError> {
    let n = scores.rows();
    let pairs = n * (n - 1) / 2;
    if budget > pairs {
        return Err(AttackError::BudgetTooLarge { budget, pairs });
    }
    let mut ranked: Vec<(f64, usize, usize)> = Vec::with_capacity(pairs);
    for u in 0..n {
        for v in (u + 1)..n {
            ranked.push((scores.get(u, v), u, v));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| (a.1, a.2).cmp(&(b.1, b.2))));
    Ok(ranked[..budget].iter().map(|&(_, u, v)| (u, v)).collect())
}

/// Flip list for one poisoned graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipEntry {
    pub graph_id: usize,
    pub flips: Vec<(usize, usize)>,
}

/// Everything needed to reapply a poisoning run: target class, budget,
/// seed, surrogate reference and the per-graph flip lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisonPlan {
    pub attack: String,
    pub target_class: usize,
    pub budget: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate_checkpoint: Option<String>,
    pub entries: Vec<FlipEntry>,
}

/// Poisoned graphs for the training mix and for inference-time ASR
/// evaluation, plus the plan that produced them.
#[derive(Debug, Clone)]
pub struct PoisonOutcome {
    pub train_graphs: Vec<Graph>,
    pub test_graphs: Vec<Graph>,
    pub plan: PoisonPlan,
    /// Surrogate model when the attack trains one.
    pub surrogate: Option<ModelState>,
}

/// Settings shared by every attack kind; the trigger fields only apply
/// to the subgraph baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub budget: usize,
    pub trigger_size: usize,
    pub trigger_density: f64,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            budget: 5,
            trigger_size: 5,
            trigger_density: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Trap,
    Subgraph,
    Random,
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::Trap => "trap",
            AttackKind::Subgraph => "subgraph",
            AttackKind::Random => "random",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "trap" => Ok(AttackKind::Trap),
            "subgraph" => Ok(AttackKind::Subgraph),
            "random" => Ok(AttackKind::Random),
            other => Err(format!("unknown attack {other:?}")),
        }
    }
}

/// Dispatches a full poisoning run for the requested attack.
#[allow(clippy::too_many_arguments)]
pub fn poison(
    kind: AttackKind,
    d: &Dataset,
    split: &SplitPlan,
    y_t: usize,
    params: &AttackParams,
    surrogate_config: &ModelConfig,
    surrogate_train: &TrainConfig,
    seed: u64,
) -> Result<PoisonOutcome, AttackError> {
    match kind {
        AttackKind::Trap => trap_poison(d, split, y_t, params.budget, surrogate_config, surrogate_train),
        AttackKind::Subgraph => {
            subgraph_poison(d, split, y_t, params.trigger_size, params.trigger_density, seed)
        }
        AttackKind::Random => random_flip_poison(d, split, y_t, params.budget, seed),
    }
}

/// Full trigger-generation flow: relabel the candidates, train the
/// surrogate on clean-train plus the relabeled poison-train half, then
/// flip the top-scoring M pairs of every candidate.
pub fn trap_poison(
    d: &Dataset,
    split: &SplitPlan,
    y_t: usize,
    budget: usize,
    surrogate_config: &ModelConfig,
    surrogate_train: &TrainConfig,
) -> Result<PoisonOutcome, AttackError> {
    if split.target_class != y_t {
        return Err(AttackError::TargetClassMismatch {
            split: split.target_class,
            attack: y_t,
        });
    }
    if surrogate_config.arch != Arch::Gcn {
        return Err(AttackError::SurrogateNotGcn(surrogate_config.arch));
    }

    // Surrogate training mix: clean train + relabeled poison-train.
    let mut surrogate_set = d.subset(&split.train_ids);
    surrogate_set.extend(
        split
            .poison_train_ids
            .iter()
            .map(|&id| d.graph(id).with_label(y_t)),
    );
    let surrogate = gnn::train(&surrogate_set, surrogate_config, surrogate_train)?;

    let mut entries = Vec::new();
    let mut poison_half = |ids: &[usize]| -> Result<Vec<Graph>, AttackError> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let relabeled = d.graph(id).with_label(y_t);
            let grad = attack_gradient(&surrogate, &relabeled, y_t)?;
            let scores = score_matrix(&grad, relabeled.adjacency())?;
            let flips = select_perturbations(&scores, budget)?;
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
            attack: AttackKind::Trap.name().to_string(),
            target_class: y_t,
            budget,
            seed: surrogate_train.seed,
            surrogate_checkpoint: None,
            entries,
        },
        surrogate: Some(surrogate),
    })
}

/// Seed stream ids used by the seeded baselines.
pub(crate) const STREAM_TRIGGER: u64 = 0x7472;
pub(crate) const STREAM_HOSTS: u64 = 0x686f;
pub(crate) const STREAM_FLIPS: u64 = 0x666c;

pub(crate) fn per_candidate_seed(base: u64, stream: u64, graph_id: usize) -> u64 {
    derive_seed(base, stream, graph_id as u64)
}

#[cfg(test)]
mod tests;
