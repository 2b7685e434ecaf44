//! Graph and dataset representations, deterministic splits, TUDataset
//! flat-file ingestion and synthetic dataset generation.
//!
//! Graphs are simple undirected graphs stored as dense binary adjacency
//! matrices. Everything here is immutable after construction; mutation
//! APIs return new values.

mod tudata;

pub use tudata::{load_tudataset, save_tudataset};

use crate::numkit::Matrix;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing required file: {0}")]
    MissingFile(String),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("graph {id}: {message}")]
    InvalidGraph { id: usize, message: String },
    #[error("dataset invalid: {0}")]
    InvalidDataset(String),
    #[error("split needs at least {needed} graphs outside class {target}, found {found}")]
    TooFewCandidates {
        target: usize,
        needed: usize,
        found: usize,
    },
    #[error("split needs at least 10 graphs, dataset has {0}")]
    DatasetTooSmall(usize),
    #[error("flip_edge({u},{v}): self-loops are not allowed")]
    SelfLoop { u: usize, v: usize },
    #[error("node index {index} out of range for {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One classification instance: binary symmetric adjacency, node
/// features and a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    id: usize,
    adjacency: Matrix,
    features: Matrix,
    label: usize,
}

impl Graph {
    /// Validates the simple-undirected-graph invariants: square binary
    /// adjacency, symmetric, zero diagonal, one feature row per node.
    pub fn new(id: usize, adjacency: Matrix, features: Matrix, label: usize) -> Result<Self, DataError> {
        let n = adjacency.rows();
        let invalid = |message: String| DataError::InvalidGraph { id, message };
        if n == 0 {
            return Err(invalid("graph must have at least one node".into()));
        }
        if adjacency.cols() != n {
            return Err(invalid(format!(
                "adjacency must be square, got {}x{}",
                n,
                adjacency.cols()
            )));
        }
        for u in 0..n {
            if adjacency.get(u, u) != 0.0 {
                return Err(invalid(format!("nonzero diagonal at node {u}")));
            }
            for v in 0..n {
                let a = adjacency.get(u, v);
                if a != 0.0 && a != 1.0 {
                    return Err(invalid(format!("entry ({u},{v}) = {a} is not binary")));
                }
                if a != adjacency.get(v, u) {
                    return Err(invalid(format!("asymmetric at ({u},{v})")));
                }
            }
        }
        if features.rows() != n || features.cols() == 0 {
            return Err(invalid(format!(
                "features must be {}xd with d >= 1, got {}x{}",
                n,
                features.rows(),
                features.cols()
            )));
        }
        Ok(Graph {
            id,
            adjacency,
            features,
            label,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Copy of this graph with a different label.
    pub fn with_label(&self, label: usize) -> Graph {
        Graph {
            label,
            ..self.clone()
        }
    }

    /// New graph with the undirected edge (u,v) toggled; the original is
    /// untouched.
    pub fn flip_edge(&self, u: usize, v: usize) -> Result<Graph, DataError> {
        if u == v {
            return Err(DataError::SelfLoop { u, v });
        }
        let n = self.num_nodes();
        for &idx in [u, v].iter() {
            if idx >= n {
                return Err(DataError::NodeOutOfRange { index: idx, nodes: n });
            }
        }
        let mut adjacency = self.adjacency.clone();
        let flipped = 1.0 - adjacency.get(u, v);
        adjacency.set(u, v, flipped);
        adjacency.set(v, u, flipped);
        Ok(Graph {
            adjacency,
            ..self.clone()
        })
    }

    /// Undirected edge list as (u, v) with u < v, row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_nodes();
        let mut out = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if self.adjacency.get(u, v) == 1.0 {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.edges().len()
    }
}

/// A labelled collection of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    graphs: Vec<Graph>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(graphs: Vec<Graph>, num_classes: usize) -> Result<Self, DataError> {
        if num_classes < 2 {
            return Err(DataError::InvalidDataset(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        for g in &graphs {
            if g.label >= num_classes {
                return Err(DataError::InvalidDataset(format!(
                    "graph {} has label {} >= {} classes",
                    g.id, g.label, num_classes
                )));
            }
        }
        Ok(Dataset {
            graphs,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn graph(&self, id: usize) -> &Graph {
        &self.graphs[id]
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }

    /// Per-class graph counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for g in &self.graphs {
            counts[g.label] += 1;
        }
        counts
    }

    /// Clones the graphs with the given ids, in id-list order.
    pub fn subset(&self, ids: &[usize]) -> Vec<Graph> {
        ids.iter().map(|&i| self.graphs[i].clone()).collect()
    }
}

/// Class with the fewest graphs; ties break to the smallest class index.
pub fn target_class(d: &Dataset) -> usize {
    let counts = d.class_counts();
    let mut best = 0usize;
    for (c, &count) in counts.iter().enumerate() {
        if count < counts[best] {
            best = c;
        }
    }
    best
}

/// Deterministic partition of a dataset for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub target_class: usize,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub candidate_ids: Vec<usize>,
    pub poison_train_ids: Vec<usize>,
    pub poison_test_ids: Vec<usize>,
}

impl SplitPlan {
    /// Copy of this plan keeping only the first `k` poison-train
    /// candidates (the poisoning-rate override for sweeps). The
    /// poison-test half is untouched.
    pub fn with_poison_train_count(&self, k: usize) -> SplitPlan {
        let mut plan = self.clone();
        plan.poison_train_ids.truncate(k);
        plan.candidate_ids = plan
            .poison_train_ids
            .iter()
            .chain(plan.poison_test_ids.iter())
            .copied()
            .collect();
        plan
    }
}

/// 70/20/10 shuffle split. The 10% candidate pool is filled only with
/// graphs outside the target class (resampled from the tail of the
/// shuffled order), then halved into poison-train and poison-test.
pub fn split(d: &Dataset, y_t: usize, seed: u64) -> Result<SplitPlan, DataError> {
    let n = d.len();
    if n < 10 {
        return Err(DataError::DatasetTooSmall(n));
    }
    let n_train = (n as f64 * 0.7).floor() as usize;
    let n_test = (n as f64 * 0.2).floor() as usize;
    let n_cand = n - n_train - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    // Walk the shuffled order from the back so train/test keep its head.
    let mut candidate_ids = Vec::with_capacity(n_cand);
    let mut taken = vec![false; n];
    for &id in order.iter().rev() {
        if candidate_ids.len() == n_cand {
            break;
        }
        if d.graph(id).label() != y_t {
            candidate_ids.push(id);
            taken[id] = true;
        }
    }
    if candidate_ids.len() < n_cand {
        return Err(DataError::TooFewCandidates {
            target: y_t,
            needed: n_cand,
            found: candidate_ids.len(),
        });
    }

    let rest: Vec<usize> = order.iter().copied().filter(|&id| !taken[id]).collect();
    let train_ids = rest[..n_train].to_vec();
    let test_ids = rest[n_train..].to_vec();

    let half = candidate_ids.len().div_ceil(2);
    let poison_train_ids = candidate_ids[..half].to_vec();
    let poison_test_ids = candidate_ids[half..].to_vec();

    Ok(SplitPlan {
        seed,
        target_class: y_t,
        train_ids,
        test_ids,
        candidate_ids,
        poison_train_ids,
        poison_test_ids,
    })
}

/// Recipe of the desk-scale reference dataset: a dense class (ER 0.6)
/// as class 0 and a sparse class (ER 0.2) as class 1, 60 graphs each on
/// 12 nodes with 4 standard-normal features. The least-populated-class
/// rule ties and targets class 0, so trigger candidates come from the
/// sparse class.
pub const CANONICAL_CLASSES: [ClassSpec; 2] = [
    ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
    ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
];
pub const CANONICAL_FEATURE_DIM: usize = 4;
pub const CANONICAL_DATA_SEED: u64 = 8;

/// The reference synthetic dataset used by the evaluation suite and as
/// the default dataset of the command-line front end.
pub fn canonical_dataset() -> Dataset {
    synth_dataset(&CANONICAL_CLASSES, CANONICAL_FEATURE_DIM, CANONICAL_DATA_SEED)
        .expect("canonical recipe is valid")
}

/// Per-class recipe for the synthetic generator: node count, edge
/// probability and number of graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub nodes: usize,
    pub edge_prob: f64,
    pub count: usize,
}

/// Erdős–Rényi graphs with class-dependent density and standard-normal
/// node features; fully determined by the seed.
pub fn synth_dataset(
    classes: &[ClassSpec],
    feature_dim: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if classes.len() < 2 {
        return Err(DataError::InvalidDataset(format!(
            "need at least 2 classes, got {}",
            classes.len()
        )));
    }
    for (c, spec) in classes.iter().enumerate() {
        if !(0.0..=1.0).contains(&spec.edge_prob) {
            return Err(DataError::InvalidDataset(format!(
                "class {c}: edge_prob {} outside [0,1]",
                spec.edge_prob
            )));
        }
        if spec.nodes == 0 || spec.count == 0 {
            return Err(DataError::InvalidDataset(format!(
                "class {c}: nodes and count must be positive"
            )));
        }
    }
    if feature_dim == 0 {
        return Err(DataError::InvalidDataset("feature_dim must be >= 1".into()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut graphs = Vec::new();
    for (label, spec) in classes.iter().enumerate() {
        for _ in 0..spec.count {
            let n = spec.nodes;
            let mut adjacency = Matrix::zeros(n, n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen::<f64>() < spec.edge_prob {
                        adjacency.set(u, v, 1.0);
                        adjacency.set(v, u, 1.0);
                    }
                }
            }
            let mut features = Matrix::zeros(n, feature_dim);
            for i in 0..n {
                for j in 0..feature_dim {
                    features.set(i, j, rng.sample::<f64, _>(rand_distr::StandardNormal));
                }
            }
            let id = graphs.len();
            graphs.push(Graph::new(id, adjacency, features, label)?);
        }
    }
    Dataset::new(graphs, classes.len())
}
