//! GNN forward/backward/training from scratch.
//!
//! Four architectures share one two-layer skeleton (widths per layer,
//! ReLU, max pooling, fully connected classifier):
//!
//!   GCN    Z' = ReLU(D^{-1/2}(A+I)D^{-1/2} Z W)
//!   GIN    Z' = ReLU((A+I) Z W)
//!   GSAGE  Z' = ReLU([Z | mean-neighbor(Z)] W)
//!   GAT    per-head attention over neighbors-plus-self with LeakyReLU
//!          scoring (slope 0.2), heads concatenated, linear projection
//!          back to the layer width, then ReLU
//!
//! Backward passes are hand-written per layer. The GCN backward can
//! additionally produce the loss gradient with respect to the raw
//! adjacency matrix, taken through the degree normalization.

mod adam;
mod checkpoint;
mod layers;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_model, model_from_json, model_to_json, save_model};
pub use layers::{backward, backward_from_dlogits, forward, forward_parts, normalize_adjacency, ForwardTrace};

use crate::graphdata::Graph;
use crate::numkit::{self, Matrix, NumError};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("graph features have dimension {got}, model expects {expected}")]
    FeatureDimMismatch { got: usize, expected: usize },
    #[error("adjacency gradient is only supported for the GCN architecture, not {0}")]
    AdjacencyGradUnsupported(Arch),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("model config invalid: {0}")]
    BadConfig(String),
    #[error("checkpoint invalid: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    Gin,
    Gsage,
    Gat,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::Gcn, Arch::Gin, Arch::Gsage, Arch::Gat];

    pub fn name(&self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::Gin => "gin",
            Arch::Gsage => "gsage",
            Arch::Gat => "gat",
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Arch::Gcn),
            "gin" => Ok(Arch::Gin),
            "gsage" | "graphsage" | "sage" => Ok(Arch::Gsage),
            "gat" => Ok(Arch::Gat),
            other => Err(format!("unknown architecture {other:?}")),
        }
    }
}

/// Architecture descriptor: defaults follow the two-layer (16, 8)
/// setting with 3 attention heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    pub input_dim: usize,
    pub num_classes: usize,
    pub layer_widths: Vec<usize>,
    pub gat_heads: usize,
}

pub const DEFAULT_LAYER_WIDTHS: [usize; 2] = [16, 8];
pub const DEFAULT_GAT_HEADS: usize = 3;

impl ModelConfig {
    pub fn new(arch: Arch, input_dim: usize, num_classes: usize) -> Self {
        ModelConfig {
            arch,
            input_dim,
            num_classes,
            layer_widths: DEFAULT_LAYER_WIDTHS.to_vec(),
            gat_heads: DEFAULT_GAT_HEADS,
        }
    }

    pub fn with_widths(mut self, widths: &[usize]) -> Self {
        self.layer_widths = widths.to_vec();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layer_widths.is_empty() || self.layer_widths.contains(&0) {
            return Err(ModelError::BadConfig(format!(
                "layer widths must be nonempty and positive, got {:?}",
                self.layer_widths
            )));
        }
        if self.input_dim == 0 || self.num_classes < 2 {
            return Err(ModelError::BadConfig(format!(
                "need input_dim >= 1 and >= 2 classes, got d={} K={}",
                self.input_dim, self.num_classes
            )));
        }
        if self.arch == Arch::Gat && self.gat_heads == 0 {
            return Err(ModelError::BadConfig("GAT needs at least one head".into()));
        }
        Ok(())
    }
}

/// Optimizer and loop settings; defaults match the reference parameter
/// table (Adam, lr 0.02, weight decay 5e-4, batch 100, 50 epochs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.02,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 100,
            epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One attention head of a GAT layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GatHead {
    /// in_dim x width projection.
    pub weight: Matrix,
    /// 1 x 2*width attention vector, [left half | right half].
    pub attention: Matrix,
}

/// Trainable parameters of one layer. The same shapes double as the
/// gradient container.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    /// GCN and GIN: in_dim x width.
    Dense { weight: Matrix },
    /// GraphSAGE: 2*in_dim x width over [self | mean-neighbor].
    Sage { weight: Matrix },
    /// GAT: heads plus a (heads*width) x width projection.
    Gat { heads: Vec<GatHead>, projection: Matrix },
}

impl LayerParams {
    fn tensors(&self) -> Vec<&Matrix> {
        match self {
            LayerParams::Dense { weight } | LayerParams::Sage { weight } => vec![weight],
            LayerParams::Gat { heads, projection } => {
                let mut out = Vec::with_capacity(heads.len() * 2 + 1);
                for head in heads {
                    out.push(&head.weight);
                    out.push(&head.attention);
                }
                out.push(projection);
                out
            }
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        match self {
            LayerParams::Dense { weight } | LayerParams::Sage { weight } => vec![weight],
            LayerParams::Gat { heads, projection } => {
                let mut out: Vec<&mut Matrix> = Vec::with_capacity(heads.len() * 2 + 1);
                for head in heads {
                    out.push(&mut head.weight);
                    out.push(&mut head.attention);
                }
                out.push(projection);
                out
            }
        }
    }

    fn zeros_like(&self) -> LayerParams {
        match self {
            LayerParams::Dense { weight } => LayerParams::Dense {
                weight: Matrix::zeros(weight.rows(), weight.cols()),
            },
            LayerParams::Sage { weight } => LayerParams::Sage {
                weight: Matrix::zeros(weight.rows(), weight.cols()),
            },
            LayerParams::Gat { heads, projection } => LayerParams::Gat {
                heads: heads
                    .iter()
                    .map(|h| GatHead {
                        weight: Matrix::zeros(h.weight.rows(), h.weight.cols()),
                        attention: Matrix::zeros(h.attention.rows(), h.attention.cols()),
                    })
                    .collect(),
                projection: Matrix::zeros(projection.rows(), projection.cols()),
            },
        }
    }
}

/// Full parameter set of one model: layer stack plus the final fully
/// connected classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub layers: Vec<LayerParams>,
    pub classifier_weight: Matrix,
    pub classifier_bias: Matrix,
}

impl ModelState {
    /// Glorot-uniform initialization, fully determined by the seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<ModelState, ModelError> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(config.layer_widths.len());
        let mut in_dim = config.input_dim;
        for &width in &config.layer_widths {
            let layer = match config.arch {
                Arch::Gcn | Arch::Gin => LayerParams::Dense {
                    weight: glorot(in_dim, width, &mut rng),
                },
                Arch::Gsage => LayerParams::Sage {
                    weight: glorot(2 * in_dim, width, &mut rng),
                },
                Arch::Gat => {
                    let heads = (0..config.gat_heads)
                        .map(|_| GatHead {
                            weight: glorot(in_dim, width, &mut rng),
                            attention: glorot(1, 2 * width, &mut rng),
                        })
                        .collect();
                    LayerParams::Gat {
                        heads,
                        projection: glorot(config.gat_heads * width, width, &mut rng),
                    }
                }
            };
            layers.push(layer);
            in_dim = width;
        }
        Ok(ModelState {
            config: config.clone(),
            layers,
            classifier_weight: glorot(in_dim, config.num_classes, &mut rng),
            classifier_bias: Matrix::zeros(1, config.num_classes),
        })
    }

    /// All zero parameters; logits then collapse to the classifier bias.
    pub fn zeros(config: &ModelConfig) -> Result<ModelState, ModelError> {
        let mut state = ModelState::init(config, 0)?;
        for tensor in state.param_tensors_mut() {
            *tensor = Matrix::zeros(tensor.rows(), tensor.cols());
        }
        Ok(state)
    }

    /// Parameter tensors in canonical order (layers front to back, then
    /// the classifier weight and bias).
    pub fn param_tensors(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        out.push(&self.classifier_weight);
        out.push(&self.classifier_bias);
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.tensors_mut());
        }
        out.push(&mut self.classifier_weight);
        out.push(&mut self.classifier_bias);
        out
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.gen_range(-limit..limit));
        }
    }
    m
}

/// Gradients of the loss with respect to every parameter, plus the
/// optional gradient with respect to the raw adjacency matrix.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub classifier_weight: Matrix,
    pub classifier_bias: Matrix,
    pub adjacency: Option<Matrix>,
    pub loss: f64,
}

impl Gradients {
    pub fn zeros_like(state: &ModelState) -> Gradients {
        Gradients {
            layers: state.layers.iter().map(LayerParams::zeros_like).collect(),
            classifier_weight: Matrix::zeros(
                state.classifier_weight.rows(),
                state.classifier_weight.cols(),
            ),
            classifier_bias: Matrix::zeros(1, state.classifier_bias.cols()),
            adjacency: None,
            loss: 0.0,
        }
    }

    pub fn param_tensors(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        out.push(&self.classifier_weight);
        out.push(&self.classifier_bias);
        out
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.tensors_mut());
        }
        out.push(&mut self.classifier_weight);
        out.push(&mut self.classifier_bias);
        out
    }

    fn accumulate(&mut self, other: &Gradients) -> Result<(), NumError> {
        for (mine, theirs) in self.param_tensors_mut().into_iter().zip(other.param_tensors()) {
            mine.add_scaled(theirs, 1.0)?;
        }
        self.loss += other.loss;
        Ok(())
    }

    fn scale(&mut self, s: f64) {
        for tensor in self.param_tensors_mut() {
            *tensor = tensor.scale(s);
        }
        self.loss *= s;
    }
}

/// Argmax class of the logits; ties go to the smallest index.
pub fn predict(state: &ModelState, g: &Graph) -> Result<usize, ModelError> {
    let trace = forward(state, g)?;
    Ok(argmax_row(trace.logits()))
}

pub(crate) fn argmax_row(logits: &Matrix) -> usize {
    let row = logits.row(0);
    let mut best = 0usize;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of graphs whose predicted class matches their label.
pub fn accuracy(state: &ModelState, graphs: &[Graph]) -> Result<f64, ModelError> {
    if graphs.is_empty() {
        return Err(ModelError::EmptyEvalSet);
    }
    let mut correct = 0usize;
    for g in graphs {
        if predict(state, g)? == g.label() {
            correct += 1;
        }
    }
    Ok(correct as f64 / graphs.len() as f64)
}

/// Trains a fresh model: Glorot init under the config seed, shuffled
/// mini-batches per epoch, per-graph forward/backward with gradients
/// averaged over the batch, Adam updates. Pure in (graphs, configs,
/// seed): identical inputs give bitwise-identical states.
pub fn train(
    graphs: &[Graph],
    config: &ModelConfig,
    tcfg: &TrainConfig,
) -> Result<ModelState, ModelError> {
    train_with_views(graphs, config, tcfg, None)
}

/// Training loop with an optional per-epoch graph transform; the hook
/// receives (epoch, index, graph) and is how the subsampling defense
/// swaps in fresh views without touching the optimizer RNG stream.
pub fn train_with_views(
    graphs: &[Graph],
    config: &ModelConfig,
    tcfg: &TrainConfig,
    view: Option<&(dyn Fn(usize, usize, &Graph) -> Graph + Sync)>,
) -> Result<ModelState, ModelError> {
    if graphs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(tcfg.seed);
    let mut state = ModelState::init(config, rng.gen())?;
    let mut opt = AdamState::new(&state);
    let mut step = 0u64;
    let batch_size = tcfg.batch_size.max(1);

    let mut order: Vec<usize> = (0..graphs.len()).collect();
    for epoch in 0..tcfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let mut total = Gradients::zeros_like(&state);
            for &idx in batch {
                let viewed;
                let g = match view {
                    Some(f) => {
                        viewed = f(epoch, idx, &graphs[idx]);
                        &viewed
                    }
                    None => &graphs[idx],
                };
                let trace = forward(&state, g)?;
                let grads = backward(&state, &trace, g.label(), false)?;
                total.accumulate(&grads)?;
            }
            total.scale(1.0 / batch.len() as f64);
            step += 1;
            adam_step(&mut state, &total, &mut opt, step, tcfg)?;
        }
    }
    Ok(state)
}

pub(crate) fn relu_mask_backward(upstream: &Matrix, pre_activation: &Matrix) -> Matrix {
    let mut out = upstream.clone();
    for i in 0..out.rows() {
        for j in 0..out.cols() {
            if pre_activation.get(i, j) <= 0.0 {
                out.set(i, j, 0.0);
            }
        }
    }
    out
}

pub(crate) use numkit::matmul;
