//! Randomized-subsampling defense: train and predict over randomly
//! thinned graph structures with a majority vote.
//!
//! A view keeps each existing undirected edge with probability
//! `subsample_ratio` (a ratio of 0.10 trains on 10% subsamples of the
//! structure); nodes and features are untouched. Training draws a fresh
//! view of every graph each epoch, prediction votes over independent
//! views.

use crate::gnn::{self, ModelConfig, ModelError, ModelState, TrainConfig};
use crate::graphdata::Graph;
use crate::seedmix::derive_seed;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseConfig {
    /// Fraction of the edge set each view keeps; views drop each edge
    /// with probability `1 - subsample_ratio`.
    pub subsample_ratio: f64,
    /// Views per prediction vote.
    pub num_views: usize,
    pub seed: u64,
}

impl DefenseConfig {
    /// Per-edge removal probability of one view.
    pub fn drop_probability(&self) -> f64 {
        1.0 - self.subsample_ratio
    }
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            subsample_ratio: 0.10,
            num_views: 10,
            seed: 0,
        }
    }
}

const STREAM_TRAIN_VIEW: u64 = 0x64_74;
const STREAM_VOTE_VIEW: u64 = 0x64_76;

/// One thinned view: every existing undirected edge is independently
/// removed with probability `drop_prob` under the seed.
pub fn subsample_view(g: &Graph, drop_prob: f64, seed: u64) -> Graph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = g.clone();
    for (u, v) in g.edges() {
        if rng.gen::<f64>() < drop_prob {
            out = out.flip_edge(u, v).expect("edge list pairs are valid");
        }
    }
    out
}

/// Identical to plain training except every graph is replaced by a
/// fresh subsampled view each epoch. View seeds derive from the defense
/// seed, so the optimizer stream matches plain training and a keep-all
/// ratio of 1.0 reproduces it bitwise.
pub fn train_subsampled(
    graphs: &[Graph],
    config: &ModelConfig,
    tcfg: &TrainConfig,
    dcfg: &DefenseConfig,
) -> Result<ModelState, ModelError> {
    let drop = dcfg.drop_probability();
    let base = dcfg.seed;
    let view = move |epoch: usize, idx: usize, g: &Graph| {
        subsample_view(
            g,
            drop,
            derive_seed(derive_seed(base, STREAM_TRAIN_VIEW, epoch as u64), 0, idx as u64),
        )
    };
    gnn::train_with_views(graphs, config, tcfg, Some(&view))
}

/// Majority label over the votes; ties go to the smallest label.
pub fn majority_vote(votes: &[usize], num_classes: usize) -> usize {
    let mut counts = vec![0usize; num_classes];
    for &v in votes {
        counts[v] += 1;
    }
    let mut best = 0usize;
    for (c, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = c;
        }
    }
    best
}

/// Classifies `num_views` independent subsampled views and returns the
/// majority label.
pub fn predict_voted(
    state: &ModelState,
    g: &Graph,
    dcfg: &DefenseConfig,
) -> Result<usize, ModelError> {
    let mut votes = Vec::with_capacity(dcfg.num_views);
    for view_index in 0..dcfg.num_views {
        let seed = derive_seed(
            derive_seed(dcfg.seed, STREAM_VOTE_VIEW, view_index as u64),
            0,
            g.id() as u64,
        );
        let view = subsample_view(g, dcfg.drop_probability(), seed);
        votes.push(gnn::predict(state, &view)?);
    }
    Ok(majority_vote(&votes, state.config.num_classes))
}

/// Voted accuracy over a set of graphs.
pub fn accuracy_voted(
    state: &ModelState,
    graphs: &[Graph],
    dcfg: &DefenseConfig,
) -> Result<f64, ModelError> {
    if graphs.is_empty() {
        return Err(ModelError::EmptyEvalSet);
    }
    let mut correct = 0usize;
    for g in graphs {
        if predict_voted(state, g, dcfg)? == g.label() {
            correct += 1;
        }
    }
    Ok(correct as f64 / graphs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::tests::random_graph;
    use crate::gnn::Arch;
    use crate::graphdata::{synth_dataset, ClassSpec};

    #[test]
    fn ratio_extremes() {
        let g = random_graph(8, 0.5, 2, 0, 3);
        assert_eq!(subsample_view(&g, 0.0, 1), g);
        assert_eq!(subsample_view(&g, 1.0, 1).num_edges(), 0);
    }

    #[test]
    fn views_never_add_edges() {
        for seed in 0..50 {
            let g = random_graph(8, 0.5, 2, 0, 7);
            let view = subsample_view(&g, 0.3, seed);
            for (u, v) in view.edges() {
                assert_eq!(g.adjacency().get(u, v), 1.0);
            }
        }
    }

    #[test]
    fn mean_removed_fraction_tracks_ratio() {
        let g = random_graph(10, 0.6, 2, 0, 11);
        let total = g.num_edges() as f64;
        let removed: usize = (0..1000)
            .map(|seed| g.num_edges() - subsample_view(&g, 0.3, seed).num_edges())
            .sum();
        let fraction = removed as f64 / (1000.0 * total);
        assert!((fraction - 0.3).abs() < 0.02, "removed fraction {fraction}");
    }

    #[test]
    fn keep_all_training_reproduces_plain_training() {
        let d = synth_dataset(
            &[
                ClassSpec { nodes: 8, edge_prob: 0.2, count: 8 },
                ClassSpec { nodes: 8, edge_prob: 0.6, count: 8 },
            ],
            3,
            5,
        )
        .unwrap();
        let config = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[6, 4]);
        let tcfg = TrainConfig { epochs: 4, seed: 9, ..TrainConfig::default() };
        let dcfg = DefenseConfig { subsample_ratio: 1.0, num_views: 5, seed: 123 };
        let plain = gnn::train(d.graphs(), &config, &tcfg).unwrap();
        let defended = train_subsampled(d.graphs(), &config, &tcfg, &dcfg).unwrap();
        assert_eq!(plain, defended);

        // And voting over identical views equals the plain prediction.
        for g in d.graphs().iter().take(4) {
            assert_eq!(
                predict_voted(&plain, g, &dcfg).unwrap(),
                gnn::predict(&plain, g).unwrap()
            );
        }
    }

    #[test]
    fn subsampled_training_is_deterministic() {
        let d = synth_dataset(
            &[
                ClassSpec { nodes: 8, edge_prob: 0.2, count: 6 },
                ClassSpec { nodes: 8, edge_prob: 0.6, count: 6 },
            ],
            3,
            6,
        )
        .unwrap();
        let config = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[6, 4]);
        let tcfg = TrainConfig { epochs: 3, seed: 2, ..TrainConfig::default() };
        let dcfg = DefenseConfig { subsample_ratio: 0.8, num_views: 3, seed: 8 };
        assert_eq!(
            train_subsampled(d.graphs(), &config, &tcfg, &dcfg).unwrap(),
            train_subsampled(d.graphs(), &config, &tcfg, &dcfg).unwrap()
        );
    }

    #[test]
    fn subsampled_training_does_not_beat_plain_training_by_much() {
        let d = synth_dataset(
            &[
                ClassSpec { nodes: 12, edge_prob: 0.2, count: 25 },
                ClassSpec { nodes: 12, edge_prob: 0.6, count: 25 },
            ],
            4,
            13,
        )
        .unwrap();
        let config = ModelConfig::new(Arch::Gcn, 4, 2);
        let tcfg = TrainConfig { seed: 4, ..TrainConfig::default() };
        let dcfg = DefenseConfig::default();
        let plain = gnn::train(d.graphs(), &config, &tcfg).unwrap();
        let defended = train_subsampled(d.graphs(), &config, &tcfg, &dcfg).unwrap();
        let plain_acc = gnn::accuracy(&plain, d.graphs()).unwrap();
        let defended_acc = gnn::accuracy(&defended, d.graphs()).unwrap();
        assert!(
            defended_acc <= plain_acc + 0.05,
            "defended {defended_acc} vs plain {plain_acc}"
        );
    }

    #[test]
    fn majority_vote_examples() {
        assert_eq!(majority_vote(&[1, 1, 0], 2), 1);
        assert_eq!(majority_vote(&[0, 1], 2), 0); // tie -> smallest
        assert_eq!(majority_vote(&[2, 2, 2], 3), 2);
    }

    #[test]
    fn single_view_vote_equals_single_view_prediction() {
        let config = ModelConfig::new(Arch::Gcn, 2, 2).with_widths(&[4]);
        let state = ModelState::init(&config, 3).unwrap();
        let g = random_graph(7, 0.5, 2, 0, 21);
        let dcfg = DefenseConfig { subsample_ratio: 0.6, num_views: 1, seed: 17 };
        let seed = derive_seed(derive_seed(17, STREAM_VOTE_VIEW, 0), 0, g.id() as u64);
        let view = subsample_view(&g, 0.4, seed);
        assert_eq!(
            predict_voted(&state, &g, &dcfg).unwrap(),
            gnn::predict(&state, &view).unwrap()
        );
    }
}
