//! Graph-classification backdoor laboratory.
//!
//! Implements the TRAP perturbation-trigger attack (surrogate-gradient
//! score matrix plus greedy edge flips), GNN training from scratch for
//! GCN/GIN/GraphSAGE/GAT victims, subgraph and random-flip baselines, a
//! randomized-subsampling defense, and an experiment harness producing
//! ASR/CAD reports.

pub mod attacks;
pub mod defense;
pub mod gnn;
pub mod graphdata;
pub mod harness;
pub mod numkit;
pub mod seedmix;
