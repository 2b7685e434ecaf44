//! Metrics and the experiment suite: attack effectiveness,
//! transferability, poisoning-rate and budget sweeps, and the
//! subsampling-defense evaluation.
//!
//! Every run follows the same protocol: split the dataset, poison the
//! candidate pool, train one clean and one backdoored model per victim
//! architecture from scratch (identical init seeds, so the metrics
//! isolate the poisoning effect), then measure accuracy, ASR and CAD.
//! A single experiment seed fans out into split/surrogate/attack/victim
//! sub-seeds, so any cell is reproducible in isolation.

mod report;

pub use report::{Aggregate, CellRecord, ExperimentReport, CSV_HEADER};

use crate::attacks::{self, AttackError, AttackKind, AttackParams, PoisonOutcome};
use crate::defense::{self, DefenseConfig};
use crate::gnn::{self, Arch, ModelConfig, ModelError, ModelState, TrainConfig};
use crate::graphdata::{self, DataError, Dataset, Graph, SplitPlan};
use crate::seedmix::derive_seed;
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("poisoned test set is empty")]
    EmptyPoisonSet,
    #[error("poisoned graph {id} carries label {got}, expected target class {expected}")]
    WrongPoisonLabel { id: usize, got: usize, expected: usize },
    #[error("poisoned test graph {id} leaked into the training pool")]
    LeakedTestGraph { id: usize },
    #[error("experiment needs at least one seed")]
    NoSeeds,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// Fraction of poisoned test graphs classified as the target class.
pub fn asr(state: &ModelState, poisoned_test: &[Graph], y_t: usize) -> Result<f64, HarnessError> {
    if poisoned_test.is_empty() {
        return Err(HarnessError::EmptyPoisonSet);
    }
    let mut hits = 0usize;
    for g in poisoned_test {
        if g.label() != y_t {
            return Err(HarnessError::WrongPoisonLabel {
                id: g.id(),
                got: g.label(),
                expected: y_t,
            });
        }
        if gnn::predict(state, g)? == y_t {
            hits += 1;
        }
    }
    Ok(hits as f64 / poisoned_test.len() as f64)
}

/// ASR under the voting defense.
pub fn asr_voted(
    state: &ModelState,
    poisoned_test: &[Graph],
    y_t: usize,
    dcfg: &DefenseConfig,
) -> Result<f64, HarnessError> {
    if poisoned_test.is_empty() {
        return Err(HarnessError::EmptyPoisonSet);
    }
    let mut hits = 0usize;
    for g in poisoned_test {
        if g.label() != y_t {
            return Err(HarnessError::WrongPoisonLabel {
                id: g.id(),
                got: g.label(),
                expected: y_t,
            });
        }
        if defense::predict_voted(state, g, dcfg)? == y_t {
            hits += 1;
        }
    }
    Ok(hits as f64 / poisoned_test.len() as f64)
}

/// Clean accuracy drop: clean-model accuracy minus backdoored-model
/// accuracy on clean test data. Negative values mean the backdoored
/// model scored higher.
pub fn cad(clean_acc: f64, backdoor_acc: f64) -> f64 {
    clean_acc - backdoor_acc
}

// Seed fan-out streams.
const STREAM_SPLIT: u64 = 1;
const STREAM_SURROGATE: u64 = 2;
const STREAM_ATTACK: u64 = 3;
const STREAM_VICTIM: u64 = 4;
const STREAM_DEFENSE: u64 = 5;

/// The deterministic fan-out of one experiment seed; any cell of a run
/// can be reproduced from these alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DerivedSeeds {
    pub split: u64,
    pub surrogate_train: u64,
    pub attack: u64,
}

pub fn derived_seeds(seed: u64) -> DerivedSeeds {
    DerivedSeeds {
        split: derive_seed(seed, STREAM_SPLIT, 0),
        surrogate_train: derive_seed(seed, STREAM_SURROGATE, 0),
        attack: derive_seed(seed, STREAM_ATTACK, 0),
    }
}

/// Training seed of the clean and backdoored models of one victim (both
/// use the same seed so the comparison isolates the poisoning).
pub fn victim_seed(seed: u64, victim_index: usize) -> u64 {
    derive_seed(seed, STREAM_VICTIM, victim_index as u64)
}

/// Defense seed of one victim's subsampled training and voting.
pub fn defense_seed(seed: u64, victim_index: usize) -> u64 {
    derive_seed(seed, STREAM_DEFENSE, victim_index as u64)
}

/// Resolved settings shared by all experiment runners.
#[derive(Debug, Clone)]
pub struct Lab {
    pub dataset_name: String,
    pub surrogate_widths: Vec<usize>,
    /// Victim widths when a run requests a structure mismatch.
    pub mismatched_widths: Vec<usize>,
    pub gat_heads: usize,
    pub train: TrainConfig,
    pub attack_params: AttackParams,
    /// Fixed target class; when unset the least-populated class is used.
    pub target_class: Option<usize>,
    /// Victim architectures for single-victim experiments and sweeps.
    pub victims: Vec<Arch>,
    /// Fixed poison-train count; `None` mixes the full candidate-pool
    /// half into training (the canonical 5% flow). Sweeps ignore this.
    pub poison_train_count: Option<usize>,
    /// Worker threads for the experiment grid (0 = rayon default).
    pub jobs: usize,
}

impl Default for Lab {
    fn default() -> Self {
        Lab {
            dataset_name: "dataset".to_string(),
            surrogate_widths: gnn::DEFAULT_LAYER_WIDTHS.to_vec(),
            mismatched_widths: vec![32, 16],
            gat_heads: gnn::DEFAULT_GAT_HEADS,
            train: TrainConfig::default(),
            attack_params: AttackParams::default(),
            target_class: None,
            victims: vec![Arch::Gcn],
            poison_train_count: None,
            jobs: 1,
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone)]
struct SweepPoint {
    label: Option<String>,
    budget: usize,
    poison_train_count: Option<usize>,
}

/// Prepared per-seed pipeline state shared by every victim cell.
struct SeedRun {
    y_t: usize,
    #[allow(dead_code)]
    split: SplitPlan,
    outcome: PoisonOutcome,
    clean_train: Vec<Graph>,
    poisoned_train: Vec<Graph>,
    test: Vec<Graph>,
}

impl Lab {
    fn model_config(&self, d: &Dataset, arch: Arch, widths: &[usize]) -> ModelConfig {
        let mut cfg = ModelConfig::new(arch, d.feature_dim(), d.num_classes()).with_widths(widths);
        cfg.gat_heads = self.gat_heads;
        cfg
    }

    fn resolve_target(&self, d: &Dataset) -> usize {
        self.target_class.unwrap_or_else(|| graphdata::target_class(d))
    }

    fn prepare_seed_run(
        &self,
        d: &Dataset,
        attack: AttackKind,
        seed: u64,
        point: &SweepPoint,
    ) -> Result<SeedRun, HarnessError> {
        let y_t = self.resolve_target(d);
        let sub_seeds = derived_seeds(seed);
        let mut split = graphdata::split(d, y_t, sub_seeds.split)?;
        if let Some(count) = point.poison_train_count {
            split = split.with_poison_train_count(count.min(split.poison_train_ids.len()));
        }

        let params = AttackParams {
            budget: point.budget,
            ..self.attack_params.clone()
        };
        let surrogate_cfg = self.model_config(d, Arch::Gcn, &self.surrogate_widths);
        let surrogate_tcfg = self.train.clone().with_seed(sub_seeds.surrogate_train);
        let outcome = attacks::poison(
            attack,
            d,
            &split,
            y_t,
            &params,
            &surrogate_cfg,
            &surrogate_tcfg,
            sub_seeds.attack,
        )?;

        // Poisoned test graphs must never reach any training pool.
        for &id in &split.poison_test_ids {
            if split.train_ids.contains(&id) || split.poison_train_ids.contains(&id) {
                return Err(HarnessError::LeakedTestGraph { id });
            }
        }

        let clean_train = d.subset(&split.train_ids);
        let mut poisoned_train = clean_train.clone();
        poisoned_train.extend(outcome.train_graphs.iter().cloned());
        let test = d.subset(&split.test_ids);
        Ok(SeedRun {
            y_t,
            split,
            outcome,
            clean_train,
            poisoned_train,
            test,
        })
    }

    /// Clean/backdoor training plus metrics for one victim, optionally
    /// repeated under the subsampling defense.
    #[allow(clippy::too_many_arguments)]
    fn victim_cells(
        &self,
        d: &Dataset,
        attack: AttackKind,
        run: &SeedRun,
        victim: Arch,
        victim_index: usize,
        widths: &[usize],
        seed: u64,
        point: &SweepPoint,
        dcfg: Option<&DefenseConfig>,
    ) -> Result<Vec<CellRecord>, HarnessError> {
        let cfg = self.model_config(d, victim, widths);
        let tcfg = self.train.clone().with_seed(victim_seed(seed, victim_index));
        let mut cells = Vec::new();

        let cell = |sweep: Option<String>, clean_acc: f64, backdoor_acc: f64, asr: f64, runtime_s: f64| {
            CellRecord {
                dataset: self.dataset_name.clone(),
                attack: attack.name().to_string(),
                victim: victim.name().to_string(),
                widths: widths.to_vec(),
                seed,
                sweep_param: sweep,
                clean_acc,
                backdoor_acc,
                asr,
                cad: cad(clean_acc, backdoor_acc),
                runtime_s,
            }
        };

        let start = Instant::now();
        let clean_model = gnn::train(&run.clean_train, &cfg, &tcfg)?;
        let backdoor_model = gnn::train(&run.poisoned_train, &cfg, &tcfg)?;
        let clean_acc = gnn::accuracy(&clean_model, &run.test)?;
        let backdoor_acc = gnn::accuracy(&backdoor_model, &run.test)?;
        let asr_plain = asr(&backdoor_model, &run.outcome.test_graphs, run.y_t)?;
        let plain_label = dcfg.map(|_| "undefended".to_string()).or(point.label.clone());
        cells.push(cell(
            plain_label,
            clean_acc,
            backdoor_acc,
            asr_plain,
            start.elapsed().as_secs_f64(),
        ));

        if let Some(dcfg) = dcfg {
            let start = Instant::now();
            let dcfg = DefenseConfig {
                seed: defense_seed(seed, victim_index),
                ..dcfg.clone()
            };
            let clean_defended = defense::train_subsampled(&run.clean_train, &cfg, &tcfg, &dcfg)?;
            let backdoor_defended =
                defense::train_subsampled(&run.poisoned_train, &cfg, &tcfg, &dcfg)?;
            let clean_acc = defense::accuracy_voted(&clean_defended, &run.test, &dcfg)?;
            let backdoor_acc = defense::accuracy_voted(&backdoor_defended, &run.test, &dcfg)?;
            let asr_defended = asr_voted(&backdoor_defended, &run.outcome.test_graphs, run.y_t, &dcfg)?;
            cells.push(cell(
                Some("defended".to_string()),
                clean_acc,
                backdoor_acc,
                asr_defended,
                start.elapsed().as_secs_f64(),
            ));
        }
        Ok(cells)
    }

    /// Shared grid executor: (sweep point x seed) jobs, each poisoning
    /// once and training every victim.
    #[allow(clippy::too_many_arguments)]
    fn run_grid(
        &self,
        d: &Dataset,
        attack: AttackKind,
        victims: &[Arch],
        widths: &[usize],
        experiment: &str,
        sweep_axis: Option<&str>,
        points: &[SweepPoint],
        seeds: &[u64],
        dcfg: Option<&DefenseConfig>,
    ) -> Result<ExperimentReport, HarnessError> {
        if seeds.is_empty() {
            return Err(HarnessError::NoSeeds);
        }
        let started = Instant::now();
        let jobs: Vec<(usize, u64)> = points
            .iter()
            .enumerate()
            .flat_map(|(pi, _)| seeds.iter().map(move |&s| (pi, s)))
            .collect();

        let run_job = |&(pi, seed): &(usize, u64)| -> Result<Vec<CellRecord>, HarnessError> {
            let point = &points[pi];
            let run = self.prepare_seed_run(d, attack, seed, point)?;
            let mut cells = Vec::new();
            for (vi, &victim) in victims.iter().enumerate() {
                cells.extend(self.victim_cells(d, attack, &run, victim, vi, widths, seed, point, dcfg)?);
            }
            Ok(cells)
        };

        let results: Result<Vec<Vec<CellRecord>>, HarnessError> = if self.jobs == 1 {
            jobs.iter().map(run_job).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.jobs)
                .build()
                .expect("thread pool");
            pool.install(|| jobs.par_iter().map(run_job).collect())
        };
        let cells: Vec<CellRecord> = results?.into_iter().flatten().collect();

        let mut report = ExperimentReport::new(
            &self.dataset_name,
            attack.name(),
            experiment,
            sweep_axis,
            seeds,
            serde_json::json!({
                "arch": "gcn",
                "widths": self.surrogate_widths,
                "train": self.train,
                "budget": self.attack_params.budget,
            }),
            cells,
        );
        report.wall_clock_s = started.elapsed().as_secs_f64();
        Ok(report)
    }

    /// Attack effectiveness against the surrogate-matching victim set.
    pub fn run_effectiveness(
        &self,
        d: &Dataset,
        attack: AttackKind,
        seeds: &[u64],
    ) -> Result<ExperimentReport, HarnessError> {
        let point = SweepPoint {
            label: None,
            budget: self.attack_params.budget,
            poison_train_count: self.poison_train_count,
        };
        self.run_grid(
            d,
            attack,
            &self.victims,
            &self.surrogate_widths.clone(),
            "effectiveness",
            None,
            &[point],
            seeds,
            None,
        )
    }

    /// Transferability: one poisoned training set per seed, trained into
    /// every requested victim architecture. With `same_widths` the
    /// victims copy the surrogate structure, otherwise they use the
    /// mismatched widths.
    pub fn run_transfer(
        &self,
        d: &Dataset,
        attack: AttackKind,
        victims: &[Arch],
        same_widths: bool,
        seeds: &[u64],
    ) -> Result<ExperimentReport, HarnessError> {
        let widths = if same_widths {
            self.surrogate_widths.clone()
        } else {
            self.mismatched_widths.clone()
        };
        let point = SweepPoint {
            label: None,
            budget: self.attack_params.budget,
            poison_train_count: self.poison_train_count,
        };
        self.run_grid(
            d,
            attack,
            victims,
            &widths,
            "transfer",
            None,
            &[point],
            seeds,
            None,
        )
    }

    /// Poisoning-rate sweep; each rate is the poisoned fraction of the
    /// clean training set, capped by the candidate pool.
    pub fn run_rate_sweep(
        &self,
        d: &Dataset,
        rates: &[f64],
        seeds: &[u64],
    ) -> Result<ExperimentReport, HarnessError> {
        let train_len = (d.len() as f64 * 0.7).floor();
        let points: Vec<SweepPoint> = rates
            .iter()
            .map(|&rate| SweepPoint {
                label: Some(format!("{rate}")),
                budget: self.attack_params.budget,
                poison_train_count: Some((rate * train_len).round() as usize),
            })
            .collect();
        self.run_grid(
            d,
            AttackKind::Trap,
            &self.victims,
            &self.surrogate_widths.clone(),
            "rate_sweep",
            Some("rate"),
            &points,
            seeds,
            None,
        )
    }

    /// Edge-perturbation budget sweep.
    pub fn run_budget_sweep(
        &self,
        d: &Dataset,
        budgets: &[usize],
        seeds: &[u64],
    ) -> Result<ExperimentReport, HarnessError> {
        let points: Vec<SweepPoint> = budgets
            .iter()
            .map(|&budget| SweepPoint {
                label: Some(format!("{budget}")),
                budget,
                poison_train_count: None,
            })
            .collect();
        self.run_grid(
            d,
            AttackKind::Trap,
            &self.victims,
            &self.surrogate_widths.clone(),
            "budget_sweep",
            Some("budget"),
            &points,
            seeds,
            None,
        )
    }

    /// Subsampling defense: undefended and defended cells per victim.
    pub fn run_defense(
        &self,
        d: &Dataset,
        attack: AttackKind,
        dcfg: &DefenseConfig,
        seeds: &[u64],
    ) -> Result<ExperimentReport, HarnessError> {
        let point = SweepPoint {
            label: None,
            budget: self.attack_params.budget,
            poison_train_count: self.poison_train_count,
        };
        self.run_grid(
            d,
            attack,
            &self.victims,
            &self.surrogate_widths.clone(),
            "defense",
            Some("defense"),
            &[point],
            seeds,
            Some(dcfg),
        )
    }
}
