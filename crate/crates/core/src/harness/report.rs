//! Experiment reports: per-cell records plus per-(victim, sweep) means,
//! emitted as nested JSON and flat CSV.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const CSV_HEADER: &str =
    "dataset,attack,victim,widths,seed,sweep_param,clean_acc,backdoor_acc,asr,cad,runtime_s";

/// One (attack, victim, seed, sweep point) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub dataset: String,
    pub attack: String,
    pub victim: String,
    pub widths: Vec<usize>,
    pub seed: u64,
    pub sweep_param: Option<String>,
    pub clean_acc: f64,
    pub backdoor_acc: f64,
    pub asr: f64,
    pub cad: f64,
    pub runtime_s: f64,
}

impl CellRecord {
    fn widths_label(&self) -> String {
        self.widths
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.attack,
            self.victim,
            self.widths_label(),
            self.seed,
            self.sweep_param.as_deref().unwrap_or(""),
            self.clean_acc,
            self.backdoor_acc,
            self.asr,
            self.cad,
            self.runtime_s,
        )
    }
}

/// Mean over seeds for one (victim, sweep point) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub victim: String,
    pub sweep_param: Option<String>,
    pub seeds: usize,
    pub mean_clean_acc: f64,
    pub mean_backdoor_acc: f64,
    pub mean_asr: f64,
    pub mean_cad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub attack: String,
    pub experiment: String,
    pub sweep_axis: Option<String>,
    pub seeds: Vec<u64>,
    pub surrogate: serde_json::Value,
    pub cells: Vec<CellRecord>,
    pub aggregates: Vec<Aggregate>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    pub(crate) fn new(
        dataset: &str,
        attack: &str,
        experiment: &str,
        sweep_axis: Option<&str>,
        seeds: &[u64],
        surrogate: serde_json::Value,
        cells: Vec<CellRecord>,
    ) -> ExperimentReport {
        let mut report = ExperimentReport {
            dataset: dataset.to_string(),
            attack: attack.to_string(),
            experiment: experiment.to_string(),
            sweep_axis: sweep_axis.map(str::to_string),
            seeds: seeds.to_vec(),
            surrogate,
            cells,
            aggregates: Vec::new(),
            wall_clock_s: 0.0,
        };
        report.aggregates = report.compute_aggregates();
        report
    }

    fn compute_aggregates(&self) -> Vec<Aggregate> {
        let mut groups: BTreeMap<(String, Option<String>), Vec<&CellRecord>> = BTreeMap::new();
        for cell in &self.cells {
            groups
                .entry((cell.victim.clone(), cell.sweep_param.clone()))
                .or_default()
                .push(cell);
        }
        groups
            .into_iter()
            .map(|((victim, sweep_param), cells)| {
                let n = cells.len() as f64;
                Aggregate {
                    victim,
                    sweep_param,
                    seeds: cells.len(),
                    mean_clean_acc: cells.iter().map(|c| c.clean_acc).sum::<f64>() / n,
                    mean_backdoor_acc: cells.iter().map(|c| c.backdoor_acc).sum::<f64>() / n,
                    mean_asr: cells.iter().map(|c| c.asr).sum::<f64>() / n,
                    mean_cad: cells.iter().map(|c| c.cad).sum::<f64>() / n,
                }
            })
            .collect()
    }

    /// Mean over seeds for one victim at a given sweep point.
    pub fn mean_for(&self, victim: &str, sweep_param: Option<&str>) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.victim == victim && a.sweep_param.as_deref() == sweep_param)
    }

    /// Full JSON document with the flat cells, the aggregates and a
    /// nested dataset -> attack -> victim -> seed view.
    pub fn to_json(&self) -> serde_json::Value {
        let mut nested: BTreeMap<String, BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<serde_json::Value>>>>> =
            BTreeMap::new();
        for cell in &self.cells {
            nested
                .entry(cell.dataset.clone())
                .or_default()
                .entry(cell.attack.clone())
                .or_default()
                .entry(cell.victim.clone())
                .or_default()
                .entry(cell.seed.to_string())
                .or_default()
                .push(serde_json::json!({
                    "sweep_param": cell.sweep_param,
                    "widths": cell.widths,
                    "clean_acc": cell.clean_acc,
                    "backdoor_acc": cell.backdoor_acc,
                    "asr": cell.asr,
                    "cad": cell.cad,
                    "runtime_s": cell.runtime_s,
                }));
        }
        let mut value = serde_json::to_value(self).expect("report serializes");
        value["results"] = serde_json::to_value(nested).expect("nested view serializes");
        value
    }

    /// Flat CSV, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&cell.csv_row());
            out.push('\n');
        }
        out
    }

    /// Plot-ready per-sweep-point means; present only for sweep runs.
    pub fn sweep_csv(&self) -> Option<String> {
        self.sweep_axis.as_ref()?;
        let mut out = String::from(
            "sweep_param,victim,seeds,mean_clean_acc,mean_backdoor_acc,mean_asr,mean_cad\n",
        );
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                a.sweep_param.as_deref().unwrap_or(""),
                a.victim,
                a.seeds,
                a.mean_clean_acc,
                a.mean_backdoor_acc,
                a.mean_asr,
                a.mean_cad,
            );
        }
        Some(out)
    }

    /// Copy with every wall-clock field zeroed; two runs of the same
    /// seeds agree byte-for-byte on this form.
    pub fn canonical(&self) -> ExperimentReport {
        let mut out = self.clone();
        out.wall_clock_s = 0.0;
        for cell in &mut out.cells {
            cell.runtime_s = 0.0;
        }
        out
    }

    /// Writes report.json, report.csv and (for sweeps) report_sweep.csv.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        fs::write(dir.join("report.json"), json + "\n")?;
        fs::write(dir.join("report.csv"), self.to_csv())?;
        if let Some(sweep) = self.sweep_csv() {
            fs::write(dir.join("report_sweep.csv"), sweep)?;
        }
        Ok(())
    }
}
