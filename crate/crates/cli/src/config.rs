//! Run configuration: one JSON document with nested blocks, every field
//! defaulted to the reference parameter set, unknown keys rejected.
//! Dotted-path `--set` overrides are applied to the raw JSON before
//! deserialization so they go through the same validation.

use graphtrap_core::attacks::AttackKind;
use graphtrap_core::gnn::Arch;
use graphtrap_core::graphdata::{ClassSpec, CANONICAL_CLASSES, CANONICAL_DATA_SEED, CANONICAL_FEATURE_DIM};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ConfigError {
    /// Malformed JSON or unknown keys.
    Parse(String),
    /// Structurally valid but out-of-range values, with paths.
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(message) => write!(f, "{message}"),
            ConfigError::Invalid(diags) => write!(f, "{}", diags.join("; ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Synthetic,
    Tudataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetClass {
    /// The least-populated class ("min-class").
    Rule(String),
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Effectiveness,
    Transfer,
    RateSweep,
    BudgetSweep,
    Defense,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Effectiveness => "effectiveness",
            Experiment::Transfer => "transfer",
            Experiment::RateSweep => "rate_sweep",
            Experiment::BudgetSweep => "budget_sweep",
            Experiment::Defense => "defense",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Report label for this dataset.
    pub label: String,
    pub source: SourceKind,
    /// TUDataset directory and name (required for that source).
    pub dir: Option<String>,
    pub name: Option<String>,
    /// Synthetic recipe.
    pub classes: Vec<ClassSpec>,
    pub feature_dim: usize,
    pub data_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            label: "synthetic-er".to_string(),
            source: SourceKind::Synthetic,
            dir: None,
            name: None,
            classes: CANONICAL_CLASSES.to_vec(),
            feature_dim: CANONICAL_FEATURE_DIM,
            data_seed: CANONICAL_DATA_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// Undirected edge flips per poisoned graph.
    pub budget: usize,
    /// Poisoned-data rate as a fraction of the whole dataset; 0.05
    /// reproduces the canonical split flow (half the candidate pool).
    pub rate: f64,
    pub trigger_size: usize,
    pub trigger_density: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            kind: AttackKind::Trap,
            budget: 5,
            rate: 0.05,
            trigger_size: 5,
            trigger_density: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub widths: Vec<usize>,
    pub gat_heads: usize,
    /// Victim widths for structure-mismatch transfer runs.
    pub victim_widths: Vec<usize>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            widths: vec![16, 8],
            gat_heads: 3,
            victim_widths: vec![32, 16],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainBlock {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for TrainBlock {
    fn default() -> Self {
        TrainBlock {
            learning_rate: 0.02,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 100,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseBlock {
    /// Fraction of edges each subsampled view keeps.
    pub subsample_ratio: f64,
    pub num_views: usize,
}

impl Default for DefenseBlock {
    fn default() -> Self {
        DefenseBlock {
            subsample_ratio: 0.10,
            num_views: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessBlock {
    pub experiment: Experiment,
    pub victims: Vec<Arch>,
    /// Victims copy the surrogate widths; `false` switches to
    /// `model.victim_widths`.
    pub same_widths: bool,
    pub rates: Vec<f64>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for HarnessBlock {
    fn default() -> Self {
        HarnessBlock {
            experiment: Experiment::Effectiveness,
            victims: vec![Arch::Gcn],
            same_widths: true,
            rates: vec![0.01, 0.03, 0.05, 0.07],
            budgets: vec![1, 3, 5, 7],
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

/// The fully resolved run configuration; serializing it yields a
/// document that parses back to itself.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub target_class: Option<TargetClass>,
    pub attack: AttackConfig,
    pub model: ModelBlock,
    pub train: TrainBlock,
    pub defense: DefenseBlock,
    pub harness: HarnessBlock,
    pub seed: u64,
    pub out: String,
    /// Worker threads; 0 means one per processor.
    pub jobs: usize,
}

fn default_config_value() -> serde_json::Value {
    serde_json::to_value(RunConfig {
        seed: 42,
        out: "runs/exp".to_string(),
        ..RunConfig::default()
    })
    .expect("defaults serialize")
}

/// Parses one `--set path.to.key=value` override; the value is JSON
/// when it parses as JSON, a plain string otherwise.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, serde_json::Value), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override {spec:?} is not of the form path=value")))?;
    if path.is_empty() {
        return Err(ConfigError::Parse(format!("override {spec:?} has an empty path")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    Ok((path.split('.').map(str::to_string).collect(), value))
}

fn apply_override(root: &mut serde_json::Value, path: &[String], value: serde_json::Value) -> Result<(), ConfigError> {
    let mut cursor = root;
    for key in &path[..path.len() - 1] {
        if !cursor.is_object() {
            return Err(ConfigError::Parse(format!("override path {} does not name an object", key)));
        }
        cursor = cursor
            .as_object_mut()
            .unwrap()
            .entry(key.clone())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    match cursor.as_object_mut() {
        Some(map) => {
            map.insert(path.last().unwrap().clone(), value);
            Ok(())
        }
        None => Err(ConfigError::Parse(format!(
            "override path {} does not name an object",
            path.join(".")
        ))),
    }
}

/// Loads config text, applies overrides, fills defaults and validates.
pub fn resolve(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("config is not valid JSON: {e}")))?;
    if !value.is_object() {
        return Err(ConfigError::Parse("config must be a JSON object".to_string()));
    }

    // Fill defaults at the top level so partial configs resolve fully,
    // then deserialize strictly (unknown keys anywhere are rejected).
    let defaults = default_config_value();
    let map = value.as_object_mut().unwrap();
    for (key, default_value) in defaults.as_object().unwrap() {
        map.entry(key.clone()).or_insert(default_value.clone());
    }
    for spec in overrides {
        let (path, v) = parse_override(spec)?;
        apply_override(&mut value, &path, v)?;
    }

    let config: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let diagnostics = validate(&config);
    if diagnostics.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(diagnostics))
    }
}

fn validate(config: &RunConfig) -> Vec<String> {
    let mut diags = Vec::new();
    let mut check = |ok: bool, path: &str, message: String| {
        if !ok {
            diags.push(format!("{path}: {message}"));
        }
    };

    match config.dataset.source {
        SourceKind::Tudataset => {
            check(config.dataset.dir.is_some(), "dataset.dir", "required for a tudataset source".into());
            check(config.dataset.name.is_some(), "dataset.name", "required for a tudataset source".into());
        }
        SourceKind::Synthetic => {
            check(
                config.dataset.classes.len() >= 2,
                "dataset.classes",
                format!("need at least 2 classes, got {}", config.dataset.classes.len()),
            );
            for (i, class) in config.dataset.classes.iter().enumerate() {
                check(
                    (0.0..=1.0).contains(&class.edge_prob),
                    &format!("dataset.classes[{i}].edge_prob"),
                    format!("{} outside [0, 1]", class.edge_prob),
                );
                check(class.nodes >= 1, &format!("dataset.classes[{i}].nodes"), "must be positive".into());
                check(class.count >= 1, &format!("dataset.classes[{i}].count"), "must be positive".into());
            }
            check(config.dataset.feature_dim >= 1, "dataset.feature_dim", "must be positive".into());
        }
    }
    if let Some(TargetClass::Rule(rule)) = &config.target_class {
        check(rule == "min-class", "target_class", format!("unknown rule {rule:?}, expected \"min-class\""));
    }
    check(
        config.attack.rate > 0.0 && config.attack.rate <= 1.0,
        "attack.rate",
        format!("{} outside (0, 1]", config.attack.rate),
    );
    check(
        (0.0..=1.0).contains(&config.attack.trigger_density),
        "attack.trigger_density",
        format!("{} outside [0, 1]", config.attack.trigger_density),
    );
    check(config.attack.trigger_size >= 2, "attack.trigger_size", "must be at least 2".into());
    check(
        !config.model.widths.is_empty() && !config.model.widths.contains(&0),
        "model.widths",
        format!("{:?} must be nonempty positive widths", config.model.widths),
    );
    check(
        !config.model.victim_widths.is_empty() && !config.model.victim_widths.contains(&0),
        "model.victim_widths",
        format!("{:?} must be nonempty positive widths", config.model.victim_widths),
    );
    check(config.model.gat_heads >= 1, "model.gat_heads", "must be at least 1".into());
    check(config.train.learning_rate > 0.0, "train.learning_rate", "must be positive".into());
    check(config.train.batch_size >= 1, "train.batch_size", "must be at least 1".into());
    check(
        (0.0..=1.0).contains(&config.defense.subsample_ratio),
        "defense.subsample_ratio",
        format!("{} outside [0, 1]", config.defense.subsample_ratio),
    );
    check(config.defense.num_views >= 1, "defense.num_views", "must be at least 1".into());
    for (i, rate) in config.harness.rates.iter().enumerate() {
        check(
            *rate > 0.0 && *rate <= 1.0,
            &format!("harness.rates[{i}]"),
            format!("{rate} outside (0, 1]"),
        );
    }
    check(!config.harness.seeds.is_empty(), "harness.seeds", "need at least one seed".into());
    check(!config.harness.victims.is_empty(), "harness.victims", "need at least one victim".into());
    diags
}
