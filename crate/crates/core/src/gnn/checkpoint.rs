//! Model checkpoints: a self-describing JSON envelope with the config,
//! tensor shapes and little-endian 64-bit float payloads in base64.
//! Round-trips are bit-exact.

use super::{GatHead, LayerParams, ModelConfig, ModelError, ModelState};
use crate::numkit::Matrix;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

const FORMAT: &str = "graphtrap-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
    /// Little-endian f64 bytes, base64.
    data: String,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    tensors: Vec<TensorRecord>,
}

fn encode(name: &str, m: &Matrix) -> TensorRecord {
    let mut bytes = Vec::with_capacity(m.values().len() * 8);
    for v in m.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    TensorRecord {
        name: name.to_string(),
        rows: m.rows(),
        cols: m.cols(),
        data: B64.encode(bytes),
    }
}

fn decode(record: &TensorRecord) -> Result<Matrix, ModelError> {
    let bytes = B64
        .decode(&record.data)
        .map_err(|e| ModelError::BadCheckpoint(format!("tensor {}: {e}", record.name)))?;
    if bytes.len() != record.rows * record.cols * 8 {
        return Err(ModelError::BadCheckpoint(format!(
            "tensor {}: {} bytes for {}x{}",
            record.name,
            bytes.len(),
            record.rows,
            record.cols
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(record.rows, record.cols, values)
        .map_err(|e| ModelError::BadCheckpoint(e.to_string()))
}

/// Named tensors in canonical order.
fn named_tensors(state: &ModelState) -> Vec<(String, &Matrix)> {
    let mut out = Vec::new();
    for (l, layer) in state.layers.iter().enumerate() {
        match layer {
            LayerParams::Dense { weight } | LayerParams::Sage { weight } => {
                out.push((format!("layer{l}.weight"), weight));
            }
            LayerParams::Gat { heads, projection } => {
                for (h, head) in heads.iter().enumerate() {
                    out.push((format!("layer{l}.head{h}.weight"), &head.weight));
                    out.push((format!("layer{l}.head{h}.attention"), &head.attention));
                }
                out.push((format!("layer{l}.projection"), projection));
            }
        }
    }
    out.push(("classifier.weight".to_string(), &state.classifier_weight));
    out.push(("classifier.bias".to_string(), &state.classifier_bias));
    out
}

pub fn model_to_json(state: &ModelState) -> serde_json::Value {
    let checkpoint = Checkpoint {
        format: FORMAT.to_string(),
        version: VERSION,
        config: state.config.clone(),
        tensors: named_tensors(state)
            .into_iter()
            .map(|(name, m)| encode(&name, m))
            .collect(),
    };
    serde_json::to_value(checkpoint).expect("checkpoint serialization cannot fail")
}

pub fn model_from_json(value: &serde_json::Value) -> Result<ModelState, ModelError> {
    let checkpoint: Checkpoint = serde_json::from_value(value.clone())
        .map_err(|e| ModelError::BadCheckpoint(e.to_string()))?;
    if checkpoint.format != FORMAT || checkpoint.version != VERSION {
        return Err(ModelError::BadCheckpoint(format!(
            "unsupported format {}/{}",
            checkpoint.format, checkpoint.version
        )));
    }
    let mut tensors: BTreeMap<String, Matrix> = BTreeMap::new();
    for record in &checkpoint.tensors {
        tensors.insert(record.name.clone(), decode(record)?);
    }
    let mut take = |name: String, rows: usize, cols: usize| -> Result<Matrix, ModelError> {
        let m = tensors
            .remove(&name)
            .ok_or_else(|| ModelError::BadCheckpoint(format!("missing tensor {name}")))?;
        if m.shape() != (rows, cols) {
            return Err(ModelError::BadCheckpoint(format!(
                "tensor {name}: shape {:?}, expected ({rows}, {cols})",
                m.shape()
            )));
        }
        Ok(m)
    };

    let config = checkpoint.config;
    config.validate()?;
    let mut layers = Vec::with_capacity(config.layer_widths.len());
    let mut in_dim = config.input_dim;
    for (l, &width) in config.layer_widths.iter().enumerate() {
        let layer = match config.arch {
            super::Arch::Gcn | super::Arch::Gin => LayerParams::Dense {
                weight: take(format!("layer{l}.weight"), in_dim, width)?,
            },
            super::Arch::Gsage => LayerParams::Sage {
                weight: take(format!("layer{l}.weight"), 2 * in_dim, width)?,
            },
            super::Arch::Gat => {
                let mut heads = Vec::with_capacity(config.gat_heads);
                for h in 0..config.gat_heads {
                    heads.push(GatHead {
                        weight: take(format!("layer{l}.head{h}.weight"), in_dim, width)?,
                        attention: take(format!("layer{l}.head{h}.attention"), 1, 2 * width)?,
                    });
                }
                LayerParams::Gat {
                    heads,
                    projection: take(format!("layer{l}.projection"), config.gat_heads * width, width)?,
                }
            }
        };
        layers.push(layer);
        in_dim = width;
    }
    let classifier_weight = take("classifier.weight".to_string(), in_dim, config.num_classes)?;
    let classifier_bias = take("classifier.bias".to_string(), 1, config.num_classes)?;
    if let Some(extra) = tensors.keys().next() {
        return Err(ModelError::BadCheckpoint(format!("unexpected tensor {extra}")));
    }
    Ok(ModelState {
        config,
        layers,
        classifier_weight,
        classifier_bias,
    })
}

pub fn save_model(state: &ModelState, path: &Path) -> Result<(), ModelError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let json = serde_json::to_string_pretty(&model_to_json(state)).expect("valid json");
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelState, ModelError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ModelError::BadCheckpoint(e.to_string()))?;
    model_from_json(&value)
}
