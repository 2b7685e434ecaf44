//! Per-architecture forward and backward passes.

use super::{
    matmul, relu_mask_backward, Arch, GatHead, Gradients, LayerParams, ModelError, ModelState,
};
use crate::graphdata::Graph;
use crate::numkit::{self, Matrix};

const LEAKY_SLOPE: f64 = 0.2;

/// D^{-1/2}(A+I)D^{-1/2} with D the degree matrix of A+I. Entry (u,v)
/// equals (A+I)[u,v] / sqrt(d_u d_v); the +I keeps every degree >= 1
/// for binary input.
pub fn normalize_adjacency(a: &Matrix) -> Matrix {
    let n = a.rows();
    let tilde = self_loop_adjacency(a);
    let degrees: Vec<f64> = (0..n).map(|u| tilde.row(u).iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            out.set(u, v, tilde.get(u, v) * inv_sqrt[u] * inv_sqrt[v]);
        }
    }
    out
}

/// Row-normalized neighbor averaging operator: P[u,v] = A[u,v]/deg(u),
/// with zero rows for isolated nodes.
fn mean_neighbor_operator(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for u in 0..n {
        let deg: f64 = (0..n).map(|v| a.get(u, v)).sum();
        if deg > 0.0 {
            for v in 0..n {
                out.set(u, v, a.get(u, v) / deg);
            }
        }
    }
    out
}

/// A + I.
fn self_loop_adjacency(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for u in 0..a.rows() {
        out.set(u, u, out.get(u, u) + 1.0);
    }
    out
}

pub(crate) struct GatHeadCache {
    /// Q = Z W, n x width.
    projected: Matrix,
    /// Attention logits before LeakyReLU, only meaningful on the mask.
    scores_pre: Matrix,
    /// Row-softmax attention, zero outside the mask.
    attention: Matrix,
}

pub(crate) struct GatLayerCache {
    heads: Vec<GatHeadCache>,
    /// Head outputs concatenated, n x (heads*width).
    concat: Matrix,
}

pub(crate) enum PropCache {
    Gcn { norm_adj: Matrix },
    Gin { self_adj: Matrix },
    Sage { mean_prop: Matrix, concats: Vec<Matrix> },
    Gat { layers: Vec<GatLayerCache> },
}

/// Cached activations of one forward pass; everything backward needs to
/// produce exact weight gradients and, for GCN, the adjacency gradient.
pub struct ForwardTrace {
    adjacency: Matrix,
    layer_inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    prop: PropCache,
    pooled: Matrix,
    pool_argmax: Vec<usize>,
    logits: Matrix,
}

impl ForwardTrace {
    pub fn logits(&self) -> &Matrix {
        &self.logits
    }

    pub fn pooled(&self) -> &Matrix {
        &self.pooled
    }

    /// Node embeddings after the last layer (the pooling input).
    pub fn embeddings(&self) -> Matrix {
        numkit::relu(self.pre_activations.last().expect("at least one layer"))
    }
}

pub fn forward(state: &ModelState, g: &Graph) -> Result<ForwardTrace, ModelError> {
    forward_parts(state, g.adjacency(), g.features())
}

/// Forward pass on raw parts. The adjacency may carry non-binary values
/// here; finite-difference probes of the adjacency gradient rely on
/// that.
pub fn forward_parts(
    state: &ModelState,
    adjacency: &Matrix,
    features: &Matrix,
) -> Result<ForwardTrace, ModelError> {
    if features.cols() != state.config.input_dim {
        return Err(ModelError::FeatureDimMismatch {
            got: features.cols(),
            expected: state.config.input_dim,
        });
    }
    let mut layer_inputs = Vec::with_capacity(state.layers.len());
    let mut pre_activations = Vec::with_capacity(state.layers.len());

    let mut prop = match state.config.arch {
        Arch::Gcn => PropCache::Gcn {
            norm_adj: normalize_adjacency(adjacency),
        },
        Arch::Gin => PropCache::Gin {
            self_adj: self_loop_adjacency(adjacency),
        },
        Arch::Gsage => PropCache::Sage {
            mean_prop: mean_neighbor_operator(adjacency),
            concats: Vec::with_capacity(state.layers.len()),
        },
        Arch::Gat => PropCache::Gat {
            layers: Vec::with_capacity(state.layers.len()),
        },
    };

    let mut z = features.clone();
    for layer in &state.layers {
        layer_inputs.push(z.clone());
        let pre = match (&mut prop, layer) {
            (PropCache::Gcn { norm_adj }, LayerParams::Dense { weight }) => {
                matmul(norm_adj, &matmul(&z, weight)?)?
            }
            (PropCache::Gin { self_adj }, LayerParams::Dense { weight }) => {
                matmul(self_adj, &matmul(&z, weight)?)?
            }
            (PropCache::Sage { mean_prop, concats }, LayerParams::Sage { weight }) => {
                let averaged = matmul(mean_prop, &z)?;
                let concat = Matrix::hcat(&[&z, &averaged])?;
                let pre = matmul(&concat, weight)?;
                concats.push(concat);
                pre
            }
            (PropCache::Gat { layers }, LayerParams::Gat { heads, projection }) => {
                let (pre, cache) = gat_layer_forward(adjacency, &z, heads, projection)?;
                layers.push(cache);
                pre
            }
            _ => unreachable!("layer kind always matches the architecture"),
        };
        z = numkit::relu(&pre);
        pre_activations.push(pre);
    }

    let (pooled, pool_argmax) = numkit::row_max_pool(&z)?;
    let logits = matmul(&pooled, &state.classifier_weight)?.add(&state.classifier_bias)?;

    Ok(ForwardTrace {
        adjacency: adjacency.clone(),
        layer_inputs,
        pre_activations,
        prop,
        pooled,
        pool_argmax,
        logits,
    })
}

fn gat_layer_forward(
    adjacency: &Matrix,
    z: &Matrix,
    heads: &[GatHead],
    projection: &Matrix,
) -> Result<(Matrix, GatLayerCache), ModelError> {
    let n = z.rows();
    let mut head_caches = Vec::with_capacity(heads.len());
    let mut outputs = Vec::with_capacity(heads.len());
    for head in heads {
        let width = head.weight.cols();
        let q = matmul(z, &head.weight)?;
        // Split attention vector: score(u,v) = a_left . q_u + a_right . q_v.
        let mut left = vec![0.0f64; n];
        let mut right = vec![0.0f64; n];
        for u in 0..n {
            let mut l = 0.0;
            let mut r = 0.0;
            for j in 0..width {
                l += head.attention.get(0, j) * q.get(u, j);
                r += head.attention.get(0, width + j) * q.get(u, j);
            }
            left[u] = l;
            right[u] = r;
        }
        let mut scores_pre = Matrix::zeros(n, n);
        let mut attention = Matrix::zeros(n, n);
        for u in 0..n {
            // Neighbors plus self.
            let mut max_score = f64::NEG_INFINITY;
            for v in 0..n {
                if v == u || adjacency.get(u, v) != 0.0 {
                    let pre = left[u] + right[v];
                    scores_pre.set(u, v, pre);
                    let score = if pre > 0.0 { pre } else { LEAKY_SLOPE * pre };
                    if score > max_score {
                        max_score = score;
                    }
                }
            }
            let mut sum = 0.0;
            for v in 0..n {
                if v == u || adjacency.get(u, v) != 0.0 {
                    let pre = scores_pre.get(u, v);
                    let score = if pre > 0.0 { pre } else { LEAKY_SLOPE * pre };
                    let e = (score - max_score).exp();
                    attention.set(u, v, e);
                    sum += e;
                }
            }
            for v in 0..n {
                if v == u || adjacency.get(u, v) != 0.0 {
                    attention.set(u, v, attention.get(u, v) / sum);
                }
            }
        }
        outputs.push(matmul(&attention, &q)?);
        head_caches.push(GatHeadCache {
            projected: q,
            scores_pre,
            attention,
        });
    }
    let refs: Vec<&Matrix> = outputs.iter().collect();
    let concat = Matrix::hcat(&refs)?;
    let pre = matmul(&concat, projection)?;
    Ok((
        pre,
        GatLayerCache {
            heads: head_caches,
            concat,
        },
    ))
}

/// Exact reverse-mode gradients of the cross-entropy loss at `label`.
/// With `want_adjacency_grad` (GCN only) also returns dL/dA taken
/// through the degree normalization, symmetrized so that entry (u,v)
/// equals the derivative of the loss when A[u,v] and A[v,u] move
/// together, with a zero diagonal.
pub fn backward(
    state: &ModelState,
    trace: &ForwardTrace,
    label: usize,
    want_adjacency_grad: bool,
) -> Result<Gradients, ModelError> {
    let (loss, dlogits) = numkit::softmax_cross_entropy(&trace.logits, label)?;
    let mut grads = backward_from_dlogits(state, trace, &dlogits, want_adjacency_grad)?;
    grads.loss = loss;
    Ok(grads)
}

/// Backward pass from an explicit upstream logit gradient.
pub fn backward_from_dlogits(
    state: &ModelState,
    trace: &ForwardTrace,
    dlogits: &Matrix,
    want_adjacency_grad: bool,
) -> Result<Gradients, ModelError> {
    if want_adjacency_grad && state.config.arch != Arch::Gcn {
        return Err(ModelError::AdjacencyGradUnsupported(state.config.arch));
    }
    let mut grads = Gradients::zeros_like(state);

    // Classifier: logits = pooled W + b.
    grads.classifier_weight = matmul(&trace.pooled.transpose(), dlogits)?;
    grads.classifier_bias = dlogits.clone();
    let dpooled = matmul(dlogits, &state.classifier_weight.transpose())?;

    // Max pooling routes each column gradient to its argmax row.
    let top = state.layers.len() - 1;
    let n = trace.adjacency.rows();
    let mut dz = Matrix::zeros(n, trace.pre_activations[top].cols());
    for (j, &row) in trace.pool_argmax.iter().enumerate() {
        dz.set(row, j, dpooled.get(0, j));
    }

    // dL/d(normalized adjacency), accumulated across GCN layers.
    let mut dnorm = want_adjacency_grad.then(|| Matrix::zeros(n, n));

    for l in (0..state.layers.len()).rev() {
        let dpre = relu_mask_backward(&dz, &trace.pre_activations[l]);
        let z_in = &trace.layer_inputs[l];
        dz = match (&state.layers[l], &trace.prop, &mut grads.layers[l]) {
            (
                LayerParams::Dense { weight },
                PropCache::Gcn { norm_adj },
                LayerParams::Dense { weight: dweight },
            ) => {
                let up = matmul(&norm_adj.transpose(), &dpre)?;
                *dweight = matmul(&z_in.transpose(), &up)?;
                if let Some(acc) = dnorm.as_mut() {
                    let message = matmul(z_in, weight)?;
                    acc.add_scaled(&matmul(&dpre, &message.transpose())?, 1.0)?;
                }
                matmul(&up, &weight.transpose())?
            }
            (
                LayerParams::Dense { weight },
                PropCache::Gin { self_adj },
                LayerParams::Dense { weight: dweight },
            ) => {
                let up = matmul(&self_adj.transpose(), &dpre)?;
                *dweight = matmul(&z_in.transpose(), &up)?;
                matmul(&up, &weight.transpose())?
            }
            (
                LayerParams::Sage { weight },
                PropCache::Sage { mean_prop, concats },
                LayerParams::Sage { weight: dweight },
            ) => {
                *dweight = matmul(&concats[l].transpose(), &dpre)?;
                let dconcat = matmul(&dpre, &weight.transpose())?;
                let in_dim = z_in.cols();
                let direct = dconcat.col_slice(0, in_dim);
                let averaged = dconcat.col_slice(in_dim, 2 * in_dim);
                direct.add(&matmul(&mean_prop.transpose(), &averaged)?)?
            }
            (
                LayerParams::Gat { heads, projection },
                PropCache::Gat { layers },
                LayerParams::Gat { heads: dheads, projection: dprojection },
            ) => gat_layer_backward(
                &trace.adjacency,
                z_in,
                heads,
                projection,
                &layers[l],
                &dpre,
                dheads,
                dprojection,
            )?,
            _ => unreachable!("layer kind always matches the architecture"),
        };
    }

    if let Some(dnorm) = dnorm {
        grads.adjacency = Some(adjacency_grad_through_normalization(
            &trace.adjacency,
            &dnorm,
        ));
    }
    Ok(grads)
}

#[allow(clippy::too_many_arguments)]
fn gat_layer_backward(
    adjacency: &Matrix,
    z_in: &Matrix,
    heads: &[GatHead],
    projection: &Matrix,
    cache: &GatLayerCache,
    dpre: &Matrix,
    dheads: &mut [GatHead],
    dprojection: &mut Matrix,
) -> Result<Matrix, ModelError> {
    let n = z_in.rows();
    *dprojection = matmul(&cache.concat.transpose(), dpre)?;
    let dconcat = matmul(dpre, &projection.transpose())?;

    let mut dz = Matrix::zeros(n, z_in.cols());
    for (h, head) in heads.iter().enumerate() {
        let width = head.weight.cols();
        let hc = &cache.heads[h];
        let dout = dconcat.col_slice(h * width, (h + 1) * width);

        // O = alpha Q.
        let mut dq = matmul(&hc.attention.transpose(), &dout)?;
        let dalpha = matmul(&dout, &hc.projected.transpose())?;

        // Row softmax over the neighbor mask, then LeakyReLU.
        let mut dscore_row_sum = vec![0.0f64; n]; // d(left[u]) accumulator
        let mut dscore_col_sum = vec![0.0f64; n]; // d(right[v]) accumulator
        for u in 0..n {
            let mut weighted = 0.0;
            for v in 0..n {
                if v == u || adjacency.get(u, v) != 0.0 {
                    weighted += hc.attention.get(u, v) * dalpha.get(u, v);
                }
            }
            for v in 0..n {
                if v == u || adjacency.get(u, v) != 0.0 {
                    let de = hc.attention.get(u, v) * (dalpha.get(u, v) - weighted);
                    let slope = if hc.scores_pre.get(u, v) > 0.0 { 1.0 } else { LEAKY_SLOPE };
                    let dpre_score = de * slope;
                    dscore_row_sum[u] += dpre_score;
                    dscore_col_sum[v] += dpre_score;
                }
            }
        }

        // score_pre(u,v) = a_left.q_u + a_right.q_v.
        let dhead = &mut dheads[h];
        for j in 0..width {
            let mut da_left = 0.0;
            let mut da_right = 0.0;
            for u in 0..n {
                da_left += dscore_row_sum[u] * hc.projected.get(u, j);
                da_right += dscore_col_sum[u] * hc.projected.get(u, j);
            }
            dhead.attention.set(0, j, da_left);
            dhead.attention.set(0, width + j, da_right);
        }
        for u in 0..n {
            for j in 0..width {
                let extra = dscore_row_sum[u] * head.attention.get(0, j)
                    + dscore_col_sum[u] * head.attention.get(0, width + j);
                dq.set(u, j, dq.get(u, j) + extra);
            }
        }

        dhead.weight = matmul(&z_in.transpose(), &dq)?;
        dz.add_scaled(&matmul(&dq, &head.weight.transpose())?, 1.0)?;
    }
    Ok(dz)
}

/// Total derivative dL/dA from dL/d(normalized adjacency): the direct
/// numerator term plus the degree terms, then folded so entry (u,v) is
/// the derivative when A[u,v] and A[v,u] move together; diagonal zeroed.
fn adjacency_grad_through_normalization(adjacency: &Matrix, dnorm: &Matrix) -> Matrix {
    let n = adjacency.rows();
    let tilde = self_loop_adjacency(adjacency);
    let degrees: Vec<f64> = (0..n).map(|u| (0..n).map(|v| tilde.get(u, v)).sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();

    // Row correction: every entry of row p of A-tilde raises degree d_p.
    let mut row_correction = vec![0.0f64; n];
    for p in 0..n {
        let mut sum = 0.0;
        for v in 0..n {
            sum += dnorm.get(p, v) * tilde.get(p, v) * inv_sqrt[v];
            sum += dnorm.get(v, p) * tilde.get(v, p) * inv_sqrt[v];
        }
        row_correction[p] = -0.5 * sum * inv_sqrt[p].powi(3);
    }

    let mut raw = Matrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            let direct = dnorm.get(p, q) * inv_sqrt[p] * inv_sqrt[q];
            raw.set(p, q, direct + row_correction[p]);
        }
    }

    let mut out = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                out.set(u, v, raw.get(u, v) + raw.get(v, u));
            }
        }
    }
    out
}
