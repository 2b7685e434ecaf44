//! Adam with bias correction; L2 regularization enters by adding
//! `weight_decay * theta` to the gradients before the moment updates.

use super::{Gradients, ModelError, ModelState, TrainConfig};
use crate::numkit::Matrix;

/// First and second moment estimates, one pair per parameter tensor in
/// canonical order.
pub struct AdamState {
    moments: Vec<(Matrix, Matrix)>,
}

impl AdamState {
    pub fn new(state: &ModelState) -> AdamState {
        AdamState {
            moments: state
                .param_tensors()
                .iter()
                .map(|t| {
                    (
                        Matrix::zeros(t.rows(), t.cols()),
                        Matrix::zeros(t.rows(), t.cols()),
                    )
                })
                .collect(),
        }
    }
}

/// One optimizer step at time `t` (1-based, for bias correction).
pub fn adam_step(
    state: &mut ModelState,
    grads: &Gradients,
    opt: &mut AdamState,
    t: u64,
    tcfg: &TrainConfig,
) -> Result<(), ModelError> {
    debug_assert!(t >= 1);
    let bias1 = 1.0 - tcfg.beta1.powi(t as i32);
    let bias2 = 1.0 - tcfg.beta2.powi(t as i32);
    let grad_tensors = grads.param_tensors();
    for ((param, grad), (m, v)) in state
        .param_tensors_mut()
        .into_iter()
        .zip(grad_tensors)
        .zip(opt.moments.iter_mut())
    {
        for i in 0..param.rows() {
            for j in 0..param.cols() {
                let g = grad.get(i, j) + tcfg.weight_decay * param.get(i, j);
                let m_new = tcfg.beta1 * m.get(i, j) + (1.0 - tcfg.beta1) * g;
                let v_new = tcfg.beta2 * v.get(i, j) + (1.0 - tcfg.beta2) * g * g;
                m.set(i, j, m_new);
                v.set(i, j, v_new);
                let m_hat = m_new / bias1;
                let v_hat = v_new / bias2;
                let update = tcfg.learning_rate * m_hat / (v_hat.sqrt() + tcfg.epsilon);
                param.set(i, j, param.get(i, j) - update);
            }
        }
    }
    Ok(())
}
