//! Adam with bias-corrected moments.

use super::tensor::Tensor;
use super::{DiffError, DiffResult};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.98, epsilon: 1e-8 }
    }
}

/// First/second moment estimates for an ordered list of parameter
/// tensors, plus the shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor<f32>>,
    v: Vec<Tensor<f32>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor<f32>]) -> Self {
        Self {
            m: params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One update over all parameters. The step counter is incremented before
/// bias correction, so the first call runs with t = 1.
pub fn adam_step(
    params: &mut [Tensor<f32>],
    grads: &[Tensor<f32>],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> DiffResult<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(DiffError::ShapeMismatch {
            op: "adam_step",
            detail: format!(
                "{} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                state.m.len()
            ),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(&mut state.v)) {
        if p.shape() != g.shape() {
            return Err(DiffError::ShapeMismatch {
                op: "adam_step",
                detail: format!("param {:?} vs grad {:?}", p.shape(), g.shape()),
            });
        }
        let (pd, gd) = (p.data_mut(), g.data());
        let (md, vd) = (m.data_mut(), v.data_mut());
        for i in 0..pd.len() {
            md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * gd[i];
            vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
            let m_hat = md[i] / bc1;
            let v_hat = vd[i] / bc2;
            pd[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(vals: &[f32]) -> Vec<Tensor<f32>> {
        vals.iter().map(|&v| Tensor::scalar(v)).collect()
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = scalars(&[0.5, -1.0]);
        let grads = scalars(&[0.0, 0.0]);
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(params[0].item(), 0.5);
        assert_eq!(params[1].item(), -1.0);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_almost_exactly_lr() {
        // m_hat = v_hat = 1 after one step with g = 1, so the update is
        // lr / (1 + eps).
        let mut params = scalars(&[0.0]);
        let grads = scalars(&[1.0]);
        let mut state = AdamState::new(&params);
        let cfg = AdamConfig::default();
        adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
        let expected = -cfg.lr / (1.0 + cfg.epsilon);
        assert!((params[0].item() - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_gradient_update_magnitude_saturates_at_lr() {
        let mut params = scalars(&[0.0]);
        let grads = scalars(&[3.0]);
        let mut state = AdamState::new(&params);
        let cfg = AdamConfig::default();
        let mut prev = params[0].item();
        for _ in 0..1000 {
            adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
            let step = params[0].item() - prev;
            assert!(step < 0.0, "update must move against the gradient");
            prev = params[0].item();
        }
        let step = {
            adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
            (params[0].item() - prev).abs()
        };
        assert!((step - cfg.lr).abs() < 1e-3 * cfg.lr, "late step {step} vs lr {}", cfg.lr);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let mut params = scalars(&[1.0]);
        let grads = scalars(&[1.0, 2.0]);
        let mut state = AdamState::new(&params);
        assert!(adam_step(&mut params, &grads, &mut state, &AdamConfig::default()).is_err());
    }
}
