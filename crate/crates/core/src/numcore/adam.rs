use super::{Real, Tensor, TensorError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Per-parameter moment estimates.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub first_moment: Vec<Tensor<T>>,
    pub second_moment: Vec<Tensor<T>>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl<T: Real> AdamState<T> {
    /// Zeroed moments matching `params`.
    pub fn new(params: &[Tensor<T>], config: AdamConfig) -> Self {
        let zeros: Vec<Tensor<T>> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self { first_moment: zeros.clone(), second_moment: zeros, step_count: 0, config }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<T: Real>(
    params: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
    learning_rate: f64,
) -> Result<(), TensorError> {
    if !learning_rate.is_finite() || learning_rate <= 0.0 {
        return Err(TensorError::InvalidArgument(format!("learning rate must be positive, got {learning_rate}")));
    }
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(TensorError::InvalidArgument(format!(
            "adam: {} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.first_moment) {
        if !p.same_shape(g) {
            return Err(TensorError::shape("adam_step", p, g));
        }
        if !p.same_shape(m) {
            return Err(TensorError::shape("adam_step", p, m));
        }
    }

    state.step_count += 1;
    let AdamConfig { beta1, beta2, epsilon } = state.config;
    let t = state.step_count as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    let (b1, b2, eps) = (T::from_f64(beta1), T::from_f64(beta2), T::from_f64(epsilon));
    let (lr, c1, c2) = (T::from_f64(learning_rate), T::from_f64(correction1), T::from_f64(correction2));
    let one = T::one();

    for (i, param) in params.iter_mut().enumerate() {
        let g = grads[i].values();
        let m = state.first_moment[i].values_mut();
        let v = state.second_moment[i].values_mut();
        for (k, w) in param.values_mut().iter_mut().enumerate() {
            m[k] = b1 * m[k] + (one - b1) * g[k];
            v[k] = b2 * v[k] + (one - b2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
