use rand::Rng;

use super::init::{uniform_fan_in, zero_bias};
use crate::numcore::{Graph, Real, Tensor, TensorError, Var};

/// Additive alignment scorer `e_ij = v . tanh(s_{i-1} W_s + h_j W_h + b_a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    /// `hidden x width`, applied to the previous decoder state.
    pub w_s: Tensor<T>,
    /// `hidden x width`, applied to each encoder state.
    pub w_h: Tensor<T>,
    /// `1 x width`.
    pub b_a: Tensor<T>,
    /// `width x 1`.
    pub v: Tensor<T>,
}

impl<T: Real> AttentionParams<T> {
    pub fn zeros(hidden: usize, width: usize) -> Self {
        Self {
            w_s: Tensor::zeros(&[hidden, width]),
            w_h: Tensor::zeros(&[hidden, width]),
            b_a: zero_bias(width),
            v: Tensor::zeros(&[width, 1]),
        }
    }

    pub fn init<R: Rng + ?Sized>(hidden: usize, width: usize, rng: &mut R) -> Self {
        Self {
            w_s: uniform_fan_in(hidden, width, rng),
            w_h: uniform_fan_in(hidden, width, rng),
            b_a: zero_bias(width),
            v: uniform_fan_in(width, 1, rng),
        }
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        vec![
            (format!("{prefix}.W_s"), &self.w_s),
            (format!("{prefix}.W_h"), &self.w_h),
            (format!("{prefix}.b_a"), &self.b_a),
            (format!("{prefix}.v"), &self.v),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.w_s, &mut self.w_h, &mut self.b_a, &mut self.v]
    }

    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> AttentionVars {
        let mut leaf = |t: &Tensor<T>| g.leaf(t.clone().with_grad(trainable));
        AttentionVars { w_s: leaf(&self.w_s), w_h: leaf(&self.w_h), b_a: leaf(&self.b_a), v: leaf(&self.v) }
    }
}

#[derive(Clone, Debug)]
pub struct AttentionVars {
    pub w_s: Var,
    pub w_h: Var,
    pub b_a: Var,
    pub v: Var,
}

impl AttentionVars {
    pub fn vars(&self) -> Vec<Var> {
        vec![self.w_s, self.w_h, self.b_a, self.v]
    }

    /// `h_j W_h` for every encoder state; independent of the decoder step,
    /// so computed once per sequence.
    pub fn project_encoder<T: Real>(&self, g: &mut Graph<T>, encoder_states: &[Var]) -> Result<Vec<Var>, TensorError> {
        encoder_states.iter().map(|&h| g.matmul(h, self.w_h)).collect()
    }

    /// Softmax-normalised weights over encoder positions, `B x T`.
    pub fn weights<T: Real>(&self, g: &mut Graph<T>, s_prev: Var, projected: &[Var]) -> Result<Var, TensorError> {
        if projected.is_empty() {
            return Err(TensorError::EmptyInput { op: "attention" });
        }
        let query = g.matmul(s_prev, self.w_s)?;
        let query = g.add(query, self.b_a)?;
        let mut scores = Vec::with_capacity(projected.len());
        for &p in projected {
            let pre = g.add(p, query)?;
            let act = g.tanh(pre)?;
            scores.push(g.matmul(act, self.v)?);
        }
        let scores = g.concat(&scores, 1)?;
        g.softmax(scores)
    }
}

/// `z_i = sum_j a_ij h_j` for a `B x T` weight matrix and `T` states of `B x p`.
pub fn context<T: Real>(g: &mut Graph<T>, weights: Var, encoder_states: &[Var]) -> Result<Var, TensorError> {
    let steps = g.value(weights).cols();
    if steps != encoder_states.len() {
        return Err(TensorError::InvalidArgument(format!(
            "{} attention weights for {} encoder states",
            steps,
            encoder_states.len()
        )));
    }
    let mut acc: Option<Var> = None;
    for (j, &h) in encoder_states.iter().enumerate() {
        let a = g.slice(weights, 1, j, 1)?;
        let term = g.mul(a, h)?;
        acc = Some(match acc {
            Some(sum) => g.add(sum, term)?,
            None => term,
        });
    }
    Ok(acc.expect("at least one encoder state"))
}

fn columns<T: Real>(g: &mut Graph<T>, states: &Tensor<T>) -> Result<Vec<Var>, TensorError> {
    if states.shape().len() != 2 {
        return Err(TensorError::InvalidArgument(format!("encoder states must be p x T, got {:?}", states.shape())));
    }
    let t = states.transpose();
    let p = t.cols();
    Ok((0..t.rows()).map(|j| g.constant(Tensor::from_parts(vec![1, p], t.values()[j * p..(j + 1) * p].to_vec()))).collect())
}

/// Attention weights (length `T`) of one decoder state against `p x T`
/// encoder states.
pub fn attention_weights<T: Real>(
    s_prev: &Tensor<T>,
    encoder_states: &Tensor<T>,
    params: &AttentionParams<T>,
) -> Result<Tensor<T>, TensorError> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let hs = columns(&mut g, encoder_states)?;
    let s = g.constant(s_prev.clone().reshape(vec![1, s_prev.len()])?);
    let projected = vars.project_encoder(&mut g, &hs)?;
    let w = vars.weights(&mut g, s, &projected)?;
    g.value(w).clone().reshape(vec![hs.len()])
}

/// Weighted sum of the columns of `p x T` encoder states; returns length `p`.
pub fn context_vector<T: Real>(weights: &Tensor<T>, encoder_states: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let mut g = Graph::new();
    let hs = columns(&mut g, encoder_states)?;
    if weights.len() != hs.len() {
        return Err(TensorError::InvalidArgument(format!("{} weights for {} positions", weights.len(), hs.len())));
    }
    let w = g.constant(weights.clone().reshape(vec![1, hs.len()])?);
    let z = context(&mut g, w, &hs)?;
    g.value(z).clone().reshape(vec![encoder_states.rows()])
}
