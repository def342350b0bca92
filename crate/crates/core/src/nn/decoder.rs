use rand::Rng;

use super::init::{uniform_fan_in, zero_bias};
use super::lstm::{LstmParams, LstmVars};
use crate::numcore::{Graph, Real, Tensor, TensorError, Var};

/// Decoder LSTM over `[y_in ; z]` followed by the `hidden -> n` output map.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams<T> {
    /// Input width is `n + hidden`.
    pub cell: LstmParams<T>,
    /// `hidden x n`.
    pub out_w: Tensor<T>,
    /// `1 x n`.
    pub out_b: Tensor<T>,
}

impl<T: Real> DecoderParams<T> {
    pub fn zeros(n: usize, hidden: usize) -> Self {
        Self { cell: LstmParams::zeros(n + hidden, hidden), out_w: Tensor::zeros(&[hidden, n]), out_b: zero_bias(n) }
    }

    pub fn init<R: Rng + ?Sized>(n: usize, hidden: usize, forget_bias: f64, rng: &mut R) -> Self {
        let cell = LstmParams::init(n + hidden, hidden, forget_bias, rng);
        Self { cell, out_w: uniform_fan_in(hidden, n, rng), out_b: zero_bias(n) }
    }

    pub fn output_dim(&self) -> usize {
        self.out_w.cols()
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        let mut out = self.cell.named(&format!("{prefix}.cell"));
        out.push((format!("{prefix}.out_W"), &self.out_w));
        out.push((format!("{prefix}.out_b"), &self.out_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = self.cell.tensors_mut();
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }

    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> DecoderVars {
        let cell = self.cell.bind(g, trainable);
        let out_w = g.leaf(self.out_w.clone().with_grad(trainable));
        let out_b = g.leaf(self.out_b.clone().with_grad(trainable));
        DecoderVars { cell, out_w, out_b }
    }
}

#[derive(Clone, Debug)]
pub struct DecoderVars {
    pub cell: LstmVars,
    pub out_w: Var,
    pub out_b: Var,
}

impl DecoderVars {
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.cell.vars();
        v.push(self.out_w);
        v.push(self.out_b);
        v
    }

    /// One decoding step; returns `(s_i, c_i, y_hat_next)`.
    pub fn step<T: Real>(
        &self,
        g: &mut Graph<T>,
        y_in: Var,
        context: Var,
        s_prev: Var,
        c_prev: Var,
    ) -> Result<(Var, Var, Var), TensorError> {
        let input = g.concat(&[y_in, context], 1)?;
        let (s, c) = self.cell.step(g, input, s_prev, c_prev)?;
        let y = g.matmul(s, self.out_w)?;
        let y = g.add(y, self.out_b)?;
        Ok((s, c, y))
    }
}

/// `(y_hat, s, c)` of one decoder step.
pub type DecodeOutput<T> = (Tensor<T>, Tensor<T>, Tensor<T>);

/// Vector form of [`DecoderVars::step`]; all outputs are `[1, dim]` rows.
pub fn decode_step<T: Real>(
    y_in: &Tensor<T>,
    context: &Tensor<T>,
    s_prev: &Tensor<T>,
    c_prev: &Tensor<T>,
    params: &DecoderParams<T>,
) -> Result<DecodeOutput<T>, TensorError> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let mut row = |t: &Tensor<T>| -> Result<Var, TensorError> { Ok(g.constant(t.clone().reshape(vec![1, t.len()])?)) };
    let (y, z, s, c) = (row(y_in)?, row(context)?, row(s_prev)?, row(c_prev)?);
    let (s, c, y) = vars.step(&mut g, y, z, s, c)?;
    Ok((g.value(s).clone(), g.value(c).clone(), g.value(y).clone()))
}
