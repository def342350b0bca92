use rand::Rng;

use super::init::{uniform_fan_in, zero_bias};
use crate::numcore::{Graph, Real, Tensor, TensorError, Var};

/// Gate order used by every array below: input, forget, output, candidate.
pub const GATES: [&str; 4] = ["i", "f", "o", "c"];

/// Weights of one LSTM cell, shared across all time steps.
///
/// `w[k]` is `input_dim x hidden`, `u[k]` is `hidden x hidden` and `b[k]`
/// is `1 x hidden`, with `k` indexing [`GATES`].
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    pub w: [Tensor<T>; 4],
    pub u: [Tensor<T>; 4],
    pub b: [Tensor<T>; 4],
}

impl<T: Real> LstmParams<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Tensor::zeros(&[input_dim, hidden])),
            u: std::array::from_fn(|_| Tensor::zeros(&[hidden, hidden])),
            b: std::array::from_fn(|_| zero_bias(hidden)),
        }
    }

    /// Fan-in uniform weights; biases zero except the forget gate, which
    /// starts at `forget_bias`.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, forget_bias: f64, rng: &mut R) -> Self {
        let w = std::array::from_fn(|_| uniform_fan_in(input_dim, hidden, rng));
        let u = std::array::from_fn(|_| uniform_fan_in(hidden, hidden, rng));
        let mut b: [Tensor<T>; 4] = std::array::from_fn(|_| zero_bias(hidden));
        b[1] = Tensor::full(&[1, hidden], T::from_f64(forget_bias));
        Self { w, u, b }
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u[0].rows()
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::with_capacity(12);
        for (kind, arr) in [("W", &self.w), ("U", &self.u), ("b", &self.b)] {
            for (gate, t) in GATES.iter().zip(arr.iter()) {
                out.push((format!("{prefix}.{kind}_{gate}"), t));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.w.iter_mut().chain(self.u.iter_mut()).chain(self.b.iter_mut()).collect()
    }

    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> LstmVars {
        let mut leaf = |t: &Tensor<T>| g.leaf(t.clone().with_grad(trainable));
        LstmVars {
            w: std::array::from_fn(|k| leaf(&self.w[k])),
            u: std::array::from_fn(|k| leaf(&self.u[k])),
            b: std::array::from_fn(|k| leaf(&self.b[k])),
        }
    }
}

/// [`LstmParams`] placed on a graph.
#[derive(Clone, Debug)]
pub struct LstmVars {
    pub w: [Var; 4],
    pub u: [Var; 4],
    pub b: [Var; 4],
}

impl LstmVars {
    pub fn vars(&self) -> Vec<Var> {
        self.w.iter().chain(&self.u).chain(&self.b).copied().collect()
    }

    fn gate<T: Real>(&self, g: &mut Graph<T>, k: usize, x: Var, h: Var) -> Result<Var, TensorError> {
        let xw = g.matmul(x, self.w[k])?;
        let hu = g.matmul(h, self.u[k])?;
        let pre = g.add(xw, hu)?;
        g.add(pre, self.b[k])
    }

    /// One step on a batch: `x` is `B x input_dim`, `h`/`c` are `B x hidden`.
    pub fn step<T: Real>(&self, g: &mut Graph<T>, x: Var, h: Var, c: Var) -> Result<(Var, Var), TensorError> {
        let i = self.gate(g, 0, x, h)?;
        let i = g.sigmoid(i)?;
        let f = self.gate(g, 1, x, h)?;
        let f = g.sigmoid(f)?;
        let o = self.gate(g, 2, x, h)?;
        let o = g.sigmoid(o)?;
        let cand = self.gate(g, 3, x, h)?;
        let cand = g.tanh(cand)?;

        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        let c_next = g.add(keep, write)?;
        let squashed = g.tanh(c_next)?;
        let h_next = g.mul(o, squashed)?;
        Ok((h_next, c_next))
    }

    /// Unrolls over `inputs` (one `B x input_dim` node per step) from zero
    /// state; returns hidden and cell states for every step.
    pub fn unroll<T: Real>(&self, g: &mut Graph<T>, inputs: &[Var]) -> Result<(Vec<Var>, Vec<Var>), TensorError> {
        let first = *inputs.first().ok_or(TensorError::EmptyInput { op: "encode" })?;
        let batch = g.value(first).rows();
        let hidden = g.value(self.u[0]).rows();
        let mut h = g.constant(Tensor::zeros(&[batch, hidden]));
        let mut c = g.constant(Tensor::zeros(&[batch, hidden]));
        let mut hs = Vec::with_capacity(inputs.len());
        let mut cs = Vec::with_capacity(inputs.len());
        for &x in inputs {
            (h, c) = self.step(g, x, h, c)?;
            hs.push(h);
            cs.push(c);
        }
        Ok((hs, cs))
    }
}

fn as_row<T: Real>(t: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (r, c) = t.dims2();
    if r != 1 {
        return Err(TensorError::InvalidArgument(format!("expected a vector, got shape {:?}", t.shape())));
    }
    t.clone().reshape(vec![1, c])
}

/// Single LSTM step on vectors; returns `(h_t, c_t)` as `[1, hidden]` rows.
pub fn lstm_cell_step<T: Real>(
    x: &Tensor<T>,
    h_prev: &Tensor<T>,
    c_prev: &Tensor<T>,
    params: &LstmParams<T>,
) -> Result<(Tensor<T>, Tensor<T>), TensorError> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let x = g.constant(as_row(x)?);
    let h = g.constant(as_row(h_prev)?);
    let c = g.constant(as_row(c_prev)?);
    let (h, c) = vars.step(&mut g, x, h, c)?;
    Ok((g.value(h).clone(), g.value(c).clone()))
}

/// Runs the encoder over an `n x T` window (columns are time steps).
///
/// Returns `(H, C)`, both `hidden x T`.
pub fn encode<T: Real>(window: &Tensor<T>, params: &LstmParams<T>) -> Result<(Tensor<T>, Tensor<T>), TensorError> {
    if window.shape().len() != 2 {
        return Err(TensorError::InvalidArgument(format!("window must be n x T, got {:?}", window.shape())));
    }
    let steps = window.cols();
    let cols = window.transpose();
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let inputs: Vec<Var> = (0..steps)
        .map(|t| g.constant(Tensor::from_parts(vec![1, cols.cols()], cols.values()[t * cols.cols()..(t + 1) * cols.cols()].to_vec())))
        .collect();
    let (hs, cs) = vars.unroll(&mut g, &inputs)?;
    let stack = |g: &Graph<T>, vs: &[Var]| {
        let rows: Vec<T> = vs.iter().flat_map(|v| g.value(*v).values().to_vec()).collect();
        Tensor::from_parts(vec![vs.len(), rows.len() / vs.len()], rows).transpose()
    };
    Ok((stack(&g, &hs), stack(&g, &cs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn zero_everything_gives_zero_state() {
        let p = LstmParams::<f64>::zeros(3, 2);
        let z3 = Tensor::zeros(&[1, 3]);
        let z2 = Tensor::zeros(&[1, 2]);
        let (h, c) = lstm_cell_step(&z3, &z2, &z2, &p).unwrap();
        assert!(h.values().iter().chain(c.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_hand_evaluation() {
        // n = p = 1, all weights 1, biases 0, x = 1, h = c = 0.
        let mut p = LstmParams::<f64>::zeros(1, 1);
        for t in p.w.iter_mut().chain(p.u.iter_mut()) {
            *t = Tensor::full(&[1, 1], 1.0);
        }
        let one = Tensor::full(&[1, 1], 1.0);
        let zero = Tensor::zeros(&[1, 1]);
        let (h, c) = lstm_cell_step(&one, &zero, &zero, &p).unwrap();
        // Frozen with a 30-digit scalar evaluation of the gate equations.
        let (c_oracle, h_oracle) = (0.556_769_941_145_939_7, 0.369_606_352_935_705_8);
        assert!((c.values()[0] - c_oracle).abs() < 1e-12);
        assert!((h.values()[0] - h_oracle).abs() < 1e-12);
        assert!((c.values()[0] - 0.5569).abs() < 5e-4);
        assert!((h.values()[0] - 0.3700).abs() < 5e-4);
        assert!((c.values()[0] - sig(1.0) * 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn saturated_forget_gate_preserves_memory() {
        let mut p = LstmParams::<f64>::zeros(2, 3);
        p.b[1] = Tensor::full(&[1, 3], 100.0);
        let x = Tensor::zeros(&[1, 2]);
        let h = Tensor::zeros(&[1, 3]);
        let c = Tensor::matrix(1, 3, vec![0.7, -0.2, 1.5]).unwrap();
        let (_, c_next) = lstm_cell_step(&x, &h, &c, &p).unwrap();
        for (a, b) in c_next.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = LstmParams::<f64>::zeros(3, 2);
        let x = Tensor::zeros(&[1, 4]);
        let z = Tensor::zeros(&[1, 2]);
        assert!(lstm_cell_step(&x, &z, &z, &p).is_err());
    }

    #[test]
    fn encode_single_step_matches_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = LstmParams::<f64>::init(3, 4, 0.0, &mut rng);
        let x = Tensor::matrix(3, 1, vec![0.2, -0.4, 0.9]).unwrap();
        let (h_enc, c_enc) = encode(&x, &p).unwrap();
        let z = Tensor::zeros(&[1, 4]);
        let (h, c) = lstm_cell_step(&x.transpose(), &z, &z, &p).unwrap();
        assert_eq!(h_enc.values(), h.values());
        assert_eq!(c_enc.values(), c.values());
    }

    #[test]
    fn encode_shapes_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = LstmParams::<f32>::init(14, 32, 0.0, &mut rng);
        let x = crate::nn::init::uniform_fan_in::<f32, _>(14, 30, &mut rng);
        let (h1, c1) = encode(&x, &p).unwrap();
        let (h2, _) = encode(&x, &p).unwrap();
        assert_eq!(h1.shape(), &[32, 30]);
        assert_eq!(c1.shape(), &[32, 30]);
        assert_eq!(h1, h2);
        assert!(h1.values().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn encode_rejects_empty_window() {
        let g: &mut Graph<f64> = &mut Graph::new();
        let p = LstmParams::<f64>::zeros(1, 1).bind(g, false);
        assert!(matches!(p.unroll(g, &[]), Err(TensorError::EmptyInput { .. })));
    }
}
