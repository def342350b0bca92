use rand::Rng;

use super::init::{uniform_fan_in, zero_bias};
use crate::numcore::{Graph, Real, Tensor, TensorError, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    /// `in x out`.
    pub w: Tensor<T>,
    /// `1 x out`.
    pub b: Tensor<T>,
}

/// Fully connected stack ending in a single unit, with a rectifier after
/// every layer (including the last, so estimates are never negative).
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorParams<T> {
    pub layers: Vec<DenseLayer<T>>,
}

impl<T: Real> PredictorParams<T> {
    /// `input -> hidden[0] -> ... -> 1`.
    pub fn zeros(input: usize, hidden: &[usize]) -> Self {
        let widths = Self::widths(input, hidden);
        let layers = widths
            .windows(2)
            .map(|w| DenseLayer { w: Tensor::zeros(&[w[0], w[1]]), b: zero_bias(w[1]) })
            .collect();
        Self { layers }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, hidden: &[usize], rng: &mut R) -> Self {
        let widths = Self::widths(input, hidden);
        let layers = widths
            .windows(2)
            .map(|w| DenseLayer { w: uniform_fan_in(w[0], w[1], rng), b: zero_bias(w[1]) })
            .collect();
        Self { layers }
    }

    fn widths(input: usize, hidden: &[usize]) -> Vec<usize> {
        std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(1)).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.rows()
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(k, l)| [(format!("{prefix}.{k}.W"), &l.w), (format!("{prefix}.{k}.b"), &l.b)])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }

    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> PredictorVars {
        let layers = self
            .layers
            .iter()
            .map(|l| (g.leaf(l.w.clone().with_grad(trainable)), g.leaf(l.b.clone().with_grad(trainable))))
            .collect();
        PredictorVars { layers }
    }
}

#[derive(Clone, Debug)]
pub struct PredictorVars {
    pub layers: Vec<(Var, Var)>,
}

impl PredictorVars {
    pub fn vars(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }

    /// `B x D` features to `B x 1` estimates.
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, features: Var) -> Result<Var, TensorError> {
        let mut x = features;
        for &(w, b) in &self.layers {
            let y = g.matmul(x, w)?;
            let y = g.add(y, b)?;
            x = g.relu(y)?;
        }
        Ok(x)
    }
}

/// Maps the concatenated final encoder and decoder states to one estimate.
pub fn predict_rul<T: Real>(h_last: &Tensor<T>, s_last: &Tensor<T>, params: &PredictorParams<T>) -> Result<T, TensorError> {
    if h_last.len() != s_last.len() {
        return Err(TensorError::InvalidArgument(format!(
            "encoder state has {} entries, decoder state {}",
            h_last.len(),
            s_last.len()
        )));
    }
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let joined: Vec<T> = h_last.values().iter().chain(s_last.values()).copied().collect();
    let x = g.constant(Tensor::row(joined));
    let y = vars.forward(&mut g, x)?;
    g.value(y).item()
}
