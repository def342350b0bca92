use std::collections::BTreeMap;

use rand::Rng;

use super::{ModelConfig, ModelError};
use crate::nn::{AttentionParams, AttentionVars, DecoderParams, DecoderVars, LstmParams, LstmVars, PredictorParams, PredictorVars};
use crate::numcore::{Graph, Real, Tensor, Var};

/// Every learnable array of one model. `attention` is absent when the
/// configuration disables attention.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters<T> {
    pub encoder: LstmParams<T>,
    pub attention: Option<AttentionParams<T>>,
    pub decoder: DecoderParams<T>,
    pub predictor: PredictorParams<T>,
}

/// [`ModelParameters`] placed on a graph.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub encoder: LstmVars,
    pub attention: Option<AttentionVars>,
    pub decoder: DecoderVars,
    pub predictor: PredictorVars,
}

impl ModelVars {
    /// Leaves in the order of [`ModelParameters::named`].
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.encoder.vars();
        if let Some(a) = &self.attention {
            v.extend(a.vars());
        }
        v.extend(self.decoder.vars());
        v.extend(self.predictor.vars());
        v
    }
}

/// Fan-in uniform weights and zero biases, drawn in a fixed order; the
/// forget gates and the predictor's output unit take their configured
/// starting biases.
pub fn init_params<T: Real, R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> ModelParameters<T> {
    let (n, p) = (config.n_sensors, config.hidden);
    let encoder = LstmParams::init(n, p, config.forget_bias, rng);
    let attention = config.use_attention.then(|| AttentionParams::init(p, config.attention_width, rng));
    let decoder = DecoderParams::init(n, p, config.forget_bias, rng);
    let mut predictor = PredictorParams::init(config.feature_dim(), &config.predictor_hidden, rng);
    let last = predictor.layers.last_mut().expect("predictor has an output layer");
    last.b = Tensor::full(&[1, 1], T::from_f64(config.output_bias_init));
    ModelParameters { encoder, attention, decoder, predictor }
}

impl<T: Real> ModelParameters<T> {
    /// All-zero parameters with the shapes `config` implies.
    pub fn zeros(config: &ModelConfig) -> Self {
        let (n, p) = (config.n_sensors, config.hidden);
        Self {
            encoder: LstmParams::zeros(n, p),
            attention: config.use_attention.then(|| AttentionParams::zeros(p, config.attention_width)),
            decoder: DecoderParams::zeros(n, p),
            predictor: PredictorParams::zeros(config.feature_dim(), &config.predictor_hidden),
        }
    }

    /// Stable `(name, tensor)` pairs; the order is part of the checkpoint
    /// format and matches [`Self::tensors_mut`] and [`ModelVars::vars`].
    pub fn named(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = self.encoder.named("encoder");
        if let Some(a) = &self.attention {
            out.extend(a.named("attention"));
        }
        out.extend(self.decoder.named("decoder"));
        out.extend(self.predictor.named("predictor"));
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = self.encoder.tensors_mut();
        if let Some(a) = &mut self.attention {
            out.extend(a.tensors_mut());
        }
        out.extend(self.decoder.tensors_mut());
        out.extend(self.predictor.tensors_mut());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> ModelVars {
        ModelVars {
            encoder: self.encoder.bind(g, trainable),
            attention: self.attention.as_ref().map(|a| a.bind(g, trainable)),
            decoder: self.decoder.bind(g, trainable),
            predictor: self.predictor.bind(g, trainable),
        }
    }

    pub fn cast<U: Real>(&self) -> ModelParameters<U> {
        let mut out = ModelParameters::<U>::zeros_like(self);
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.cast();
        }
        out
    }

    fn zeros_like<S: Real>(other: &ModelParameters<S>) -> Self {
        ModelParameters {
            encoder: LstmParams::zeros(other.encoder.input_dim(), other.encoder.hidden_dim()),
            attention: other.attention.as_ref().map(|a| AttentionParams::zeros(a.w_s.rows(), a.w_s.cols())),
            decoder: DecoderParams::zeros(other.decoder.output_dim(), other.decoder.cell.hidden_dim()),
            predictor: PredictorParams {
                layers: other
                    .predictor
                    .layers
                    .iter()
                    .map(|l| crate::nn::DenseLayer { w: Tensor::zeros(l.w.shape()), b: Tensor::zeros(l.b.shape()) })
                    .collect(),
            },
        }
    }

    /// Rebuilds parameters for `config` from named arrays; every expected
    /// name must be present with the expected shape, and no extras allowed.
    pub fn from_named(config: &ModelConfig, mut arrays: BTreeMap<String, Tensor<T>>) -> Result<Self, ModelError> {
        let mut params = Self::zeros(config);
        let names: Vec<String> = params.named().into_iter().map(|(n, _)| n).collect();
        for (name, slot) in names.iter().zip(params.tensors_mut()) {
            let t = arrays.remove(name).ok_or_else(|| ModelError::MissingArray(name.clone()))?;
            if t.shape() != slot.shape() {
                return Err(ModelError::ArrayShape { name: name.clone(), expected: slot.shape().to_vec(), found: t.shape().to_vec() });
            }
            *slot = t;
        }
        if let Some(extra) = arrays.keys().next() {
            return Err(ModelError::UnexpectedArray(extra.clone()));
        }
        Ok(params)
    }
}
