use rand::Rng;

use super::{FeatureSet, ModelConfig, ModelError, ModelParameters, ModelVars};
use crate::data::WindowSample;
use crate::nn::context;
use crate::numcore::{dropout_mask, Graph, Real, Tensor, Var};

/// Windows rearranged for batched unrolling.
#[derive(Clone, Debug)]
pub struct Batch<T> {
    /// `T` frames of `B x n`.
    pub frames: Vec<Tensor<T>>,
    /// `T` reconstruction targets of `B x n`.
    pub targets: Vec<Tensor<T>>,
    /// `B x 1` RUL labels.
    pub labels: Tensor<T>,
}

impl<T: Real> Batch<T> {
    pub fn from_samples(samples: &[&WindowSample]) -> Result<Self, ModelError> {
        let first = samples.first().ok_or(ModelError::EmptyDataset)?;
        let (n, width) = (first.n_channels(), first.width());
        if let Some(bad) = samples.iter().find(|s| s.n_channels() != n || s.width() != width) {
            return Err(ModelError::Shape(format!(
                "engine {} window is {}x{}, batch expects {n}x{width}",
                bad.engine_id,
                bad.n_channels(),
                bad.width()
            )));
        }
        let b = samples.len();
        let column = |t: usize, pick: &dyn Fn(&WindowSample) -> &Tensor<f64>| {
            let mut values = Vec::with_capacity(b * n);
            for s in samples {
                let m = pick(s);
                values.extend((0..n).map(|c| T::from_f64(m.get(c, t))));
            }
            Tensor::matrix(b, n, values).expect("non-empty batch")
        };
        let frames = (0..width).map(|t| column(t, &|s| &s.x)).collect();
        let targets = (0..width).map(|t| column(t, &|s| &s.y)).collect();
        let labels = Tensor::matrix(b, 1, samples.iter().map(|s| T::from_f64(s.rul as f64)).collect()).expect("non-empty batch");
        Ok(Self { frames, targets, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Graph nodes produced by [`build_forward`].
#[derive(Clone, Debug)]
pub struct ForwardNodes {
    /// One `B x n` reconstruction per decoder step.
    pub y_hat: Vec<Var>,
    /// `B x 1` estimates, before clamping.
    pub rul: Var,
    /// One `B x T` weight matrix per decoder step; empty without attention.
    pub attention: Vec<Var>,
}

/// Wires encoder, attention, decoder and predictor on `g`.
///
/// With `teacher` set, decoder step `i + 1` receives the true target of step
/// `i`; otherwise it receives its own previous output. Passing `dropout`
/// enables inverted dropout on encoder states and predictor features.
pub fn build_forward<T: Real, R: Rng + ?Sized>(
    g: &mut Graph<T>,
    vars: &ModelVars,
    batch: &Batch<T>,
    config: &ModelConfig,
    teacher: bool,
    mut dropout: Option<&mut R>,
) -> Result<ForwardNodes, ModelError> {
    let steps = batch.frames.len();
    if steps != config.seq_len {
        return Err(ModelError::Shape(format!("window has {steps} cycles, model expects {}", config.seq_len)));
    }
    let n = batch.frames[0].cols();
    if n != config.n_sensors {
        return Err(ModelError::Shape(format!("window has {n} sensors, model expects {}", config.n_sensors)));
    }
    let rate = config.dropout_rate;
    let mut drop = |g: &mut Graph<T>, x: Var| -> Result<Var, ModelError> {
        match dropout.as_deref_mut() {
            Some(rng) if rate > 0.0 => {
                let mask = dropout_mask::<T, R>(g.value(x).shape(), rate, rng)?;
                let mask = g.constant(mask);
                Ok(g.mul(x, mask)?)
            }
            _ => Ok(x),
        }
    };

    let xs: Vec<Var> = batch.frames.iter().map(|f| g.constant(f.clone())).collect();
    let (hs, cs) = vars.encoder.unroll(g, &xs)?;
    let (h_last, c_last) = (hs[steps - 1], cs[steps - 1]);
    let memory = hs.iter().map(|&h| drop(g, h)).collect::<Result<Vec<_>, _>>()?;
    let projected = match &vars.attention {
        Some(att) => att.project_encoder(g, &memory)?,
        None => Vec::new(),
    };

    let (mut s, mut c) = (h_last, c_last);
    let mut y_in = xs[steps - 1];
    let mut y_hat = Vec::with_capacity(steps);
    let mut attention = Vec::new();
    for i in 0..steps {
        let z = match &vars.attention {
            Some(att) => {
                let a = att.weights(g, s, &projected)?;
                attention.push(a);
                context(g, a, &memory)?
            }
            None => memory[steps - 1],
        };
        let (s_next, c_next, y) = vars.decoder.step(g, y_in, z, s, c)?;
        (s, c) = (s_next, c_next);
        y_hat.push(y);
        y_in = if teacher { g.constant(batch.targets[i].clone()) } else { y };
    }

    let features = match config.feature_set {
        FeatureSet::Encoder => h_last,
        FeatureSet::Decoder => s,
        FeatureSet::Both => g.concat(&[h_last, s], 1)?,
    };
    let features = drop(g, features)?;
    let unit = vars.predictor.forward(g, features)?;
    let rul = g.scale(unit, config.effective_output_scale())?;
    Ok(ForwardNodes { y_hat, rul, attention })
}

/// Tensor-level result of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardResult<T> {
    /// `n x T` reconstruction.
    pub y_hat: Tensor<T>,
    /// Unclamped estimate.
    pub rul: T,
    /// `T x T` weights, row `i` for decoder step `i`.
    pub attention: Option<Tensor<T>>,
}

/// Runs one window without dropout; `teacher_targets` selects teacher
/// forcing, `None` decodes autoregressively.
pub fn forward_pass<T: Real>(
    params: &ModelParameters<T>,
    config: &ModelConfig,
    window: &WindowSample,
    teacher_forced: bool,
) -> Result<ForwardResult<T>, ModelError> {
    let batch = Batch::from_samples(&[window])?;
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let out = build_forward::<T, rand_chacha::ChaCha8Rng>(&mut g, &vars, &batch, config, teacher_forced, None)?;
    let (n, steps) = (config.n_sensors, config.seq_len);
    let mut y = vec![T::zero(); n * steps];
    for (t, &v) in out.y_hat.iter().enumerate() {
        for (c, &value) in g.value(v).values().iter().enumerate() {
            y[c * steps + t] = value;
        }
    }
    let attention = (!out.attention.is_empty()).then(|| {
        let values = out.attention.iter().flat_map(|&a| g.value(a).values().to_vec()).collect();
        Tensor::matrix(steps, steps, values).expect("square attention map")
    });
    Ok(ForwardResult { y_hat: Tensor::matrix(n, steps, y)?, rul: g.value(out.rul).item()?, attention })
}

/// Windows per inference graph; bounds memory on large test sets.
const INFER_CHUNK: usize = 256;

/// Autoregressive estimates clamped to `[0, rul_cap]`, one per window.
pub fn predict_batch<T: Real>(params: &ModelParameters<T>, config: &ModelConfig, windows: &[&WindowSample]) -> Result<Vec<f64>, ModelError> {
    let cap = config.rul_cap as f64;
    let mut out = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(INFER_CHUNK) {
        let batch = Batch::<T>::from_samples(chunk)?;
        let mut g = Graph::new();
        let vars = params.bind(&mut g, false);
        let nodes = build_forward::<T, rand_chacha::ChaCha8Rng>(&mut g, &vars, &batch, config, false, None)?;
        out.extend(g.value(nodes.rul).values().iter().map(|v| v.as_f64().clamp(0.0, cap)));
    }
    Ok(out)
}

/// Single-window form of [`predict_batch`].
pub fn infer<T: Real>(params: &ModelParameters<T>, config: &ModelConfig, window: &WindowSample) -> Result<f64, ModelError> {
    Ok(predict_batch(params, config, &[window])?[0])
}
