use rand::Rng;

use super::{build_forward, init_params, joint_loss_graph, Batch, ModelConfig, ModelError, ModelParameters, ModelVars};
use crate::nn::{AttentionVars, DecoderVars, LstmVars, PredictorVars};
use crate::numcore::{grad_check, GradCheckReport, Graph, OpKind, RngStream, SeedSplitter, Tensor, Var};

impl ModelVars {
    /// Reassembles vars from leaves listed in [`ModelParameters::named`]
    /// order for parameters shaped like `template`.
    pub fn from_leaves<T: crate::numcore::Real>(template: &ModelParameters<T>, leaves: &[Var]) -> Result<Self, ModelError> {
        let expected = template.tensors().len();
        if leaves.len() != expected {
            return Err(ModelError::Shape(format!("{} leaves for {expected} parameter arrays", leaves.len())));
        }
        let mut it = leaves.iter().copied();
        let mut take = || it.next().expect("length checked above");
        let mut lstm = || LstmVars { w: std::array::from_fn(|_| take()), u: std::array::from_fn(|_| take()), b: std::array::from_fn(|_| take()) };
        let encoder = lstm();
        let attention = template.attention.is_some().then(|| AttentionVars { w_s: take(), w_h: take(), b_a: take(), v: take() });
        let cell = LstmVars { w: std::array::from_fn(|_| take()), u: std::array::from_fn(|_| take()), b: std::array::from_fn(|_| take()) };
        let decoder = DecoderVars { cell, out_w: take(), out_b: take() };
        let predictor = PredictorVars { layers: template.predictor.layers.iter().map(|_| (take(), take())).collect() };
        Ok(Self { encoder, attention, decoder, predictor })
    }
}

const KINK_MARGIN: f64 = 0.05;
const KINK_REDRAWS: usize = 200;

fn min_rectifier_input(params: &ModelParameters<f64>, batch: &Batch<f64>, config: &ModelConfig) -> Result<f64, ModelError> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    build_forward::<f64, rand_chacha::ChaCha8Rng>(&mut g, &vars, batch, config, config.teacher_forcing(), None)?;
    let mut min = f64::INFINITY;
    for node in g.nodes() {
        if node.op_kind() == OpKind::Relu {
            let input = g.value(node.inputs()[0]);
            min = input.values().iter().fold(min, |m, v| m.min(v.abs()));
        }
    }
    Ok(min)
}

/// Finite-difference check of the joint loss of a freshly initialised model
/// on a random batch, in 64-bit precision without dropout. Biases are
/// randomised so that no rectifier sits near its kink.
///
/// Labels are drawn in `[0, 1]` and the output scale in `config` is used as
/// given, so callers should keep it near 1 to avoid round-off dominating.
pub fn check_model_gradients(config: &ModelConfig, batch_size: usize, epsilon: f64) -> Result<GradCheckReport, ModelError> {
    let issues = config.validate();
    if !issues.is_empty() {
        return Err(ModelError::Config(issues));
    }
    if batch_size == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let seeds = SeedSplitter::new(config.seed);
    let mut rng = seeds.stream(RngStream::Synthesis);
    let (n, steps) = (config.n_sensors, config.seq_len);
    let mut frame = || Tensor::from_f64(vec![batch_size, n], &(0..batch_size * n).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>());
    let frames: Vec<Tensor<f64>> = (0..steps).map(|_| frame()).collect::<Result<_, _>>()?;
    let mut targets: Vec<Tensor<f64>> = frames[1..].to_vec();
    targets.push(frames[steps - 1].clone());
    let labels = Tensor::from_f64(vec![batch_size, 1], &(0..batch_size).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>())?;
    let batch = Batch { frames, targets, labels };

    // Zero biases put rectifier inputs exactly on their kink whenever all
    // upstream units are inactive. Redraw biases until every rectifier input
    // clears the margin, so no perturbation straddles a kink.
    let mut params: ModelParameters<f64> = init_params(config, &mut seeds.stream(RngStream::Init));
    let bias_slots: Vec<bool> = params.named().iter().map(|(name, _)| name.rsplit('.').next().is_some_and(|l| l.starts_with('b'))).collect();
    for _ in 0..KINK_REDRAWS {
        for (t, is_bias) in params.tensors_mut().into_iter().zip(&bias_slots) {
            if *is_bias {
                t.values_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
            }
        }
        if min_rectifier_input(&params, &batch, config)? >= KINK_MARGIN {
            break;
        }
    }

    let tensors: Vec<Tensor<f64>> = params.tensors().into_iter().cloned().collect();
    let report = grad_check::<_, ModelError>(
        |g: &mut Graph<f64>, leaves: &[Var]| {
            let vars = ModelVars::from_leaves(&params, leaves)?;
            let nodes = build_forward::<f64, rand_chacha::ChaCha8Rng>(g, &vars, &batch, config, config.teacher_forcing(), None)?;
            let targets: Vec<Var> = batch.targets.iter().map(|t| g.constant(t.clone())).collect();
            let labels = g.constant(batch.labels.clone());
            Ok(joint_loss_graph(g, &nodes.y_hat, &targets, nodes.rul, labels, config.effective_alpha())?.total)
        },
        &tensors,
        epsilon,
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureSet;

    fn tiny() -> ModelConfig {
        ModelConfig {
            n_sensors: 2,
            seq_len: 3,
            hidden: 3,
            attention_width: 2,
            predictor_hidden: vec![3],
            output_scale: Some(1.0),
            dropout_rate: 0.0,
            seed: 3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn every_variant_passes() {
        for (att, rec, fs) in [(true, true, FeatureSet::Both), (false, false, FeatureSet::Encoder), (true, true, FeatureSet::Decoder), (false, true, FeatureSet::Both)] {
            let cfg = ModelConfig { use_attention: att, use_reconstruction: rec, feature_set: fs, ..tiny() };
            let r = check_model_gradients(&cfg, 2, crate::numcore::DEFAULT_GRADCHECK_EPSILON).unwrap();
            assert!(r.max_relative_error < 1e-4, "{att} {rec} {fs}: {r:?}");
        }
    }
}
