use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Latent features handed to the RUL predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    /// Final encoder state only.
    Encoder,
    /// Final decoder state only.
    Decoder,
    /// Both, concatenated encoder first.
    Both,
}

impl FeatureSet {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Encoder => "encoder",
            FeatureSet::Decoder => "decoder",
            FeatureSet::Both => "both",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "encoder" => Ok(FeatureSet::Encoder),
            "decoder" => Ok(FeatureSet::Decoder),
            "both" => Ok(FeatureSet::Both),
            other => Err(format!("`{other}` is not one of encoder, decoder, both")),
        }
    }
}

/// Architecture and optimisation settings of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_sensors: usize,
    /// Window length, also the number of decoder steps.
    pub seq_len: usize,
    pub hidden: usize,
    pub attention_width: usize,
    /// Hidden widths of the predictor between its input and the output unit.
    pub predictor_hidden: Vec<usize>,
    /// Weight of the reconstruction term in the joint loss.
    pub alpha: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub use_attention: bool,
    pub use_reconstruction: bool,
    pub feature_set: FeatureSet,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Upper bound of labels and of clamped estimates.
    pub rul_cap: u32,
    /// Multiplier on the predictor's output unit; `None` uses `rul_cap`.
    pub output_scale: Option<f64>,
    pub forget_bias: f64,
    /// Initial bias of the predictor's output unit. A positive start keeps
    /// the final rectifier active for every window at initialisation.
    pub output_bias_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_sensors: 14,
            seq_len: 30,
            hidden: 32,
            attention_width: 30,
            predictor_hidden: vec![32, 18],
            alpha: 1.0,
            learning_rate: 3e-4,
            batch_size: 10,
            epochs: 20,
            dropout_rate: 0.2,
            seed: 0,
            use_attention: true,
            use_reconstruction: true,
            feature_set: FeatureSet::Both,
            grad_clip: None,
            rul_cap: 125,
            output_scale: None,
            forget_bias: 0.0,
            output_bias_init: 0.5,
        }
    }
}

/// One rejected field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl ModelConfig {
    /// Reconstruction weight actually applied; zero when reconstruction is off.
    pub fn effective_alpha(&self) -> f64 {
        if self.use_reconstruction {
            self.alpha
        } else {
            0.0
        }
    }

    /// Whether training feeds ground-truth frames to the decoder.
    pub fn teacher_forcing(&self) -> bool {
        self.effective_alpha() > 0.0
    }

    pub fn feature_dim(&self) -> usize {
        match self.feature_set {
            FeatureSet::Both => 2 * self.hidden,
            FeatureSet::Encoder | FeatureSet::Decoder => self.hidden,
        }
    }

    pub fn effective_output_scale(&self) -> f64 {
        self.output_scale.unwrap_or(self.rul_cap as f64)
    }

    /// Every violated constraint, in field order.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |key: &str, message: String| issues.push(ConfigIssue { key: key.to_string(), message });
        for (key, value) in [
            ("n_sensors", self.n_sensors),
            ("seq_len", self.seq_len),
            ("hidden", self.hidden),
            ("attention_width", self.attention_width),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ] {
            if value == 0 {
                bad(key, "must be at least 1".into());
            }
        }
        if self.predictor_hidden.contains(&0) {
            bad("predictor_hidden", "widths must be positive".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            bad("alpha", format!("must be a finite value >= 0, got {}", self.alpha));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            bad("learning_rate", format!("must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            bad("dropout_rate", format!("must lie in [0, 1), got {}", self.dropout_rate));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                bad("grad_clip", format!("must be positive, got {c}"));
            }
        }
        if self.rul_cap == 0 {
            bad("rul_cap", "must be at least 1".into());
        }
        if let Some(s) = self.output_scale {
            if !(s > 0.0 && s.is_finite()) {
                bad("output_scale", format!("must be positive, got {s}"));
            }
        }
        if !self.forget_bias.is_finite() {
            bad("forget_bias", "must be finite".into());
        }
        if !self.output_bias_init.is_finite() {
            bad("output_bias_init", "must be finite".into());
        }
        if self.feature_set == FeatureSet::Decoder && !self.use_reconstruction {
            bad("feature_set", "`decoder` requires use_reconstruction = true".into());
        }
        issues
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ModelConfig::default();
        assert!(c.validate().is_empty());
        assert_eq!(c.learning_rate, 0.0003);
        assert_eq!(c.batch_size, 10);
        assert_eq!(c.feature_dim(), 64);
    }

    #[test]
    fn collects_every_issue() {
        let c = ModelConfig { alpha: -1.0, dropout_rate: 1.0, epochs: 0, ..ModelConfig::default() };
        let keys: Vec<String> = c.validate().into_iter().map(|i| i.key).collect();
        assert_eq!(keys, vec!["epochs", "alpha", "dropout_rate"]);
    }

    #[test]
    fn decoder_features_need_reconstruction() {
        let c = ModelConfig { feature_set: FeatureSet::Decoder, use_reconstruction: false, ..ModelConfig::default() };
        assert_eq!(c.validate()[0].key, "feature_set");
        assert_eq!(c.effective_alpha(), 0.0);
        assert!(!c.teacher_forcing());
    }
}
