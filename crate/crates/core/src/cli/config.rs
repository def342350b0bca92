use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{DatasetId, SynthConfig};
use crate::eval::ScoreAggregate;
use crate::model::{ConfigIssue, FeatureSet, ModelConfig};

/// Where trajectories come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Files { train: PathBuf, test: Option<PathBuf>, rul: Option<PathBuf> },
    Synthetic(SynthConfig),
}

/// Validated run settings: data, preprocessing, model and outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetId,
    pub source: DataSource,
    pub model: ModelConfig,
    pub window_stride: usize,
    pub condition_precision: u32,
    pub max_conditions: usize,
    /// Share of training engines held out for per-epoch validation.
    pub validation_fraction: f64,
    /// Clamp test ground truth to the label cap.
    pub cap_test_truth: bool,
    pub score_aggregate: ScoreAggregate,
    pub out_dir: PathBuf,
}

const DATA_KEYS: &[&str] = &[
    "dataset",
    "source",
    "train_file",
    "test_file",
    "rul_file",
    "synth_fleet_size",
    "synth_min_length",
    "synth_max_length",
    "synth_noise",
    "synth_conditions",
    "window_stride",
    "condition_precision",
    "max_conditions",
    "validation_fraction",
    "cap_test_truth",
    "score_aggregate",
    "out_dir",
];

const MODEL_KEYS: &[&str] = &[
    "seq_len",
    "hidden",
    "attention_width",
    "predictor_hidden",
    "alpha",
    "learning_rate",
    "batch_size",
    "epochs",
    "dropout_rate",
    "seed",
    "use_attention",
    "use_reconstruction",
    "feature_set",
    "grad_clip",
    "rul_cap",
    "output_scale",
    "forget_bias",
    "output_bias_init",
];

/// Every key a run configuration accepts.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    DATA_KEYS.iter().chain(MODEL_KEYS).copied()
}

fn suggestion(key: &str) -> Option<&'static str> {
    known_keys()
        .map(|k| (k, strsim::damerau_levenshtein(key, k)))
        .filter(|&(k, d)| d <= 2.max(k.len() / 4))
        .min_by_key(|&(_, d)| d)
        .map(|(k, _)| k)
}

/// Parses `key=value`, reading the value as TOML and falling back to a
/// bare string (so `dataset=FD002` works without quotes).
pub fn parse_override(text: &str) -> Result<(String, toml::Value), String> {
    let (key, raw) = text.split_once('=').ok_or_else(|| format!("override `{text}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("override `{text}` has an empty key"));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn read_table(path: &Path) -> Result<toml::Table, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

struct Fields<'a> {
    table: &'a toml::Table,
    issues: Vec<ConfigIssue>,
}

impl<'a> Fields<'a> {
    fn issue(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { key: key.to_string(), message: message.into() });
    }

    fn get(&self, key: &str) -> Option<&'a toml::Value> {
        self.table.get(key)
    }

    fn uint(&mut self, key: &str, default: u64) -> u64 {
        match self.get(key) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(v) => {
                self.issue(key, format!("expected a non-negative integer, got {v}"));
                default
            }
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.uint(key, default as u64) as usize
    }

    fn float(&mut self, key: &str, default: f64) -> f64 {
        self.opt_float(key).unwrap_or(default)
    }

    fn opt_float(&mut self, key: &str) -> Option<f64> {
        match self.get(key)? {
            toml::Value::Float(f) => Some(*f),
            toml::Value::Integer(i) => Some(*i as f64),
            v => {
                self.issue(key, format!("expected a number, got {v}"));
                None
            }
        }
    }

    fn boolean(&mut self, key: &str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some(toml::Value::Boolean(b)) => *b,
            Some(v) => {
                self.issue(key, format!("expected true or false, got {v}"));
                default
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.get(key)? {
            toml::Value::String(s) => Some(s.clone()),
            v => {
                self.issue(key, format!("expected a string, got {v}"));
                None
            }
        }
    }

    fn uint_list(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.get(key) {
            None => default.to_vec(),
            Some(toml::Value::Array(items)) => {
                let parsed: Option<Vec<usize>> =
                    items.iter().map(|v| v.as_integer().filter(|i| *i >= 0).map(|i| i as usize)).collect();
                parsed.unwrap_or_else(|| {
                    self.issue(key, "expected a list of non-negative integers");
                    default.to_vec()
                })
            }
            Some(v) => {
                self.issue(key, format!("expected a list such as [32, 18], got {v}"));
                default.to_vec()
            }
        }
    }

    fn path(&mut self, key: &str, base: &Path) -> Option<PathBuf> {
        let raw = self.string(key)?;
        let path = base.join(raw);
        if !path.is_file() {
            self.issue(key, format!("file {} does not exist", path.display()));
        }
        Some(path)
    }
}

/// Fills defaults, checks types, ranges and cross-field rules, and reports
/// every problem at once. Relative paths resolve against `base`.
pub fn validate_config(table: &toml::Table, base: &Path) -> Result<RunConfig, Vec<ConfigIssue>> {
    let mut f = Fields { table, issues: Vec::new() };
    for key in table.keys() {
        if !known_keys().any(|k| k == key) {
            let hint = suggestion(key).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
            f.issue(key, format!("unknown key{hint}"));
        }
    }

    let dataset = match f.string("dataset") {
        Some(s) => match s.parse::<DatasetId>() {
            Ok(d) => Some(d),
            Err(e) => {
                f.issue("dataset", e.to_string());
                None
            }
        },
        None => {
            if f.get("dataset").is_none() {
                f.issue("dataset", "required (one of FD001, FD002, FD003, FD004)");
            }
            None
        }
    };
    let id = dataset.unwrap_or(DatasetId::FD001);

    let source = match f.string("source").as_deref().unwrap_or("files") {
        "files" => {
            let train = f.path("train_file", base);
            if f.get("train_file").is_none() {
                f.issue("train_file", "required when source = \"files\"");
            }
            let test = f.path("test_file", base);
            let rul = f.path("rul_file", base);
            if test.is_some() != rul.is_some() {
                f.issue(if test.is_some() { "rul_file" } else { "test_file" }, "test_file and rul_file must be given together");
            }
            DataSource::Files { train: train.unwrap_or_default(), test, rul }
        }
        "synthetic" => {
            let defaults = SynthConfig::default();
            let synth = SynthConfig {
                fleet_size: f.usize("synth_fleet_size", defaults.fleet_size),
                min_length: f.usize("synth_min_length", defaults.min_length),
                max_length: f.usize("synth_max_length", defaults.max_length),
                noise: f.float("synth_noise", defaults.noise),
                conditions: f.usize("synth_conditions", id.operating_conditions()),
                seed: 0,
            };
            if synth.fleet_size == 0 {
                f.issue("synth_fleet_size", "must be at least 1");
            }
            if synth.min_length < 2 {
                f.issue("synth_min_length", "must be at least 2");
            }
            if synth.max_length < synth.min_length {
                f.issue("synth_max_length", "must not be below synth_min_length");
            }
            if !(synth.noise >= 0.0 && synth.noise.is_finite()) {
                f.issue("synth_noise", "must be a finite value >= 0");
            }
            if !(1..=6).contains(&synth.conditions) {
                f.issue("synth_conditions", "must be between 1 and 6");
            }
            DataSource::Synthetic(synth)
        }
        other => {
            f.issue("source", format!("`{other}` is not one of files, synthetic"));
            DataSource::Files { train: PathBuf::new(), test: None, rul: None }
        }
    };

    let d = ModelConfig::default();
    let feature_set = match f.string("feature_set") {
        Some(s) => s.parse::<FeatureSet>().unwrap_or_else(|e| {
            f.issue("feature_set", e);
            d.feature_set
        }),
        None => d.feature_set,
    };
    let rul_cap = f.uint("rul_cap", id.default_rul_cap() as u64);
    if rul_cap > u32::MAX as u64 {
        f.issue("rul_cap", "too large");
    }
    let model = ModelConfig {
        n_sensors: id.sensors().len(),
        seq_len: f.usize("seq_len", d.seq_len),
        hidden: f.usize("hidden", d.hidden),
        attention_width: f.usize("attention_width", d.attention_width),
        predictor_hidden: f.uint_list("predictor_hidden", &d.predictor_hidden),
        alpha: f.float("alpha", d.alpha),
        learning_rate: f.float("learning_rate", d.learning_rate),
        batch_size: f.usize("batch_size", d.batch_size),
        epochs: f.usize("epochs", d.epochs),
        dropout_rate: f.float("dropout_rate", d.dropout_rate),
        seed: f.uint("seed", d.seed),
        use_attention: f.boolean("use_attention", d.use_attention),
        use_reconstruction: f.boolean("use_reconstruction", d.use_reconstruction),
        feature_set,
        grad_clip: f.opt_float("grad_clip"),
        rul_cap: rul_cap.min(u32::MAX as u64) as u32,
        output_scale: f.opt_float("output_scale"),
        forget_bias: f.float("forget_bias", d.forget_bias),
        output_bias_init: f.float("output_bias_init", d.output_bias_init),
    };
    let model_issues = model.validate();
    f.issues.extend(model_issues);

    let window_stride = f.usize("window_stride", 1);
    if window_stride == 0 {
        f.issue("window_stride", "must be at least 1");
    }
    let condition_precision = f.uint("condition_precision", 1);
    if condition_precision > 6 {
        f.issue("condition_precision", "must be at most 6 decimals");
    }
    let max_conditions = f.usize("max_conditions", 10);
    if max_conditions == 0 {
        f.issue("max_conditions", "must be at least 1");
    }
    let validation_fraction = f.float("validation_fraction", 0.0);
    if !(0.0..1.0).contains(&validation_fraction) {
        f.issue("validation_fraction", "must lie in [0, 1)");
    }
    let cap_test_truth = f.boolean("cap_test_truth", true);
    let score_aggregate = match f.string("score_aggregate") {
        Some(s) => s.parse().unwrap_or_else(|e: String| {
            f.issue("score_aggregate", e);
            ScoreAggregate::Sum
        }),
        None => ScoreAggregate::Sum,
    };
    let out_dir = base.join(f.string("out_dir").unwrap_or_else(|| "out".into()));

    let Fields { mut issues, .. } = f;
    if issues.is_empty() {
        let mut source = source;
        if let DataSource::Synthetic(s) = &mut source {
            s.seed = model.seed;
        }
        Ok(RunConfig {
            dataset: id,
            source,
            model,
            window_stride,
            condition_precision: condition_precision as u32,
            max_conditions,
            validation_fraction,
            cap_test_truth,
            score_aggregate,
            out_dir,
        })
    } else {
        issues.dedup();
        Err(issues)
    }
}
