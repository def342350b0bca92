use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::pipeline::{evaluate, load_raw, prepare, test_samples};
use super::{parse_override, read_table, validate_config, CliError, CommonArgs, DataSource, RunConfig, Suite, CHECKPOINT_FILE};
use crate::data::{build_test_set, parse_cmapss, synth_generate, write_cmapss, write_rul_file};
use crate::eval::{write_config_echo, write_experiment_table, EvalResult, ExperimentRow};
use crate::model::{check_model_gradients, fit, load_checkpoint, save_checkpoint, Checkpoint, FeatureSet, ModelConfig};
use crate::numcore::DEFAULT_GRADCHECK_EPSILON;

const GRADCHECK_TOLERANCE: f64 = 1e-4;
const DEFAULT_ALPHAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Config file, then `key=value` overrides, then `--seed` and `--out`.
fn load_run(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let (mut table, base) = match &common.config {
        Some(path) => {
            let table = read_table(path).map_err(CliError::Usage)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (table, base)
        }
        None => (toml::Table::new(), PathBuf::new()),
    };
    for text in &common.overrides {
        let (key, value) = parse_override(text).map_err(CliError::Usage)?;
        table.insert(key, value);
    }
    if let Some(seed) = common.seed {
        let seed = i64::try_from(seed).map_err(|_| CliError::Usage(format!("--seed {seed} is too large")))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    let mut run = validate_config(&table, &base).map_err(CliError::Config)?;
    if let Some(out) = &common.out {
        run.out_dir = out.clone();
    }
    Ok(run)
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    let file = File::create(path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_report(result: &EvalResult, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let mut file = create_file(path)?;
    result.write_report(&mut file)?;
    file.flush()?;
    writeln!(out, "{}", result.summary())?;
    writeln!(out, "report: {}", path.display())?;
    Ok(())
}

pub fn train(common: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let run = load_run(common)?;
    let raw = load_raw(&run.source)?;
    let prep = prepare(&run, &raw)?;
    let valid = (!prep.valid.is_empty()).then_some(prep.valid.as_slice());
    let (params, history) = fit::<f32>(&prep.train, valid, &run.model)?;

    let checkpoint = run.out_dir.join(CHECKPOINT_FILE);
    fs::create_dir_all(&run.out_dir)?;
    save_checkpoint(&checkpoint, &params, &run.model, Some(&prep.preprocessor))?;
    let mut hist = create_file(&run.out_dir.join("history.csv"))?;
    history.write_csv(&mut hist)?;
    hist.flush()?;
    writeln!(out, "checkpoint: {}", checkpoint.display())?;
    if let Some(test) = &prep.test {
        let result = evaluate(&params, &run.model, test, run.score_aggregate)?;
        write_report(&result, &run.out_dir.join("report.csv"), out)?;
    }
    Ok(())
}

fn open_checkpoint(path: &Path) -> Result<Checkpoint<f32>, CliError> {
    load_checkpoint(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn eval(common: &CommonArgs, checkpoint: Option<PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let run = load_run(common)?;
    let path = checkpoint.unwrap_or_else(|| run.out_dir.join(CHECKPOINT_FILE));
    let ckpt = open_checkpoint(&path)?;
    let pre = ckpt.preprocessor.as_ref().ok_or_else(|| CliError::Runtime(format!("{} has no preprocessing statistics", path.display())))?;
    if pre.dataset != run.dataset {
        return Err(CliError::Runtime(format!("checkpoint was trained on {}, config names {}", pre.dataset, run.dataset)));
    }
    let raw = load_raw(&run.source)?;
    let (trajs, ruls) = raw.test.as_ref().ok_or_else(|| CliError::Runtime("eval needs test_file and rul_file".into()))?;
    let samples = test_samples(pre, trajs, ruls, &ckpt.config, run.cap_test_truth)?;
    let result = evaluate(&ckpt.params, &ckpt.config, &samples, run.score_aggregate)?;
    write_report(&result, &run.out_dir.join("report.csv"), out)
}

pub fn predict(common: &CommonArgs, checkpoint: &Path, engine: u32, input: Option<PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = open_checkpoint(checkpoint)?;
    let pre = ckpt.preprocessor.as_ref().ok_or_else(|| CliError::Runtime(format!("{} has no preprocessing statistics", checkpoint.display())))?;
    let trajectories = match input {
        Some(path) => {
            let file = File::open(&path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
            parse_cmapss(BufReader::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        }
        None if common.config.is_some() || !common.overrides.is_empty() => {
            let run = load_run(common)?;
            match load_raw(&run.source)?.test {
                Some((trajs, _)) => trajs,
                None => return Err(CliError::Usage("predict needs --input or a configured test_file".into())),
            }
        }
        None => return Err(CliError::Usage("predict needs --input or --config".into())),
    };
    let traj = trajectories
        .into_iter()
        .find(|t| t.engine_id == engine)
        .ok_or_else(|| CliError::Runtime(format!("engine {engine} not found in the input")))?;
    let normalized = pre.transform(std::slice::from_ref(&traj))?;
    let sample = build_test_set(&normalized, &[0], ckpt.config.seq_len, ckpt.config.rul_cap, true)?.remove(0);
    let estimate = crate::model::infer(&ckpt.params, &ckpt.config, &sample.window)?;
    writeln!(out, "engine {engine}: predicted RUL {estimate:.2} cycles ({} observed)", traj.len())?;
    Ok(())
}

pub fn gradcheck(seed: u64, epsilon: Option<f64>, out: &mut dyn Write) -> Result<(), CliError> {
    let config = ModelConfig {
        n_sensors: 3,
        seq_len: 5,
        hidden: 4,
        attention_width: 4,
        predictor_hidden: vec![4],
        dropout_rate: 0.0,
        output_scale: Some(1.0),
        seed,
        ..ModelConfig::default()
    };
    let report = check_model_gradients(&config, 2, epsilon.unwrap_or(DEFAULT_GRADCHECK_EPSILON))?;
    writeln!(out, "max relative error {:.3e} over {} parameters", report.max_relative_error, report.elements_checked)?;
    if report.max_relative_error < GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "gradient check failed: {:.3e} >= {GRADCHECK_TOLERANCE:e} (array {}, element {})",
            report.max_relative_error, report.worst.0, report.worst.1
        )))
    }
}

pub fn synth(common: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let run = load_run(common)?;
    let DataSource::Synthetic(cfg) = &run.source else {
        return Err(CliError::Config(vec![crate::model::ConfigIssue {
            key: "source".into(),
            message: "synth requires source = \"synthetic\"".into(),
        }]));
    };
    let fleet = synth_generate(cfg)?;
    for (name, trajs) in [("synth_train.txt", &fleet.train), ("synth_test.txt", &fleet.test)] {
        let path = run.out_dir.join(name);
        let mut file = create_file(&path)?;
        write_cmapss(trajs, &mut file)?;
        file.flush()?;
        writeln!(out, "{}: {} engines", path.display(), trajs.len())?;
    }
    let path = run.out_dir.join("synth_RUL.txt");
    let mut file = create_file(&path)?;
    write_rul_file(&fleet.test_rul, &mut file)?;
    file.flush()?;
    writeln!(out, "{}", path.display())?;
    Ok(())
}

/// Named configurations of one suite; every variant keeps the base seed so
/// that rows differ only in the studied settings.
pub fn suite_variants(suite: Suite, base: &ModelConfig, alphas: &[f64]) -> Vec<(String, ModelConfig)> {
    let with = |att: bool, rec: bool| ModelConfig { use_attention: att, use_reconstruction: rec, ..base.clone() };
    match suite {
        Suite::Ablation => vec![
            ("basic".into(), with(false, false)),
            ("+reconstruction".into(), with(false, true)),
            ("+attention".into(), with(true, false)),
            ("full".into(), with(true, true)),
        ],
        Suite::Features => [FeatureSet::Encoder, FeatureSet::Decoder, FeatureSet::Both]
            .into_iter()
            .map(|fs| (fs.to_string(), ModelConfig { feature_set: fs, use_reconstruction: true, ..base.clone() }))
            .collect(),
        Suite::Alpha => alphas
            .iter()
            .map(|&a| (format!("alpha={a}"), ModelConfig { alpha: a, use_reconstruction: true, ..base.clone() }))
            .collect(),
    }
}

pub fn experiment(common: &CommonArgs, suite: Suite, values: Option<Vec<f64>>, out: &mut dyn Write) -> Result<(), CliError> {
    if values.is_some() && suite != Suite::Alpha {
        return Err(CliError::Usage("--values only applies to the alpha suite".into()));
    }
    let run = load_run(common)?;
    let alphas = values.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let variants = suite_variants(suite, &run.model, &alphas);
    let issues: Vec<_> = variants
        .iter()
        .flat_map(|(name, cfg)| cfg.validate().into_iter().map(move |mut i| {
            i.message = format!("{} (variant {name})", i.message);
            i
        }))
        .collect();
    if !issues.is_empty() {
        return Err(CliError::Config(issues));
    }

    let raw = load_raw(&run.source)?;
    let prep = prepare(&run, &raw)?;
    let test = prep.test.as_ref().ok_or_else(|| CliError::Runtime("experiments need test data".into()))?;
    let valid = (!prep.valid.is_empty()).then_some(prep.valid.as_slice());
    let suite_name = format!("{suite:?}").to_lowercase();
    info!("running {} {suite_name} variants", variants.len());

    let rows = variants
        .par_iter()
        .map(|(name, cfg)| -> Result<ExperimentRow, CliError> {
            let (params, _) = fit::<f32>(&prep.train, valid, cfg)?;
            let result = evaluate(&params, cfg, test, run.score_aggregate)?;
            info!("{name}: {}", result.summary());
            Ok(ExperimentRow {
                suite: suite_name.clone(),
                variant: name.clone(),
                rmse: result.rmse,
                score: result.score,
                engines: result.count(),
                config: cfg.clone(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let table_path = run.out_dir.join(format!("experiment_{suite_name}.csv"));
    let mut table = create_file(&table_path)?;
    write_experiment_table(&rows, &mut table)?;
    table.flush()?;
    let echo_path = run.out_dir.join(format!("experiment_{suite_name}_configs.jsonl"));
    let mut echo = create_file(&echo_path)?;
    write_config_echo(&rows, &mut echo)?;
    echo.flush()?;

    writeln!(out, "{:<18} {:>10} {:>12}", "variant", "rmse", "score")?;
    for r in &rows {
        writeln!(out, "{:<18} {:>10.4} {:>12.4}", r.variant, r.rmse, r.score)?;
    }
    writeln!(out, "table: {}", table_path.display())?;
    writeln!(out, "configs: {}", echo_path.display())?;
    if rows.iter().any(|r| !r.rmse.is_finite()) {
        warn!("some variants produced non-finite metrics");
    }
    Ok(())
}
