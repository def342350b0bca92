use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use log::info;

use super::{CliError, DataSource, RunConfig};
use crate::data::{
    build_test_set, parse_cmapss, parse_rul_file, segment_windows, synth_generate, EngineTrajectory, Preprocessor, TestSample, WindowSample,
};
use crate::eval::{EvalResult, ScoreAggregate};
use crate::model::{predict_batch, ModelConfig, ModelParameters};
use crate::numcore::Real;

/// Raw training trajectories and optional labelled test engines.
pub struct RawData {
    pub train: Vec<EngineTrajectory>,
    pub test: Option<(Vec<EngineTrajectory>, Vec<u32>)>,
}

fn read_trajectories(path: &Path) -> Result<Vec<EngineTrajectory>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    parse_cmapss(BufReader::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn read_ruls(path: &Path) -> Result<Vec<u32>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    parse_rul_file(BufReader::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn load_raw(source: &DataSource) -> Result<RawData, CliError> {
    match source {
        DataSource::Files { train, test, rul } => {
            let train = read_trajectories(train)?;
            let test = match (test, rul) {
                (Some(t), Some(r)) => Some((read_trajectories(t)?, read_ruls(r)?)),
                _ => None,
            };
            Ok(RawData { train, test })
        }
        DataSource::Synthetic(cfg) => {
            let fleet = synth_generate(cfg)?;
            Ok(RawData { train: fleet.train, test: Some((fleet.test, fleet.test_rul)) })
        }
    }
}

/// Windows ready for training and evaluation.
pub struct Prepared {
    pub preprocessor: Preprocessor,
    pub train: Vec<WindowSample>,
    pub valid: Vec<WindowSample>,
    pub test: Option<Vec<TestSample>>,
}

fn windows(trajs: &[EngineTrajectory], model: &ModelConfig, stride: usize) -> Result<Vec<WindowSample>, CliError> {
    let mut out = Vec::new();
    for t in trajs {
        out.extend(segment_windows(t, model.seq_len, stride, model.rul_cap, true)?);
    }
    Ok(out)
}

/// Fits preprocessing on training engines only; the last
/// `validation_fraction` of engines (by id) are held out.
pub fn prepare(run: &RunConfig, raw: &RawData) -> Result<Prepared, CliError> {
    let held_out = (raw.train.len() as f64 * run.validation_fraction).ceil() as usize;
    if held_out >= raw.train.len() {
        return Err(CliError::Runtime(format!("validation_fraction leaves no training engines out of {}", raw.train.len())));
    }
    let (fit_on, valid_raw) = raw.train.split_at(raw.train.len() - held_out);
    let (preprocessor, train_norm) = Preprocessor::fit(fit_on, run.dataset, run.condition_precision, run.max_conditions)?;
    let train = windows(&train_norm, &run.model, run.window_stride)?;
    if train.is_empty() {
        return Err(CliError::Runtime(format!("no training engine has at least seq_len = {} cycles", run.model.seq_len)));
    }
    let valid = windows(&preprocessor.transform(valid_raw)?, &run.model, run.window_stride)?;
    let test = match &raw.test {
        Some((trajs, ruls)) => Some(test_samples(&preprocessor, trajs, ruls, &run.model, run.cap_test_truth)?),
        None => None,
    };
    info!(
        "{} training windows, {} validation windows, {} test engines, {} operating condition(s)",
        train.len(),
        valid.len(),
        test.as_ref().map_or(0, |t| t.len()),
        preprocessor.conditions.len()
    );
    Ok(Prepared { preprocessor, train, valid, test })
}

pub fn test_samples(
    preprocessor: &Preprocessor,
    trajs: &[EngineTrajectory],
    ruls: &[u32],
    model: &ModelConfig,
    cap_truth: bool,
) -> Result<Vec<TestSample>, CliError> {
    let normalized = preprocessor.transform(trajs)?;
    Ok(build_test_set(&normalized, ruls, model.seq_len, model.rul_cap, cap_truth)?)
}

pub fn evaluate<T: Real>(
    params: &ModelParameters<T>,
    model: &ModelConfig,
    samples: &[TestSample],
    aggregate: ScoreAggregate,
) -> Result<EvalResult, CliError> {
    let windows: Vec<&WindowSample> = samples.iter().map(|s| &s.window).collect();
    let predictions = predict_batch(params, model, &windows)?;
    let rows = samples.iter().zip(predictions).map(|(s, p)| (s.window.engine_id, p, s.true_rul as f64)).collect();
    Ok(EvalResult::new(rows, aggregate)?)
}
