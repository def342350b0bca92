use std::io::Write;

use serde::Serialize;

use super::{rmse, score, EvalError, ScoreAggregate};
use crate::model::ModelConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineResult {
    pub engine_id: u32,
    pub predicted_rul: f64,
    pub true_rul: f64,
    /// `predicted_rul - true_rul`.
    pub error: f64,
}

/// Per-engine estimates with their aggregates; rows are kept sorted by
/// engine id.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub rows: Vec<EngineResult>,
    pub rmse: f64,
    pub score: f64,
    pub aggregate: ScoreAggregate,
}

impl EvalResult {
    pub fn new(mut estimates: Vec<(u32, f64, f64)>, aggregate: ScoreAggregate) -> Result<Self, EvalError> {
        estimates.sort_by_key(|e| e.0);
        if let Some(w) = estimates.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(EvalError::DuplicateEngine(w[0].0));
        }
        let predictions: Vec<f64> = estimates.iter().map(|e| e.1).collect();
        let truths: Vec<f64> = estimates.iter().map(|e| e.2).collect();
        let rmse = rmse(&predictions, &truths)?;
        let score = score(&predictions, &truths, aggregate)?;
        let rows = estimates
            .into_iter()
            .map(|(engine_id, predicted_rul, true_rul)| EngineResult { engine_id, predicted_rul, true_rul, error: predicted_rul - true_rul })
            .collect();
        Ok(Self { rows, rmse, score, aggregate })
    }

    pub fn count(&self) -> usize {
        self.rows.len()
    }

    /// One-line summary, e.g. `engines=100 rmse=12.9 score=301.2 (sum)`.
    pub fn summary(&self) -> String {
        format!("engines={} rmse={:.4} score={:.4} ({})", self.count(), self.rmse, self.score, self.aggregate)
    }

    /// CSV rows `engine_id,predicted_rul,true_rul,error` followed by
    /// `#rmse=` and `#score=` lines.
    pub fn write_report<W: Write>(&self, mut out: W) -> Result<(), EvalError> {
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["engine_id", "predicted_rul", "true_rul", "error"])?;
            for r in &self.rows {
                w.write_record([r.engine_id.to_string(), r.predicted_rul.to_string(), r.true_rul.to_string(), r.error.to_string()])?;
            }
            w.flush()?;
        }
        writeln!(out, "#rmse={}", self.rmse)?;
        writeln!(out, "#score={}", self.score)?;
        Ok(())
    }
}

/// One variant of an experiment suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub suite: String,
    pub variant: String,
    pub rmse: f64,
    pub score: f64,
    pub engines: usize,
    pub config: ModelConfig,
}

pub const EXPERIMENT_HEADER: [&str; 10] =
    ["suite", "variant", "use_attention", "use_reconstruction", "feature_set", "alpha", "seed", "rmse", "score", "engines"];

/// Combined table of a suite, one row per variant in the given order.
pub fn write_experiment_table<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EXPERIMENT_HEADER)?;
    for r in rows {
        let c = &r.config;
        w.write_record([
            r.suite.clone(),
            r.variant.clone(),
            c.use_attention.to_string(),
            c.use_reconstruction.to_string(),
            c.feature_set.to_string(),
            c.alpha.to_string(),
            c.seed.to_string(),
            r.rmse.to_string(),
            r.score.to_string(),
            r.engines.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line holding `suite`, `variant` and the complete
/// model configuration of that variant.
pub fn write_config_echo<W: Write>(rows: &[ExperimentRow], mut out: W) -> Result<(), EvalError> {
    #[derive(Serialize)]
    struct Echo<'a> {
        suite: &'a str,
        variant: &'a str,
        config: &'a ModelConfig,
    }
    for r in rows {
        serde_json::to_writer(&mut out, &Echo { suite: &r.suite, variant: &r.variant, config: &r.config })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> EvalResult {
        EvalResult::new(vec![(3, 10.0, 12.0), (1, 50.0, 40.0), (2, 7.0, 7.0)], ScoreAggregate::Sum).unwrap()
    }

    #[test]
    fn rows_sorted_with_summary() {
        let r = result();
        let mut buf = Vec::new();
        r.write_report(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "engine_id,predicted_rul,true_rul,error");
        assert_eq!(lines[1], "1,50,40,10");
        assert_eq!(lines[3], "3,10,12,-2");
        assert_eq!(lines.len(), 6);
        let rmse_line: f64 = lines[4].strip_prefix("#rmse=").unwrap().parse().unwrap();
        let direct = rmse(&[50.0, 7.0, 10.0], &[40.0, 7.0, 12.0]).unwrap();
        assert_eq!(rmse_line, direct);
        assert!(lines[5].starts_with("#score="));
    }

    #[test]
    fn report_is_reproducible() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        result().write_report(&mut a).unwrap();
        result().write_report(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_engine_rejected() {
        assert!(matches!(EvalResult::new(vec![(1, 1.0, 1.0), (1, 2.0, 2.0)], ScoreAggregate::Sum), Err(EvalError::DuplicateEngine(1))));
    }

    #[test]
    fn experiment_outputs() {
        let rows = vec![ExperimentRow {
            suite: "ablation".into(),
            variant: "basic".into(),
            rmse: 1.5,
            score: 2.0,
            engines: 3,
            config: ModelConfig { use_attention: false, use_reconstruction: false, ..ModelConfig::default() },
        }];
        let mut table = Vec::new();
        write_experiment_table(&rows, &mut table).unwrap();
        let text = String::from_utf8(table).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "ablation,basic,false,false,both,1,0,1.5,2,3");
        let mut echo = Vec::new();
        write_config_echo(&rows, &mut echo).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&echo).unwrap();
        assert_eq!(v["config"]["use_attention"], false);
        assert_eq!(v["variant"], "basic");
    }
}
