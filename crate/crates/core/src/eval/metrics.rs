use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// How per-engine scores are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreAggregate {
    #[default]
    Sum,
    Mean,
}

impl FromStr for ScoreAggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(ScoreAggregate::Sum),
            "mean" => Ok(ScoreAggregate::Mean),
            other => Err(format!("`{other}` is not one of sum, mean")),
        }
    }
}

impl fmt::Display for ScoreAggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreAggregate::Sum => "sum",
            ScoreAggregate::Mean => "mean",
        })
    }
}

fn check_pair(predictions: &[f64], truths: &[f64]) -> Result<(), EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), truths: truths.len() });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    if predictions.iter().chain(truths).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(())
}

pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64, EvalError> {
    check_pair(predictions, truths)?;
    let sq: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sq / predictions.len() as f64).sqrt())
}

/// Penalty of one error `d = predicted - true`; late estimates (`d > 0`)
/// grow faster than early ones.
pub fn sample_score(d: f64) -> f64 {
    if d < 0.0 {
        (-d / 13.0).exp() - 1.0
    } else {
        (d / 10.0).exp() - 1.0
    }
}

pub fn score(predictions: &[f64], truths: &[f64], aggregate: ScoreAggregate) -> Result<f64, EvalError> {
    check_pair(predictions, truths)?;
    let total: f64 = predictions.iter().zip(truths).map(|(p, t)| sample_score(p - t)).sum();
    Ok(match aggregate {
        ScoreAggregate::Sum => total,
        ScoreAggregate::Mean => total / predictions.len() as f64,
    })
}
