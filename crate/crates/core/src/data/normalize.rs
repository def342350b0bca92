use log::warn;
use serde::{Deserialize, Serialize};

use super::{cluster_conditions, select_sensors, ConditionTable, DataError, DatasetId, EngineTrajectory};

/// Min and max of every (condition, channel) pair seen during fitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub channels: usize,
    pub conditions: usize,
    /// Indexed `condition * channels + channel`.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationStats {
    pub fn range(&self, condition: usize, channel: usize) -> (f64, f64) {
        let k = condition * self.channels + channel;
        (self.min[k], self.max[k])
    }

    fn scale(&self, condition: usize, channel: usize, value: f64) -> f64 {
        let (lo, hi) = self.range(condition, channel);
        if hi > lo {
            (value - lo) / (hi - lo)
        } else {
            0.0
        }
    }
}

/// Fits per-condition ranges; `condition_ids[e][t]` labels cycle `t` of
/// engine `e`. A condition id with no rows keeps a zero-width range.
pub fn fit_normalizer(trajectories: &[EngineTrajectory], condition_ids: &[Vec<usize>]) -> Result<NormalizationStats, DataError> {
    let first = trajectories.first().ok_or_else(|| DataError::InvalidArgument("no training trajectories".into()))?;
    if condition_ids.len() != trajectories.len() {
        return Err(DataError::InvalidArgument(format!(
            "{} condition id lists for {} trajectories",
            condition_ids.len(),
            trajectories.len()
        )));
    }
    let channels = first.n_channels();
    let conditions = condition_ids.iter().flatten().max().map_or(1, |m| m + 1);
    let mut min = vec![f64::INFINITY; channels * conditions];
    let mut max = vec![f64::NEG_INFINITY; channels * conditions];
    for (traj, ids) in trajectories.iter().zip(condition_ids) {
        if traj.n_channels() != channels || ids.len() != traj.len() {
            return Err(DataError::InvalidTrajectory(format!(
                "engine {}: inconsistent channels or condition labels",
                traj.engine_id
            )));
        }
        for (row, &cond) in traj.sensors.iter().zip(ids) {
            for (k, &v) in row.iter().enumerate() {
                let idx = cond * channels + k;
                min[idx] = min[idx].min(v);
                max[idx] = max[idx].max(v);
            }
        }
    }
    for (lo, hi) in min.iter_mut().zip(max.iter_mut()) {
        if !lo.is_finite() {
            *lo = 0.0;
            *hi = 0.0;
        }
    }
    Ok(NormalizationStats { channels, conditions, min, max })
}

/// Scales each value with the range of its (condition, channel); a
/// zero-width range maps to 0. Values outside the fitted range are kept.
pub fn apply_normalizer(
    traj: &EngineTrajectory,
    stats: &NormalizationStats,
    table: &ConditionTable,
) -> Result<EngineTrajectory, DataError> {
    if traj.n_channels() != stats.channels {
        return Err(DataError::InvalidTrajectory(format!(
            "engine {} has {} channels, normalizer expects {}",
            traj.engine_id,
            traj.n_channels(),
            stats.channels
        )));
    }
    let mut sensors = Vec::with_capacity(traj.len());
    for (t, (settings, row)) in traj.settings.iter().zip(&traj.sensors).enumerate() {
        let cond = table
            .assign(settings)
            .filter(|&c| c < stats.conditions)
            .ok_or(DataError::UnseenCondition { engine: traj.engine_id, cycle: t + 1 })?;
        sensors.push(row.iter().enumerate().map(|(k, &v)| stats.scale(cond, k, v)).collect());
    }
    EngineTrajectory::new(traj.engine_id, traj.settings.clone(), sensors, traj.channels.clone())
}

/// Sensor selection plus condition-aware scaling, fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub dataset: DatasetId,
    pub conditions: ConditionTable,
    pub stats: NormalizationStats,
}

impl Preprocessor {
    /// Fits on raw training trajectories and returns them transformed.
    pub fn fit(
        raw: &[EngineTrajectory],
        dataset: DatasetId,
        precision: u32,
        max_conditions: usize,
    ) -> Result<(Self, Vec<EngineTrajectory>), DataError> {
        let selected = raw.iter().map(|t| select_sensors(t, dataset)).collect::<Result<Vec<_>, _>>()?;
        let all_settings: Vec<[f64; 3]> = selected.iter().flat_map(|t| t.settings.iter().copied()).collect();
        let (conditions, flat_ids) = cluster_conditions(&all_settings, precision, max_conditions)?;
        if conditions.len() != dataset.operating_conditions() {
            warn!(
                "{} operating conditions detected; {} normally has {}",
                conditions.len(),
                dataset,
                dataset.operating_conditions()
            );
        }
        let mut ids = Vec::with_capacity(selected.len());
        let mut offset = 0;
        for t in &selected {
            ids.push(flat_ids[offset..offset + t.len()].to_vec());
            offset += t.len();
        }
        let stats = fit_normalizer(&selected, &ids)?;
        let pre = Self { dataset, conditions, stats };
        let normalized = selected.iter().map(|t| apply_normalizer(t, &pre.stats, &pre.conditions)).collect::<Result<_, _>>()?;
        Ok((pre, normalized))
    }

    pub fn transform(&self, raw: &[EngineTrajectory]) -> Result<Vec<EngineTrajectory>, DataError> {
        raw.iter()
            .map(|t| apply_normalizer(&select_sensors(t, self.dataset)?, &self.stats, &self.conditions))
            .collect()
    }

    pub fn n_sensors(&self) -> usize {
        self.stats.channels
    }
}
