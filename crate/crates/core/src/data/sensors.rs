use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DataError, EngineTrajectory};

/// The four C-MAPSS subsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetId {
    FD001,
    FD002,
    FD003,
    FD004,
}

const SINGLE_CONDITION_SENSORS: [usize; 14] = [2, 3, 4, 7, 8, 9, 11, 12, 13, 14, 15, 17, 20, 21];
const MULTI_CONDITION_SENSORS: [usize; 9] = [3, 4, 9, 11, 14, 15, 17, 20, 21];

impl DatasetId {
    /// 1-based sensor numbers fed to the model, in column order.
    pub fn sensors(self) -> &'static [usize] {
        match self {
            DatasetId::FD001 | DatasetId::FD003 => &SINGLE_CONDITION_SENSORS,
            DatasetId::FD002 | DatasetId::FD004 => &MULTI_CONDITION_SENSORS,
        }
    }

    /// Piecewise-linear label threshold.
    pub fn default_rul_cap(self) -> u32 {
        match self {
            DatasetId::FD001 | DatasetId::FD003 => 125,
            DatasetId::FD002 | DatasetId::FD004 => 130,
        }
    }

    pub fn operating_conditions(self) -> usize {
        match self {
            DatasetId::FD001 | DatasetId::FD003 => 1,
            DatasetId::FD002 | DatasetId::FD004 => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::FD001 => "FD001",
            DatasetId::FD002 => "FD002",
            DatasetId::FD003 => "FD003",
            DatasetId::FD004 => "FD004",
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FD001" => Ok(DatasetId::FD001),
            "FD002" => Ok(DatasetId::FD002),
            "FD003" => Ok(DatasetId::FD003),
            "FD004" => Ok(DatasetId::FD004),
            _ => Err(DataError::UnknownDataset(s.to_string())),
        }
    }
}

/// Keeps the dataset's informative sensors, preserving their order.
pub fn select_sensors(traj: &EngineTrajectory, dataset: DatasetId) -> Result<EngineTrajectory, DataError> {
    let columns = dataset
        .sensors()
        .iter()
        .map(|&s| {
            traj.channels
                .iter()
                .position(|&c| c == s)
                .ok_or(DataError::MissingChannel { engine: traj.engine_id, channel: s })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sensors = traj.sensors.iter().map(|row| columns.iter().map(|&k| row[k]).collect()).collect();
    EngineTrajectory::new(traj.engine_id, traj.settings.clone(), sensors, dataset.sensors().to_vec())
}
