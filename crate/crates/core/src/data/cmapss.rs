use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::DataError;

/// Raw sensor channels per C-MAPSS row.
pub const RAW_SENSORS: usize = 21;
const COLUMNS: usize = 2 + 3 + RAW_SENSORS;

/// One engine's record, one row per cycle starting at cycle 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineTrajectory {
    pub engine_id: u32,
    pub settings: Vec<[f64; 3]>,
    /// `sensors[t][k]` is channel `channels[k]` at cycle `t + 1`.
    pub sensors: Vec<Vec<f64>>,
    /// 1-based sensor numbers of the retained columns.
    pub channels: Vec<usize>,
}

impl EngineTrajectory {
    pub fn new(
        engine_id: u32,
        settings: Vec<[f64; 3]>,
        sensors: Vec<Vec<f64>>,
        channels: Vec<usize>,
    ) -> Result<Self, DataError> {
        if settings.len() != sensors.len() {
            return Err(DataError::InvalidTrajectory(format!(
                "engine {engine_id}: {} settings rows but {} sensor rows",
                settings.len(),
                sensors.len()
            )));
        }
        if settings.is_empty() {
            return Err(DataError::InvalidTrajectory(format!("engine {engine_id} has no cycles")));
        }
        if let Some(row) = sensors.iter().position(|r| r.len() != channels.len()) {
            return Err(DataError::InvalidTrajectory(format!(
                "engine {engine_id}, cycle {}: {} values for {} channels",
                row + 1,
                sensors[row].len(),
                channels.len()
            )));
        }
        Ok(Self { engine_id, settings, sensors, channels })
    }

    /// Number of recorded cycles.
    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

fn parse_field(token: &str, line: usize, column: usize) -> Result<f64, DataError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DataError::NotNumeric { line, column, token: token.to_string() })
}

fn parse_index(token: &str, line: usize, column: usize) -> Result<u32, DataError> {
    let v = parse_field(token, line, column)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(DataError::NotNumeric { line, column, token: token.to_string() });
    }
    Ok(v as u32)
}

/// `(cycle, settings, sensors)` of one parsed line.
type Row = (u32, [f64; 3], Vec<f64>);

/// Reads whitespace-separated C-MAPSS rows (`unit cycle setting x3 sensor x21`).
///
/// Blank lines are skipped. Engines are returned in ascending id order with
/// their rows sorted by cycle; cycles must run 1, 2, 3, ... without gaps.
pub fn parse_cmapss<R: BufRead>(reader: R) -> Result<Vec<EngineTrajectory>, DataError> {
    let mut by_engine: BTreeMap<u32, Vec<Row>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != COLUMNS {
            return Err(DataError::ColumnCount { line: lineno, expected: COLUMNS, found: tokens.len() });
        }
        let engine = parse_index(tokens[0], lineno, 1)?;
        let cycle = parse_index(tokens[1], lineno, 2)?;
        let mut settings = [0.0; 3];
        for (k, s) in settings.iter_mut().enumerate() {
            *s = parse_field(tokens[2 + k], lineno, 3 + k)?;
        }
        let sensors = tokens[5..]
            .iter()
            .enumerate()
            .map(|(k, t)| parse_field(t, lineno, 6 + k))
            .collect::<Result<Vec<_>, _>>()?;
        by_engine.entry(engine).or_default().push((cycle, settings, sensors));
    }

    let channels: Vec<usize> = (1..=RAW_SENSORS).collect();
    by_engine
        .into_iter()
        .map(|(engine, mut rows)| {
            rows.sort_by_key(|r| r.0);
            for (k, row) in rows.iter().enumerate() {
                if row.0 as usize != k + 1 {
                    return Err(DataError::NonContiguousCycles { engine, expected: k + 1, found: row.0 as usize });
                }
            }
            let (settings, sensors) = rows.into_iter().map(|(_, s, x)| (s, x)).unzip();
            EngineTrajectory::new(engine, settings, sensors, channels.clone())
        })
        .collect()
}

/// Writes trajectories back in C-MAPSS layout; requires all 21 raw channels.
pub fn write_cmapss<W: Write>(trajectories: &[EngineTrajectory], mut out: W) -> Result<(), DataError> {
    let expected: Vec<usize> = (1..=RAW_SENSORS).collect();
    for traj in trajectories {
        if traj.channels != expected {
            return Err(DataError::InvalidTrajectory(format!(
                "engine {}: C-MAPSS output needs sensors 1..=21, have {:?}",
                traj.engine_id, traj.channels
            )));
        }
        for (t, (settings, sensors)) in traj.settings.iter().zip(&traj.sensors).enumerate() {
            write!(out, "{} {}", traj.engine_id, t + 1)?;
            for v in settings.iter().chain(sensors) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// One non-negative integer per non-blank line.
pub fn parse_rul_file<R: BufRead>(reader: R) -> Result<Vec<u32>, DataError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            [tok] => out.push(parse_index(tok, idx + 1, 1)?),
            _ => return Err(DataError::ColumnCount { line: idx + 1, expected: 1, found: tokens.len() }),
        }
    }
    Ok(out)
}

pub fn write_rul_file<W: Write>(ruls: &[u32], mut out: W) -> Result<(), DataError> {
    for r in ruls {
        writeln!(out, "{r}")?;
    }
    Ok(())
}
