use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numcore::{RngStream, SeedSplitter};

use super::{DataError, EngineTrajectory, RAW_SENSORS};

/// 1-based sensors that never respond to degradation.
pub const CONSTANT_CHANNELS: [usize; 7] = [1, 5, 6, 10, 16, 18, 19];

/// Settings of the multi-regime fleet, chosen so that jitter never moves a
/// setting across a one-decimal rounding boundary.
const REGIMES: [[f64; 3]; 6] = [
    [0.0, 0.0, 100.0],
    [10.0, 0.2, 100.0],
    [20.0, 0.7, 100.0],
    [25.0, 0.6, 60.0],
    [35.0, 0.8, 100.0],
    [42.0, 0.8, 100.0],
];
const SETTING_JITTER: f64 = 0.004;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Engines in each of the training and test fleets.
    pub fleet_size: usize,
    pub min_length: usize,
    pub max_length: usize,
    /// Gaussian noise standard deviation, relative to each sensor's
    /// degradation span.
    pub noise: f64,
    /// Operating regimes, between 1 and 6.
    pub conditions: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { fleet_size: 20, min_length: 120, max_length: 220, noise: 0.05, conditions: 1, seed: 0 }
    }
}

/// Run-to-failure training engines plus truncated test engines.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFleet {
    pub train: Vec<EngineTrajectory>,
    pub test: Vec<EngineTrajectory>,
    /// Cycles remaining after the last observed test cycle, in engine order.
    pub test_rul: Vec<u32>,
}

struct Channel {
    base: f64,
    /// Change over a full life; zero for constant channels.
    span: f64,
    /// Shift per regime.
    regime_offset: [f64; 6],
}

fn draw_channels(rng: &mut ChaCha8Rng) -> Vec<Channel> {
    (1..=RAW_SENSORS)
        .map(|k| {
            let base = rng.random_range(10.0..1000.0);
            let span = if CONSTANT_CHANNELS.contains(&k) {
                0.0
            } else {
                let magnitude = base * rng.random_range(0.005..0.05);
                if rng.random_bool(0.5) { magnitude } else { -magnitude }
            };
            let regime_offset = std::array::from_fn(|r| if r == 0 { 0.0 } else { base * rng.random_range(-0.3..0.3) });
            Channel { base, span, regime_offset }
        })
        .collect()
}

/// Exponential health index rising from exactly 0 at cycle 1 to exactly 1
/// at cycle `life`.
fn degradation(t: usize, life: usize, rate: f64) -> f64 {
    if life <= 1 {
        return 1.0;
    }
    let floor = (rate * (1.0 - life as f64)).exp();
    ((rate * (t as f64 - life as f64)).exp() - floor) / (1.0 - floor)
}

fn draw_engine(id: u32, cycles: usize, life: usize, config: &SynthConfig, channels: &[Channel], rng: &mut ChaCha8Rng) -> Result<EngineTrajectory, DataError> {
    let rate = rng.random_range(2.0..6.0) / life as f64;
    let offsets: Vec<f64> = channels.iter().map(|c| 0.05 * c.span.abs() * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut settings = Vec::with_capacity(cycles);
    let mut sensors = Vec::with_capacity(cycles);
    for t in 1..=cycles {
        let regime = if config.conditions > 1 { rng.random_range(0..config.conditions) } else { 0 };
        let mut s = REGIMES[regime];
        if config.conditions > 1 {
            s[0] += rng.random_range(-SETTING_JITTER..=SETTING_JITTER);
            s[1] += rng.random_range(-SETTING_JITTER / 10.0..=SETTING_JITTER / 10.0);
        }
        settings.push(s);
        let d = degradation(t, life, rate);
        let row = channels
            .iter()
            .zip(&offsets)
            .map(|(c, &offset)| {
                let level = c.base + c.regime_offset[regime];
                if c.span == 0.0 {
                    level
                } else {
                    let noise = config.noise * c.span.abs() * rng.sample::<f64, _>(StandardNormal);
                    level + offset + c.span * d + noise
                }
            })
            .collect();
        sensors.push(row);
    }
    EngineTrajectory::new(id, settings, sensors, (1..=RAW_SENSORS).collect())
}

/// Generates a deterministic fleet from `config.seed`.
///
/// Every non-constant sensor is an affine function of a shared latent
/// degradation index plus noise, so with `noise == 0` and one regime each
/// of them is strictly monotone in the cycle.
pub fn synth_generate(config: &SynthConfig) -> Result<SyntheticFleet, DataError> {
    if config.fleet_size == 0 {
        return Err(DataError::InvalidArgument("fleet size must be positive".into()));
    }
    if config.min_length < 2 || config.max_length < config.min_length {
        return Err(DataError::InvalidArgument(format!(
            "length range {}..={} must satisfy 2 <= min <= max",
            config.min_length, config.max_length
        )));
    }
    if !(config.noise >= 0.0 && config.noise.is_finite()) {
        return Err(DataError::InvalidArgument(format!("noise level {} must be non-negative", config.noise)));
    }
    if !(1..=REGIMES.len()).contains(&config.conditions) {
        return Err(DataError::InvalidArgument(format!("conditions must be between 1 and 6, got {}", config.conditions)));
    }

    let mut rng = SeedSplitter::new(config.seed).stream(RngStream::Synthesis);
    let channels = draw_channels(&mut rng);
    let mut train = Vec::with_capacity(config.fleet_size);
    for id in 1..=config.fleet_size as u32 {
        let life = rng.random_range(config.min_length..=config.max_length);
        train.push(draw_engine(id, life, life, config, &channels, &mut rng)?);
    }
    let mut test = Vec::with_capacity(config.fleet_size);
    let mut test_rul = Vec::with_capacity(config.fleet_size);
    for id in 1..=config.fleet_size as u32 {
        let life = rng.random_range(config.min_length..=config.max_length);
        let earliest = (life * 3).div_ceil(10).clamp(1, life - 1);
        let cut = rng.random_range(earliest..=life - 1);
        test.push(draw_engine(id, cut, life, config, &channels, &mut rng)?);
        test_rul.push((life - cut) as u32);
    }
    Ok(SyntheticFleet { train, test, test_rul })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SynthConfig {
        SynthConfig { fleet_size: 6, min_length: 40, max_length: 60, noise: 0.05, conditions: 1, seed: 11 }
    }

    #[test]
    fn same_seed_same_fleet() {
        assert_eq!(synth_generate(&config()).unwrap(), synth_generate(&config()).unwrap());
        let other = SynthConfig { seed: 12, ..config() };
        assert_ne!(synth_generate(&config()).unwrap(), synth_generate(&other).unwrap());
    }

    #[test]
    fn lengths_in_range() {
        let fleet = synth_generate(&config()).unwrap();
        assert!(fleet.train.iter().all(|t| (40..=60).contains(&t.len())));
        for (t, &rul) in fleet.test.iter().zip(&fleet.test_rul) {
            let life = t.len() + rul as usize;
            assert!((40..=60).contains(&life));
            assert!(rul >= 1);
            assert!(t.len() * 10 >= life * 3);
        }
    }

    #[test]
    fn noiseless_sensors_are_monotone() {
        let fleet = synth_generate(&SynthConfig { noise: 0.0, ..config() }).unwrap();
        for traj in &fleet.train {
            for k in 0..RAW_SENSORS {
                let col: Vec<f64> = traj.sensors.iter().map(|r| r[k]).collect();
                if CONSTANT_CHANNELS.contains(&(k + 1)) {
                    assert!(col.iter().all(|&v| v == col[0]));
                } else {
                    let up = col.windows(2).all(|w| w[1] > w[0]);
                    let down = col.windows(2).all(|w| w[1] < w[0]);
                    assert!(up || down, "sensor {} of engine {}", k + 1, traj.engine_id);
                }
            }
        }
    }

    #[test]
    fn degradation_endpoints() {
        assert_eq!(degradation(1, 50, 0.08), 0.0);
        assert!((degradation(50, 50, 0.08) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn six_regimes_are_recoverable() {
        let fleet = synth_generate(&SynthConfig { conditions: 6, ..config() }).unwrap();
        let rows: Vec<[f64; 3]> = fleet.train.iter().flat_map(|t| t.settings.iter().copied()).collect();
        let (table, _) = super::super::cluster_conditions(&rows, 1, 10).unwrap();
        assert_eq!(table.len(), 6);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(synth_generate(&SynthConfig { fleet_size: 0, ..config() }).is_err());
        assert!(synth_generate(&SynthConfig { min_length: 50, max_length: 40, ..config() }).is_err());
        assert!(synth_generate(&SynthConfig { conditions: 7, ..config() }).is_err());
    }
}
