use std::io::Write;

use crate::numcore::Tensor;

use super::{DataError, EngineTrajectory};

/// One fixed-length slice of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub engine_id: u32,
    /// 1-based cycle of the first column; zero or negative for left-padded
    /// test windows.
    pub window_start: i64,
    /// `n × W` inputs, one column per cycle.
    pub x: Tensor<f64>,
    /// `n × W` reconstruction targets: column `k` is cycle `start + k + 1`,
    /// with the trajectory's last frame repeated past its end.
    pub y: Tensor<f64>,
    pub rul: u32,
}

impl WindowSample {
    pub fn n_channels(&self) -> usize {
        self.x.rows()
    }

    pub fn width(&self) -> usize {
        self.x.cols()
    }

    /// Column `k` of `x` as a row vector.
    pub fn frame(&self, k: usize) -> Vec<f64> {
        (0..self.x.rows()).map(|c| self.x.get(c, k)).collect()
    }
}

/// Evaluation window paired with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSample {
    pub window: WindowSample,
    pub true_rul: u32,
}

/// Frames `first..first + width` of `frames` laid out as an `n × width` matrix,
/// with indices clamped into the trajectory.
fn window_matrix(frames: &[Vec<f64>], first: i64, width: usize) -> Tensor<f64> {
    let n = frames[0].len();
    let last = frames.len() as i64 - 1;
    let mut values = vec![0.0; n * width];
    for k in 0..width {
        let t = (first + k as i64).clamp(0, last) as usize;
        for (c, &v) in frames[t].iter().enumerate() {
            values[c * width + k] = v;
        }
    }
    Tensor::matrix(n, width, values).expect("window dimensions are non-zero")
}

fn make_window(traj: &EngineTrajectory, start: i64, width: usize, rul: u32) -> WindowSample {
    // `start` is 1-based; frame indices are 0-based.
    let first = start - 1;
    WindowSample {
        engine_id: traj.engine_id,
        window_start: start,
        x: window_matrix(&traj.sensors, first, width),
        y: window_matrix(&traj.sensors, first + 1, width),
        rul,
    }
}

/// Sliding windows at starts `1, 1 + stride, ...`. A window ending at cycle
/// `t` is labelled `min(T - t, rul_cap)`. Trajectories shorter than `width`
/// yield nothing when `for_training`, and one left-padded window otherwise.
pub fn segment_windows(
    traj: &EngineTrajectory,
    width: usize,
    stride: usize,
    rul_cap: u32,
    for_training: bool,
) -> Result<Vec<WindowSample>, DataError> {
    if width == 0 || stride == 0 {
        return Err(DataError::InvalidArgument(format!("window width {width} and stride {stride} must be positive")));
    }
    let total = traj.len();
    if total == 0 {
        return Ok(Vec::new());
    }
    if total < width {
        if for_training {
            return Ok(Vec::new());
        }
        let start = total as i64 - width as i64 + 1;
        return Ok(vec![make_window(traj, start, width, 0)]);
    }
    Ok((0..=total - width)
        .step_by(stride)
        .map(|offset| {
            let end = offset + width;
            let rul = ((total - end) as u64).min(rul_cap as u64) as u32;
            make_window(traj, offset as i64 + 1, width, rul)
        })
        .collect())
}

/// The last `width` cycles of every test engine (left-padded by repeating
/// cycle 1 when short), labelled from `ruls` in engine order.
pub fn build_test_set(
    trajectories: &[EngineTrajectory],
    ruls: &[u32],
    width: usize,
    rul_cap: u32,
    cap_truth: bool,
) -> Result<Vec<TestSample>, DataError> {
    if trajectories.len() != ruls.len() {
        return Err(DataError::LabelCountMismatch { trajectories: trajectories.len(), labels: ruls.len() });
    }
    if width == 0 {
        return Err(DataError::InvalidArgument("window width must be positive".into()));
    }
    trajectories
        .iter()
        .zip(ruls)
        .map(|(traj, &truth)| {
            if traj.is_empty() {
                return Err(DataError::InvalidTrajectory(format!("test engine {} has no cycles", traj.engine_id)));
            }
            let true_rul = if cap_truth { truth.min(rul_cap) } else { truth };
            let start = traj.len() as i64 - width as i64 + 1;
            Ok(TestSample { window: make_window(traj, start, width, truth.min(rul_cap)), true_rul })
        })
        .collect()
}

/// Dumps windows as CSV: `engine_id,window_start,rul` followed by one
/// column `s{sensor}_t{k}` per input value.
pub fn write_windows_csv<W: Write>(windows: &[WindowSample], channels: &[usize], out: W) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(out);
    let Some(first) = windows.first() else {
        writer.flush()?;
        return Ok(());
    };
    let width = first.width();
    if channels.len() != first.n_channels() {
        return Err(DataError::InvalidArgument(format!(
            "{} channel names for {} channels",
            channels.len(),
            first.n_channels()
        )));
    }
    let mut header = vec!["engine_id".to_string(), "window_start".into(), "rul".into()];
    for ch in channels {
        header.extend((1..=width).map(|k| format!("s{ch}_t{k}")));
    }
    writer.write_record(&header)?;
    for w in windows {
        if w.width() != width || w.n_channels() != channels.len() {
            return Err(DataError::InvalidArgument("windows differ in shape".into()));
        }
        let mut record = vec![w.engine_id.to_string(), w.window_start.to_string(), w.rul.to_string()];
        record.extend(w.x.values().iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
