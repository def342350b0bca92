use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point element type of a [`Tensor`](super::Tensor).
///
/// Implemented for `f32` (training default) and `f64` (gradient checking).
pub trait Real:
    Float + Sum + AddAssign + SubAssign + MulAssign + Default + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Tag written into checkpoints.
    const DTYPE: &'static str;
    /// Width of one little-endian encoded element.
    const BYTES: usize;

    fn from_f64(value: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    /// Decodes one element; `bytes` must hold exactly [`Self::BYTES`] bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const DTYPE: &'static str = "f32";
    const BYTES: usize = 4;

    fn from_f64(value: f64) -> Self {
        value as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(bytes);
        f32::from_le_bytes(buf)
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "f64";
    const BYTES: usize = 8;

    fn from_f64(value: f64) -> Self {
        value
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(bytes);
        f64::from_le_bytes(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn le_roundtrip_is_bitwise() {
        for v in [0.0f32, -1.5, f32::MIN_POSITIVE, 1.0e-3] {
            let mut buf = Vec::new();
            v.write_le(&mut buf);
            assert_eq!(f32::read_le(&buf).to_bits(), v.to_bits());
        }
        let mut buf = Vec::new();
        (1.0f64 / 3.0).write_le(&mut buf);
        assert_eq!(f64::read_le(&buf), 1.0 / 3.0);
    }
}
