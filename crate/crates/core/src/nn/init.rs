use rand::Rng;

use crate::numcore::{Real, Tensor};

/// `rows x cols` weights drawn from `U[-1/sqrt(rows), 1/sqrt(rows)]`,
/// where `rows` is the fan-in of the row-vector convention `x W`.
pub fn uniform_fan_in<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor<T> {
    let bound = 1.0 / (rows as f64).sqrt();
    let values = (0..rows * cols).map(|_| T::from_f64(rng.random_range(-bound..=bound))).collect();
    Tensor::from_parts(vec![rows, cols], values)
}

pub fn zero_bias<T: Real>(width: usize) -> Tensor<T> {
    Tensor::zeros(&[1, width])
}
