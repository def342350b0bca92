use rand::Rng;

use super::{Real, Tensor, TensorError};

fn check_rate(rate: f64) -> Result<(), TensorError> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(TensorError::InvalidArgument(format!("dropout rate must lie in [0, 1), got {rate}")))
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask<T: Real, R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Result<Tensor<T>, TensorError> {
    check_rate(rate)?;
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let n: usize = shape.iter().product();
    let values = (0..n).map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep }).collect();
    Tensor::new(shape.to_vec(), values)
}

/// Applies inverted dropout; identity when `training` is false or `rate` is 0.
pub fn dropout<T: Real, R: Rng + ?Sized>(
    x: &Tensor<T>,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<Tensor<T>, TensorError> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask = dropout_mask::<T, R>(x.shape(), rate, rng)?;
    let values = x.values().iter().zip(mask.values()).map(|(&a, &m)| a * m).collect();
    Tensor::new(x.shape().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f64>::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap(), x);
        assert_eq!(dropout(&x, 0.9, &mut rng, false).unwrap(), x);
    }

    #[test]
    fn zeroed_fraction_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Tensor::<f64>::full(&[100, 100], 1.0);
        let y = dropout(&x, 0.5, &mut rng, true).unwrap();
        let zeros = y.values().iter().filter(|&&v| v == 0.0).count() as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&zeros), "zeroed fraction {zeros}");
        assert!(y.values().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn rate_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Tensor::<f32>::zeros(&[3]);
        assert!(dropout(&x, 1.0, &mut rng, true).is_err());
        assert!(dropout(&x, -0.1, &mut rng, false).is_err());
    }
}
