use rand::Rng;

use crate::matrix::Matrix;
use crate::scalar::{lit, Scalar};

/// Glorot/Xavier uniform initialization: U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)). Weight matrices are laid out
/// fan_in x fan_out (inputs are row vectors).
pub fn glorot_uniform<F: Scalar>(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Matrix<F> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(fan_in, fan_out, |_, _| {
        lit(rng.random_range(-a..a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::seeded_rng;

    #[test]
    fn glorot_bounds_and_determinism() {
        let a = (6.0 / 24.0f64).sqrt();
        let m1: Matrix = glorot_uniform(16, 8, &mut seeded_rng(1));
        let m2: Matrix = glorot_uniform(16, 8, &mut seeded_rng(1));
        assert_eq!(m1, m2);
        assert!(m1.data().iter().all(|v| v.abs() < a));
    }
}
