use ecgan_autodiff::stream::derived_rng;
use ecgan_autodiff::Matrix;
use rand::seq::SliceRandom;

use crate::logistic::{train_logistic, LogisticConfig};
use crate::{EvalError, Result};

/// Real-vs-generated logistic probe: labels the two equal-sized samples,
/// splits 80/20, fits logistic regression and returns held-out accuracy.
/// 0.5 means the generator mimics the real data; 1.0 means trivially
/// separable.
pub fn logistic_tracker(real: &Matrix, fake: &Matrix, seed: u64) -> Result<f64> {
    if real.rows() != fake.rows() {
        return Err(EvalError::BadInput(format!(
            "tracker needs equal sample sizes, got {} vs {}",
            real.rows(),
            fake.rows()
        )));
    }
    if real.cols() != fake.cols() {
        return Err(EvalError::BadInput("tracker samples differ in width".into()));
    }
    let n = real.rows();
    if n < 10 {
        return Err(EvalError::BadInput("tracker needs at least 10 rows per side".into()));
    }

    let mut order: Vec<usize> = (0..2 * n).collect();
    let mut rng = derived_rng(seed, "tracker-split", 0);
    order.shuffle(&mut rng);
    let n_train = (2 * n) * 8 / 10;

    let fetch = |i: usize| -> (&[f64], bool) {
        if i < n {
            (real.row(i), true)
        } else {
            (fake.row(i - n), false)
        }
    };

    let mut train_data = Vec::with_capacity(n_train * real.cols());
    let mut train_labels = Vec::with_capacity(n_train);
    for &i in &order[..n_train] {
        let (row, label) = fetch(i);
        train_data.extend_from_slice(row);
        train_labels.push(label);
    }
    let train_x = Matrix::from_vec(n_train, real.cols(), train_data)?;
    let model = train_logistic(&train_x, &train_labels, &LogisticConfig::default())?;

    let test = &order[n_train..];
    let hits = test
        .iter()
        .filter(|&&i| {
            let (row, label) = fetch(i);
            model.predict(row) == label
        })
        .count();
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian_sample(n: usize, d: usize, shift: f64, seed: u64) -> Matrix {
        let mut rng = derived_rng(seed, "tracker-test", 0);
        Matrix::from_fn(n, d, |_, _| {
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            shift + (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
    }

    #[test]
    fn same_distribution_scores_near_half() {
        let real = gaussian_sample(1_000, 8, 0.0, 1);
        let fake = gaussian_sample(1_000, 8, 0.0, 2);
        let acc = logistic_tracker(&real, &fake, 3).unwrap();
        assert!((acc - 0.5).abs() < 0.05, "accuracy {acc}");
    }

    #[test]
    fn shifted_distribution_is_trivially_separable() {
        let real = gaussian_sample(500, 8, 0.0, 4);
        let fake = gaussian_sample(500, 8, 5.0, 5);
        let acc = logistic_tracker(&real, &fake, 6).unwrap();
        assert!(acc > 0.99, "accuracy {acc}");
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let real = gaussian_sample(100, 4, 0.0, 7);
        let fake = gaussian_sample(90, 4, 0.0, 8);
        assert!(logistic_tracker(&real, &fake, 9).is_err());
    }
}
