use ecgan_autodiff::Matrix;

use crate::{EvalError, Result};

/// Plain full-batch gradient descent settings for logistic regression.
#[derive(Clone, Copy, Debug)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn prob(&self, row: &[f64]) -> f64 {
        let z = self
            .weights
            .iter()
            .zip(row)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias;
        1.0 / (1.0 + (-z).exp())
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.prob(row) >= 0.5
    }

    pub fn accuracy(&self, x: &Matrix, y: &[bool]) -> f64 {
        let hits = (0..x.rows())
            .filter(|&i| self.predict(x.row(i)) == y[i])
            .count();
        hits as f64 / x.rows() as f64
    }
}

/// Trains binary logistic regression by full-batch gradient descent.
/// Rejects single-class label sets.
pub fn train_logistic(x: &Matrix, y: &[bool], cfg: &LogisticConfig) -> Result<LogisticModel> {
    if x.rows() != y.len() || x.rows() == 0 {
        return Err(EvalError::BadInput(format!(
            "feature rows {} vs labels {}",
            x.rows(),
            y.len()
        )));
    }
    let positives = y.iter().filter(|&&b| b).count();
    if positives == 0 || positives == y.len() {
        return Err(EvalError::DegenerateSplit);
    }

    let n = x.rows();
    let d = x.cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut resid = vec![0.0; n];
    for _ in 0..cfg.epochs {
        for (i, r) in resid.iter_mut().enumerate() {
            let z = w
                .iter()
                .zip(x.row(i))
                .map(|(wk, xk)| wk * xk)
                .sum::<f64>()
                + b;
            let p = 1.0 / (1.0 + (-z).exp());
            *r = p - if y[i] { 1.0 } else { 0.0 };
        }
        let mut grad_w = vec![0.0; d];
        for i in 0..n {
            let r = resid[i];
            for (gk, xk) in grad_w.iter_mut().zip(x.row(i)) {
                *gk += r * xk;
            }
        }
        for (wk, gk) in w.iter_mut().zip(grad_w.iter()) {
            *wk -= cfg.learning_rate * (gk / n as f64 + cfg.l2 * *wk);
        }
        b -= cfg.learning_rate * resid.iter().sum::<f64>() / n as f64;
    }
    Ok(LogisticModel { weights: w, bias: b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_data_is_learned() {
        // Two clusters offset along the first feature.
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let off = if i % 2 == 0 { 2.0 } else { -2.0 };
            data.extend_from_slice(&[off + 0.01 * i as f64, 0.5]);
            labels.push(i % 2 == 0);
        }
        let x = Matrix::from_vec(40, 2, data).unwrap();
        let m = train_logistic(&x, &labels, &LogisticConfig::default()).unwrap();
        assert_eq!(m.accuracy(&x, &labels), 1.0);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::zeros(4, 2);
        let err = train_logistic(&x, &[true; 4], &LogisticConfig::default());
        assert!(matches!(err, Err(EvalError::DegenerateSplit)));
    }
}
