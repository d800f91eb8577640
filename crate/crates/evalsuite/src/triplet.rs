use ecgan_autodiff::stream::derived_rng;
use ecgan_autodiff::Matrix;
use rand::Rng;

use crate::{EvalError, Result};

/// Comparison with the tie rule shared by the rank metrics: differences
/// below 1e-12 count as "greater or equal".
fn ge(a: f64, b: f64) -> bool {
    a >= b - 1e-12
}

/// Pearson correlation matrix of the columns. Zero-variance features get
/// zero correlations (flagged by index in the second return).
pub fn pearson_correlation_matrix(m: &Matrix) -> (Matrix, Vec<usize>) {
    let (n, d) = m.shape();
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (mu, &v) in mean.iter_mut().zip(m.row(i)) {
            *mu += v;
        }
    }
    for mu in &mut mean {
        *mu /= nf;
    }
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let row = m.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[a * d + b] += da * (row[b] - mean[b]);
            }
        }
    }
    let std: Vec<f64> = (0..d).map(|a| (cov[a * d + a] / nf).sqrt()).collect();
    let flagged: Vec<usize> = (0..d).filter(|&a| std[a] <= 0.0).collect();
    let mut corr = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let value = if a == b {
                1.0
            } else if std[a] > 0.0 && std[b] > 0.0 {
                (cov[a * d + b] / nf) / (std[a] * std[b])
            } else {
                0.0
            };
            corr.set(a, b, value);
            corr.set(b, a, value);
        }
    }
    (corr, flagged)
}

pub struct TripletReport {
    pub agreement: f64,
    pub triplets: usize,
    /// Features whose correlations were pinned to zero (no variance).
    pub zero_variance_features: Vec<usize>,
}

/// Fraction of random feature triplets (f1, f2, f3) where the real and
/// generated data order corr(f1,f2) vs corr(f1,f3) the same way.
pub fn triplet_agreement(
    real: &Matrix,
    generated: &Matrix,
    n_triplets: usize,
    seed: u64,
) -> Result<TripletReport> {
    if real.cols() != generated.cols() {
        return Err(EvalError::BadInput("feature counts differ".into()));
    }
    let d = real.cols();
    if d < 3 {
        return Err(EvalError::BadInput("need at least 3 features".into()));
    }
    if real.rows() < 2 || generated.rows() < 2 {
        return Err(EvalError::BadInput("need at least 2 rows per matrix".into()));
    }

    let (cr, mut flagged) = pearson_correlation_matrix(real);
    let (cg, flagged_g) = pearson_correlation_matrix(generated);
    flagged.extend(flagged_g);
    flagged.sort_unstable();
    flagged.dedup();

    let mut rng = derived_rng(seed, "triplets", 0);
    let mut agree = 0usize;
    for _ in 0..n_triplets {
        let f1 = rng.random_range(0..d);
        let f2 = loop {
            let f = rng.random_range(0..d);
            if f != f1 {
                break f;
            }
        };
        let f3 = loop {
            let f = rng.random_range(0..d);
            if f != f1 && f != f2 {
                break f;
            }
        };
        let real_side = ge(cr.get(f1, f2), cr.get(f1, f3));
        let gen_side = ge(cg.get(f1, f2), cg.get(f1, f3));
        if real_side == gen_side {
            agree += 1;
        }
    }
    Ok(TripletReport {
        agreement: agree as f64 / n_triplets as f64,
        triplets: n_triplets,
        zero_variance_features: flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = derived_rng(seed, "triplet-test", 0);
        // Correlated columns: mix a few shared latent factors.
        let latent: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Matrix::from_fn(n, d, |i, j| {
            let w = (j % 3) as f64 * 0.4 + 0.2;
            w * latent[j % 3][i] + 0.3 * rng.random_range(-1.0..1.0)
        })
    }

    #[test]
    fn corr_matrix_properties() {
        let m = random_matrix(500, 8, 1);
        let (c, flagged) = pearson_correlation_matrix(&m);
        assert!(flagged.is_empty());
        for a in 0..8 {
            assert!((c.get(a, a) - 1.0).abs() < 1e-12);
            for b in 0..8 {
                assert_eq!(c.get(a, b), c.get(b, a));
                assert!(c.get(a, b).abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn identical_matrices_agree_fully() {
        let m = random_matrix(400, 6, 2);
        let r = triplet_agreement(&m, &m, 5_000, 3).unwrap();
        assert_eq!(r.agreement, 1.0);
    }

    #[test]
    fn column_shuffled_copy_agrees_at_chance() {
        let m = random_matrix(2_000, 10, 4);
        // Independently permute each column: correlations die, agreement
        // falls to the coin-flip baseline.
        let mut rng = derived_rng(5, "shuffle", 0);
        let mut shuffled = m.clone();
        for j in 0..m.cols() {
            let mut col: Vec<f64> = (0..m.rows()).map(|i| m.get(i, j)).collect();
            col.shuffle(&mut rng);
            for (i, v) in col.into_iter().enumerate() {
                shuffled.set(i, j, v);
            }
        }
        let r = triplet_agreement(&m, &shuffled, 20_000, 6).unwrap();
        assert!((r.agreement - 0.5).abs() < 0.05, "agreement {}", r.agreement);
    }

    #[test]
    fn zero_variance_feature_flagged() {
        let mut m = random_matrix(100, 5, 7);
        for i in 0..m.rows() {
            m.set(i, 2, 3.25);
        }
        let (c, flagged) = pearson_correlation_matrix(&m);
        assert_eq!(flagged, vec![2]);
        assert_eq!(c.get(2, 0), 0.0);
        let r = triplet_agreement(&m, &m, 1_000, 8).unwrap();
        assert_eq!(r.zero_variance_features, vec![2]);
    }

    #[test]
    fn small_inputs_rejected() {
        let m = random_matrix(10, 2, 9);
        assert!(triplet_agreement(&m, &m, 10, 1).is_err());
        let one_row = Matrix::zeros(1, 5);
        assert!(triplet_agreement(&one_row, &one_row, 10, 1).is_err());
    }
}
