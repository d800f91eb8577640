use rand::Rng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

use ecgan_autodiff::stream::derived_rng;
use ecgan_autodiff::Matrix;

use crate::mlp::{FinalAct, MlpParams};
use crate::{GanConfig, GanError, GanModel, Result};

/// Standard-normal noise batch.
pub fn noise_batch(rows: usize, cols: usize, rng: &mut Xoshiro256StarStar) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Marker for where sampling noise comes from; all draws are standard
/// normal per the training setup.
pub struct NoiseSource;

/// Draws n rows from a generator. `pj` must be an n x d_prod matrix for
/// conditional configurations (each row's conditioning embedding).
pub fn sample_with(
    gen: &MlpParams,
    cfg: &GanConfig,
    n: usize,
    rng: &mut Xoshiro256StarStar,
    pj: Option<&Matrix>,
) -> Result<Matrix> {
    if n == 0 {
        return Ok(Matrix::zeros(0, cfg.d_order));
    }
    let z = noise_batch(n, cfg.noise_dim, rng);
    let input = match (cfg.conditional, pj) {
        (Some(cond), Some(pj)) => {
            if pj.shape() != (n, cond.d_prod()) {
                return Err(GanError::Conditioning(format!(
                    "conditioning batch must be {n}x{}, got {}x{}",
                    cond.d_prod(),
                    pj.rows(),
                    pj.cols()
                )));
            }
            z.concat_cols(pj)
        }
        (None, None) => z,
        (Some(_), None) => {
            return Err(GanError::Conditioning(
                "conditional model needs a product embedding".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(GanError::Conditioning(
                "unconditional model takes no product embedding".into(),
            ))
        }
    };
    Ok(gen.forward_value(&input, FinalAct::Tanh))
}

/// Generator forward pass on an explicit noise batch (training-side fake
/// batches, where the noise draw belongs to the caller's stream).
pub fn forward_fake(
    gen: &MlpParams,
    cfg: &GanConfig,
    z: &Matrix,
    pj: Option<&Matrix>,
) -> Result<Matrix> {
    let input = match (cfg.conditional, pj) {
        (Some(cond), Some(pj)) => {
            if pj.shape() != (z.rows(), cond.d_prod()) {
                return Err(GanError::Conditioning(format!(
                    "conditioning batch must be {}x{}, got {}x{}",
                    z.rows(),
                    cond.d_prod(),
                    pj.rows(),
                    pj.cols()
                )));
            }
            z.concat_cols(pj)
        }
        (None, None) => z.clone(),
        (Some(_), None) => {
            return Err(GanError::Conditioning(
                "conditional model needs a product embedding".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(GanError::Conditioning(
                "unconditional model takes no product embedding".into(),
            ))
        }
    };
    Ok(gen.forward_value(&input, FinalAct::Tanh))
}

/// Model-level sampling; a single product embedding is broadcast over all
/// rows for conditional models.
pub fn sample_model(model: &GanModel, n: usize, pj: Option<&[f64]>, seed: u64) -> Result<Matrix> {
    let mut rng = derived_rng(seed, "gan-sample", 0);
    let pj_matrix = match (model.cfg.conditional, pj) {
        (Some(cond), Some(row)) => {
            if row.len() != cond.d_prod() {
                return Err(GanError::Conditioning(format!(
                    "product embedding has {} entries, expected {}",
                    row.len(),
                    cond.d_prod()
                )));
            }
            let mut data = Vec::with_capacity(n * row.len());
            for _ in 0..n {
                data.extend_from_slice(row);
            }
            Some(Matrix::from_vec(n, row.len(), data).map_err(GanError::Autodiff)?)
        }
        (None, None) => None,
        (Some(_), None) => {
            return Err(GanError::Conditioning(
                "conditional model needs a product embedding".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(GanError::Conditioning(
                "unconditional model takes no product embedding".into(),
            ))
        }
    };
    if n == 0 {
        return Ok(Matrix::zeros(0, model.cfg.d_order));
    }
    sample_with(&model.gen, &model.cfg, n, &mut rng, pj_matrix.as_ref())
}
