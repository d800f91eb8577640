//! Critic and generator objectives on the tape.
//!
//! Both are written as losses to minimize: the critic minimizes
//! E[D(fake)] - E[D(real)] + lambda * E[(||grad_x D(xhat)||_2 - 1)^2] with
//! xhat drawn uniformly on segments between real/fake pairs; the generator
//! minimizes -E[D(fake)], blended with the product reconstruction term for
//! the conditional model. Vanilla mode uses the sigmoid cross-entropy pair
//! with the non-saturating generator objective, computed from logits via
//! softplus for stability.

use ecgan_autodiff::{Matrix, NodeId, Tape};

use crate::mlp::{FinalAct, MlpParams};
use crate::{GanConfig, GanError, LossMode, Result};

/// Critic loss value, its pieces, and gradients w.r.t. the critic params.
pub struct DiscLossParts {
    pub total: f64,
    /// E[D(fake)] - E[D(real)] (logit means in vanilla mode).
    pub wasserstein_gap: f64,
    /// Unweighted mean squared gradient-norm gap; zero outside gp mode.
    pub penalty: f64,
    pub grads: Vec<Matrix>,
}

/// Generator loss value, its pieces, and gradients w.r.t. generator params.
pub struct GenLossParts {
    pub total: f64,
    pub adversarial: f64,
    /// Mean Euclidean distance between the conditioning embedding and the
    /// product slice of the generated rows; zero for unconditional models.
    pub reconstruction: f64,
    pub grads: Vec<Matrix>,
}

/// alpha * adversarial + (1 - alpha) * reconstruction.
pub fn blended_generator_loss(alpha: f64, adversarial: f64, reconstruction: f64) -> f64 {
    alpha * adversarial + (1.0 - alpha) * reconstruction
}

/// Per-row convex combination eps*real + (1-eps)*fake.
pub fn interpolate_rows(real: &Matrix, fake: &Matrix, eps: &Matrix) -> Matrix {
    let ones_minus = eps.map(|e| 1.0 - e);
    real.row_scale(eps).add(&fake.row_scale(&ones_minus))
}

/// Mean Euclidean distance between `pj` rows and the product slice of the
/// generated rows.
pub fn product_reconstruction(fake: &Matrix, pj: &Matrix, start: usize, end: usize) -> f64 {
    let slice = fake.slice_cols(start, end);
    let diff = slice.sub(pj);
    let mut total = 0.0;
    for i in 0..diff.rows() {
        total += diff.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    total / diff.rows() as f64
}

/// Mean squared gradient-norm gap E[(||grad_x f(xhat)||_2 - 1)^2] for any
/// scalar-per-row critic recorded by `forward`; also returns the gradient
/// matrix itself. Generic so tests can check hand-built critics exactly.
pub fn gradient_penalty_value(
    forward: impl FnOnce(&mut Tape, NodeId) -> Result<NodeId>,
    xhat: &Matrix,
) -> Result<(f64, Matrix)> {
    let mut tape = Tape::new();
    let x = tape.input(xhat.clone());
    let d = forward(&mut tape, x)?;
    let s = tape.sum_all(d)?;
    let grad = tape.backward(s, &[x])?[0];
    let rn = tape.row_l2_norm(grad)?;
    let gap = tape.affine(rn, 1.0, -1.0)?;
    let sq = tape.square(gap)?;
    let pen = tape.mean_all(sq)?;
    Ok((tape.scalar_value(pen), tape.value(grad).clone()))
}

fn check_batches(cfg: &GanConfig, real: &Matrix, fake: &Matrix) -> Result<()> {
    if real.cols() != cfg.d_order || fake.cols() != cfg.d_order {
        return Err(GanError::BadConfig(format!(
            "batch width {} / {} does not match d={}",
            real.cols(),
            fake.cols(),
            cfg.d_order
        )));
    }
    if real.rows() != fake.rows() {
        return Err(GanError::BadConfig(format!(
            "real and fake batches must pair up: {} vs {} rows",
            real.rows(),
            fake.rows()
        )));
    }
    Ok(())
}

/// Critic loss and gradients for one minibatch pair. `eps` supplies the
/// per-row interpolation draws and is required in gradient-penalty mode.
pub fn discriminator_loss(
    disc: &MlpParams,
    cfg: &GanConfig,
    real: &Matrix,
    fake: &Matrix,
    eps: Option<&Matrix>,
) -> Result<DiscLossParts> {
    check_batches(cfg, real, fake)?;
    let mut tape = Tape::new();
    let params = disc.record(&mut tape);
    let real_l = tape.input(real.clone());
    let fake_l = tape.input(fake.clone());

    // Wasserstein modes score with the linear head; vanilla works on logits.
    let d_real = MlpParams::forward_from(&mut tape, &params, real_l, FinalAct::Linear)?;
    let d_fake = MlpParams::forward_from(&mut tape, &params, fake_l, FinalAct::Linear)?;
    let m_real = tape.mean_all(d_real)?;
    let m_fake = tape.mean_all(d_fake)?;
    let gap_node = tape.sub(m_fake, m_real)?;
    let gap = tape.scalar_value(gap_node);

    let (loss_node, penalty) = match cfg.loss_mode {
        LossMode::WganClip => (gap_node, 0.0),
        LossMode::WganGp => {
            let eps = eps.ok_or_else(|| {
                GanError::BadConfig("gradient-penalty mode needs interpolation draws".into())
            })?;
            if eps.shape() != (real.rows(), 1) {
                return Err(GanError::BadConfig(format!(
                    "eps must be {}x1, got {}x{}",
                    real.rows(),
                    eps.rows(),
                    eps.cols()
                )));
            }
            let xhat = interpolate_rows(real, fake, eps);
            let xhat_l = tape.input(xhat);
            let d_hat = MlpParams::forward_from(&mut tape, &params, xhat_l, FinalAct::Linear)?;
            let s = tape.sum_all(d_hat)?;
            let grad_x = tape.backward(s, &[xhat_l])?[0];
            // Guarded row norm: sqrt(sum + tiny) keeps the second reverse
            // pass finite when a row's critic gradient vanishes.
            let gsq = tape.square(grad_x)?;
            let gsum = tape.sum_cols(gsq)?;
            let gsum = tape.affine(gsum, 1.0, 1e-18)?;
            let rn = tape.sqrt(gsum)?;
            let norm_gap = tape.affine(rn, 1.0, -1.0)?;
            let sq = tape.square(norm_gap)?;
            let pen = tape.mean_all(sq)?;
            let weighted = tape.scale(pen, cfg.lambda_gp)?;
            let total = tape.add(gap_node, weighted)?;
            (total, tape.scalar_value(pen))
        }
        LossMode::Vanilla => {
            // J(D) = 1/2 E[softplus(-t_real)] + 1/2 E[softplus(t_fake)].
            let neg_real = tape.scale(d_real, -1.0)?;
            let sp_real = tape.softplus(neg_real)?;
            let sp_fake = tape.softplus(d_fake)?;
            let m1 = tape.mean_all(sp_real)?;
            let m2 = tape.mean_all(sp_fake)?;
            let sum = tape.add(m1, m2)?;
            (tape.scale(sum, 0.5)?, 0.0)
        }
    };

    let total = tape.scalar_value(loss_node);
    let grads = tape.backward(loss_node, &params)?;
    let grads = grads.iter().map(|&g| tape.value(g).clone()).collect();
    Ok(DiscLossParts {
        total,
        wasserstein_gap: gap,
        penalty,
        grads,
    })
}

/// Generator loss and gradients for one noise batch. For conditional
/// models `pj` holds the per-row product embeddings and the loss blends in
/// the product reconstruction term.
pub fn generator_loss(
    gen: &MlpParams,
    disc: &MlpParams,
    cfg: &GanConfig,
    z: &Matrix,
    pj: Option<&Matrix>,
) -> Result<GenLossParts> {
    match (cfg.conditional, pj) {
        (Some(_), Some(_)) | (None, None) => {}
        (Some(_), None) => {
            return Err(GanError::Conditioning(
                "conditional model needs product embeddings".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(GanError::Conditioning(
                "unconditional model takes no product embeddings".into(),
            ))
        }
    }

    let mut tape = Tape::new();
    let gen_params = gen.record(&mut tape);
    let disc_params = disc.record(&mut tape);

    let z_l = tape.input(z.clone());
    let gen_in = if let Some(pj) = pj {
        let cond = cfg.conditional.unwrap();
        if pj.shape() != (z.rows(), cond.d_prod()) {
            return Err(GanError::Conditioning(format!(
                "product batch must be {}x{}, got {}x{}",
                z.rows(),
                cond.d_prod(),
                pj.rows(),
                pj.cols()
            )));
        }
        let pj_l = tape.constant(pj.clone());
        tape.concat_cols(z_l, pj_l)?
    } else {
        z_l
    };

    let fake = MlpParams::forward_from(&mut tape, &gen_params, gen_in, FinalAct::Tanh)?;
    let t_fake = MlpParams::forward_from(&mut tape, &disc_params, fake, FinalAct::Linear)?;

    let adv_node = match cfg.loss_mode {
        LossMode::Vanilla => {
            // Non-saturating objective: E[softplus(-t_fake)].
            let neg = tape.scale(t_fake, -1.0)?;
            let sp = tape.softplus(neg)?;
            tape.mean_all(sp)?
        }
        _ => {
            let m = tape.mean_all(t_fake)?;
            tape.scale(m, -1.0)?
        }
    };
    let adversarial = tape.scalar_value(adv_node);

    let (loss_node, reconstruction) = if let Some(pj) = pj {
        let cond = cfg.conditional.unwrap();
        let slice = tape.slice_cols(fake, cond.prod_start, cond.prod_end)?;
        let pj_l = tape.constant(pj.clone());
        let diff = tape.sub(slice, pj_l)?;
        let dsq = tape.square(diff)?;
        let dsum = tape.sum_cols(dsq)?;
        let dsum = tape.affine(dsum, 1.0, 1e-18)?;
        let rn = tape.sqrt(dsum)?;
        let recon = tape.mean_all(rn)?;
        let recon_value = tape.scalar_value(recon);
        let a = tape.scale(adv_node, cfg.alpha)?;
        let r = tape.scale(recon, 1.0 - cfg.alpha)?;
        (tape.add(a, r)?, recon_value)
    } else {
        (adv_node, 0.0)
    };

    let total = tape.scalar_value(loss_node);
    let grads = tape.backward(loss_node, &gen_params)?;
    let grads = grads.iter().map(|&g| tape.value(g).clone()).collect();
    Ok(GenLossParts {
        total,
        adversarial,
        reconstruction,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_arithmetic() {
        assert_eq!(blended_generator_loss(0.75, 2.0, 4.0), 2.5);
        // alpha = 1 reduces to the adversarial loss alone.
        assert_eq!(blended_generator_loss(1.0, 2.0, 400.0), 2.0);
    }

    #[test]
    fn reconstruction_zero_when_slice_matches() {
        let pj = Matrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, -0.1, -0.2, -0.3]).unwrap();
        let mut fake = Matrix::zeros(2, 5);
        for i in 0..2 {
            for j in 0..3 {
                fake.set(i, j + 1, pj.get(i, j));
            }
        }
        assert_eq!(product_reconstruction(&fake, &pj, 1, 4), 0.0);
    }

    #[test]
    fn unit_norm_linear_critic_has_zero_penalty() {
        // D(x) = w.x with ||w|| = 1: grad_x D = w everywhere, so the
        // penalty vanishes identically.
        let w = Matrix::from_vec(3, 1, vec![2.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let xhat = Matrix::from_vec(4, 3, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let (pen, grad) = gradient_penalty_value(
            |tape, x| {
                let wl = tape.constant(w.clone());
                Ok(tape.matmul(x, wl)?)
            },
            &xhat,
        )
        .unwrap();
        assert!(pen.abs() < 1e-28, "penalty {pen}");
        for i in 0..4 {
            assert_eq!(grad.row(i), w.transpose().row(0));
        }
    }

    #[test]
    fn interpolation_is_coordinatewise_convex() {
        use rand::Rng;
        let mut rng = ecgan_autodiff::stream::derived_rng(5, "interp", 0);
        for _ in 0..50 {
            let real = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
            let fake = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
            let eps = Matrix::from_fn(6, 1, |_, _| rng.random_range(0.0..1.0));
            let xhat = interpolate_rows(&real, &fake, &eps);
            for i in 0..6 {
                for j in 0..4 {
                    let (a, b) = (real.get(i, j), fake.get(i, j));
                    let (lo, hi) = (a.min(b), a.max(b));
                    let v = xhat.get(i, j);
                    assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }
}
