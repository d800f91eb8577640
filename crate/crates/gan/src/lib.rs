//! Order GANs: an unconditional generator over order vectors (ecgan) and a
//! product-conditioned variant (ec2gan) whose generator consumes noise
//! concatenated with a product embedding and pays a reconstruction penalty
//! on the product slice of its output. Three critic objectives: the
//! saturating-free vanilla GAN, Wasserstein with weight clipping, and
//! Wasserstein with gradient penalty (default).

pub mod loss;
pub mod mlp;
pub mod sample;
pub mod train;

pub use loss::{
    blended_generator_loss, discriminator_loss, generator_loss, gradient_penalty_value,
    interpolate_rows, product_reconstruction, DiscLossParts, GenLossParts,
};
pub use mlp::{FinalAct, MlpParams};
pub use sample::{forward_fake, sample_with, NoiseSource};
pub use train::{load_model, save_model, train, MetricsLog, MetricsRow, TrackerFn};

use ecgan_autodiff::adam::AdamConfig;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    Vanilla,
    WganClip,
    WganGp,
}

impl LossMode {
    pub fn label(self) -> &'static str {
        match self {
            LossMode::Vanilla => "vanilla",
            LossMode::WganClip => "wgan-clip",
            LossMode::WganGp => "wgan-gp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vanilla" => Some(LossMode::Vanilla),
            "wgan-clip" => Some(LossMode::WganClip),
            "wgan-gp" => Some(LossMode::WganGp),
            _ => None,
        }
    }

    /// The critic head: linear in Wasserstein modes, sigmoid for vanilla.
    pub fn disc_final_act(self) -> FinalAct {
        match self {
            LossMode::Vanilla => FinalAct::Sigmoid,
            _ => FinalAct::Linear,
        }
    }
}

/// Product-slice location inside the order vector, for conditioning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CondSpec {
    pub prod_start: usize,
    pub prod_end: usize,
}

impl CondSpec {
    pub fn d_prod(&self) -> usize {
        self.prod_end - self.prod_start
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GanConfig {
    pub d_order: usize,
    pub noise_dim: usize,
    pub gen_hidden: [usize; 2],
    pub disc_hidden: [usize; 2],
    pub loss_mode: LossMode,
    /// Gradient-penalty weight.
    pub lambda_gp: f64,
    /// Weight-clip bound for the clipping mode.
    pub clip: f64,
    /// Blend between adversarial and reconstruction generator losses.
    pub alpha: f64,
    pub critic_ratio: usize,
    pub minibatch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub conditional: Option<CondSpec>,
    /// Generator steps between tracker probes in the metrics log.
    pub tracker_every: u64,
}

/// Reference layer widths at the full 264-dimensional order vector; desk
/// configurations scale these by d/264, rounded to multiples of 8.
const FULL_SCALE_D: usize = 264;
const FULL_GEN_HIDDEN: [usize; 2] = [64, 128];
const FULL_DISC_HIDDEN: [usize; 2] = [128, 64];
const FULL_NOISE_FRACTION: f64 = 96.0 / 264.0;

fn round_to_eight(x: f64) -> usize {
    (((x / 8.0).round() as usize).max(1)) * 8
}

impl GanConfig {
    /// Width-scaled defaults for an unconditional model at dimension `d`.
    /// At d = 264 this reproduces the reference 96 -> 64 -> 128 -> 264
    /// generator and 264 -> 128 -> 64 -> 1 discriminator exactly.
    pub fn unconditional(d_order: usize, seed: u64) -> Self {
        let scale = d_order as f64 / FULL_SCALE_D as f64;
        Self {
            d_order,
            noise_dim: round_to_eight(FULL_NOISE_FRACTION * d_order as f64),
            gen_hidden: [
                round_to_eight(FULL_GEN_HIDDEN[0] as f64 * scale),
                round_to_eight(FULL_GEN_HIDDEN[1] as f64 * scale),
            ],
            disc_hidden: [
                round_to_eight(FULL_DISC_HIDDEN[0] as f64 * scale),
                round_to_eight(FULL_DISC_HIDDEN[1] as f64 * scale),
            ],
            loss_mode: LossMode::WganGp,
            lambda_gp: 10.0,
            clip: 0.01,
            alpha: 0.75,
            critic_ratio: 5,
            minibatch: 128,
            epochs: 60,
            seed,
            adam: AdamConfig::default(),
            conditional: None,
            tracker_every: 500,
        }
    }

    pub fn conditional(d_order: usize, cond: CondSpec, seed: u64) -> Self {
        Self {
            conditional: Some(cond),
            ..Self::unconditional(d_order, seed)
        }
    }

    /// Generator input width: noise, plus the product embedding when
    /// conditioning.
    pub fn gen_input_dim(&self) -> usize {
        self.noise_dim + self.conditional.map_or(0, |c| c.d_prod())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(GanError::BadConfig(format!("alpha {} not in [0,1]", self.alpha)));
        }
        if self.lambda_gp < 0.0 {
            return Err(GanError::BadConfig(format!(
                "lambda {} must be nonnegative",
                self.lambda_gp
            )));
        }
        if self.critic_ratio < 1 {
            return Err(GanError::BadConfig("critic ratio must be >= 1".into()));
        }
        if let Some(c) = self.conditional {
            if c.prod_start >= c.prod_end || c.prod_end > self.d_order {
                return Err(GanError::BadConfig(format!(
                    "conditioning slice {}..{} invalid for d={}",
                    c.prod_start, c.prod_end, self.d_order
                )));
            }
        }
        Ok(())
    }
}

/// Generator and critic parameter sets, optimizer state, and the
/// training log.
pub struct GanModel {
    pub cfg: GanConfig,
    pub gen: MlpParams,
    pub disc: MlpParams,
    pub opt_gen: ecgan_autodiff::AdamState,
    pub opt_disc: ecgan_autodiff::AdamState,
    pub metrics: MetricsLog,
    pub epochs_done: usize,
}

impl GanModel {
    pub fn new(cfg: GanConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ecgan_autodiff::stream::derived_rng(cfg.seed, "gan-init", 0);
        let gen = MlpParams::init(
            cfg.gen_input_dim(),
            cfg.gen_hidden[0],
            cfg.gen_hidden[1],
            cfg.d_order,
            &mut rng,
        );
        let disc = MlpParams::init(cfg.d_order, cfg.disc_hidden[0], cfg.disc_hidden[1], 1, &mut rng);
        let opt_gen = ecgan_autodiff::AdamState::new(cfg.adam, &gen.shapes());
        let opt_disc = ecgan_autodiff::AdamState::new(cfg.adam, &disc.shapes());
        Ok(Self {
            cfg,
            gen,
            disc,
            opt_gen,
            opt_disc,
            metrics: MetricsLog::default(),
            epochs_done: 0,
        })
    }

    /// Continues training on the given order matrix (and per-order product
    /// embeddings for conditional models) until the configured epoch count.
    pub fn train(
        &mut self,
        orders: &ecgan_autodiff::Matrix,
        cond: Option<&ecgan_autodiff::Matrix>,
        tracker: Option<&mut TrackerFn>,
    ) -> Result<()> {
        train::train(self, orders, cond, tracker)
    }

    pub fn disc_final_act(&self) -> FinalAct {
        self.cfg.loss_mode.disc_final_act()
    }

    /// Draws n order vectors; `pj` is required for conditional models and
    /// rejected for unconditional ones.
    pub fn sample(&self, n: usize, pj: Option<&[f64]>, seed: u64) -> Result<ecgan_autodiff::Matrix> {
        sample::sample_model(self, n, pj, seed)
    }
}

#[derive(Debug, Error)]
pub enum GanError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("training diverged at {context}; last good parameters retained")]
    Diverged { context: String },
    #[error("{0}")]
    Autodiff(#[from] ecgan_autodiff::AutodiffError),
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] ecgan_autodiff::checkpoint::CheckpointError),
    #[error("conditioning mismatch: {0}")]
    Conditioning(String),
}

pub type Result<T> = std::result::Result<T, GanError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_config_reproduces_reference_widths() {
        let cfg = GanConfig::unconditional(264, 1);
        assert_eq!(cfg.noise_dim, 96);
        assert_eq!(cfg.gen_hidden, [64, 128]);
        assert_eq!(cfg.disc_hidden, [128, 64]);
    }

    #[test]
    fn desk_scale_config_scales_down() {
        let cfg = GanConfig::unconditional(40, 1);
        assert_eq!(cfg.noise_dim, 16);
        assert_eq!(cfg.gen_hidden, [8, 16]);
        assert_eq!(cfg.disc_hidden, [16, 8]);
    }

    #[test]
    fn conditional_widens_generator_input() {
        let cfg = GanConfig::conditional(40, CondSpec { prod_start: 16, prod_end: 32 }, 1);
        assert_eq!(cfg.gen_input_dim(), 16 + 16);
        let full = GanConfig::conditional(264, CondSpec { prod_start: 128, prod_end: 256 }, 1);
        assert_eq!(full.gen_input_dim(), 96 + 128);
    }

    #[test]
    fn wasserstein_critic_head_is_linear() {
        assert_eq!(LossMode::WganGp.disc_final_act(), FinalAct::Linear);
        assert_eq!(LossMode::WganClip.disc_final_act(), FinalAct::Linear);
        assert_eq!(LossMode::Vanilla.disc_final_act(), FinalAct::Sigmoid);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = GanConfig::unconditional(40, 1);
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = GanConfig::unconditional(40, 1);
        cfg.lambda_gp = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = GanConfig::unconditional(40, 1);
        cfg.critic_ratio = 0;
        assert!(cfg.validate().is_err());
    }
}
