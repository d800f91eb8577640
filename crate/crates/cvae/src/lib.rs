//! Conditional variational autoencoder baseline for product-conditioned
//! order generation. The encoder sees [order, product embedding] and emits
//! a diagonal Gaussian; the decoder maps [latent, product embedding] back
//! to an order vector with a tanh head. Architecture mirrors the GAN
//! widths (encoder = critic, decoder = generator) for a fair comparison,
//! and checkpoints/metrics use the same formats.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use ecgan_autodiff::adam::{AdamConfig, AdamState};
use ecgan_autodiff::init::glorot_uniform;
use ecgan_autodiff::stream::derived_rng;
use ecgan_autodiff::{checkpoint, Matrix, NodeId, Tape};
use ecgan_gan::{FinalAct, MetricsLog, MetricsRow, MlpParams};

#[derive(Debug, Error)]
pub enum CvaeError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("training diverged at {0}")]
    Diverged(String),
    #[error("{0}")]
    Autodiff(#[from] ecgan_autodiff::AutodiffError),
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] ecgan_autodiff::checkpoint::CheckpointError),
    #[error("{0}")]
    Gan(#[from] ecgan_gan::GanError),
}

pub type Result<T> = std::result::Result<T, CvaeError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvaeConfig {
    pub d_order: usize,
    pub d_prod: usize,
    pub latent: usize,
    pub enc_hidden: [usize; 2],
    pub dec_hidden: [usize; 2],
    pub beta_kl: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl CvaeConfig {
    /// Mirrors the GAN architecture choices at dimension `d_order`: the
    /// encoder uses the critic widths, the decoder the generator widths,
    /// and the latent matches the noise dimension.
    pub fn matching_gan(gan: &ecgan_gan::GanConfig, d_prod: usize, seed: u64) -> Self {
        Self {
            d_order: gan.d_order,
            d_prod,
            latent: gan.noise_dim,
            enc_hidden: gan.disc_hidden,
            dec_hidden: gan.gen_hidden,
            beta_kl: 1.0,
            minibatch: gan.minibatch,
            epochs: gan.epochs,
            seed,
            adam: AdamConfig {
                learning_rate: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
        }
    }
}

struct EncoderParams {
    w1: Matrix,
    b1: Matrix,
    w2: Matrix,
    b2: Matrix,
    w_mu: Matrix,
    b_mu: Matrix,
    w_lv: Matrix,
    b_lv: Matrix,
}

impl EncoderParams {
    fn matrices_vec(&self) -> Vec<Matrix> {
        vec![
            self.w1.clone(),
            self.b1.clone(),
            self.w2.clone(),
            self.b2.clone(),
            self.w_mu.clone(),
            self.b_mu.clone(),
            self.w_lv.clone(),
            self.b_lv.clone(),
        ]
    }

    fn set_from(&mut self, ms: Vec<Matrix>) {
        let mut it = ms.into_iter();
        self.w1 = it.next().unwrap();
        self.b1 = it.next().unwrap();
        self.w2 = it.next().unwrap();
        self.b2 = it.next().unwrap();
        self.w_mu = it.next().unwrap();
        self.b_mu = it.next().unwrap();
        self.w_lv = it.next().unwrap();
        self.b_lv = it.next().unwrap();
    }
}

pub struct CvaeModel {
    pub cfg: CvaeConfig,
    enc: EncoderParams,
    dec: MlpParams,
    opt: AdamState,
    /// Live KL weight; halved once if the posterior collapses.
    pub beta_current: f64,
    pub collapse_epoch: Option<usize>,
    pub metrics: MetricsLog,
    pub epochs_done: usize,
}

/// Loss pieces for one minibatch.
pub struct CvaeLossParts {
    pub total: f64,
    /// Mean squared reconstruction error (summed over dimensions).
    pub reconstruction: f64,
    /// KL(N(mu, sigma^2) || N(0, I)), mean over the batch.
    pub kl: f64,
    grads: Vec<Matrix>,
}

impl CvaeModel {
    pub fn new(cfg: CvaeConfig) -> Result<Self> {
        if cfg.latent == 0 || cfg.d_order == 0 {
            return Err(CvaeError::BadConfig("zero dimension".into()));
        }
        let mut rng = derived_rng(cfg.seed, "cvae-init", 0);
        let enc_in = cfg.d_order + cfg.d_prod;
        let enc = EncoderParams {
            w1: glorot_uniform(enc_in, cfg.enc_hidden[0], &mut rng),
            b1: Matrix::zeros(1, cfg.enc_hidden[0]),
            w2: glorot_uniform(cfg.enc_hidden[0], cfg.enc_hidden[1], &mut rng),
            b2: Matrix::zeros(1, cfg.enc_hidden[1]),
            w_mu: glorot_uniform(cfg.enc_hidden[1], cfg.latent, &mut rng),
            b_mu: Matrix::zeros(1, cfg.latent),
            w_lv: glorot_uniform(cfg.enc_hidden[1], cfg.latent, &mut rng),
            b_lv: Matrix::zeros(1, cfg.latent),
        };
        let dec = MlpParams::init(
            cfg.latent + cfg.d_prod,
            cfg.dec_hidden[0],
            cfg.dec_hidden[1],
            cfg.d_order,
            &mut rng,
        );
        let mut shapes: Vec<(usize, usize)> =
            enc.matrices_vec().iter().map(|m| m.shape()).collect();
        shapes.extend(dec.shapes());
        let opt = AdamState::new(cfg.adam, &shapes);
        Ok(Self {
            cfg,
            enc,
            dec,
            opt,
            beta_current: cfg.beta_kl,
            collapse_epoch: None,
            metrics: MetricsLog::default(),
            epochs_done: 0,
        })
    }

    /// Builds the ELBO loss on a tape and returns value, parts and
    /// gradients for all parameters. `eps` supplies the reparameterization
    /// draws (batch x latent).
    pub fn loss(&self, orders: &Matrix, pj: &Matrix, eps: &Matrix) -> Result<CvaeLossParts> {
        let b = orders.rows();
        if pj.shape() != (b, self.cfg.d_prod) {
            return Err(CvaeError::BadConfig(format!(
                "product batch must be {b}x{}, got {}x{}",
                self.cfg.d_prod,
                pj.rows(),
                pj.cols()
            )));
        }
        if eps.shape() != (b, self.cfg.latent) {
            return Err(CvaeError::BadConfig("bad eps shape".into()));
        }

        let mut tape = Tape::new();
        let ep: Vec<NodeId> = self
            .enc
            .matrices_vec()
            .into_iter()
            .map(|m| tape.input(m))
            .collect();
        let dp = self.dec.record(&mut tape);

        let x = tape.constant(orders.clone());
        let pj_l = tape.constant(pj.clone());
        let enc_in = tape.concat_cols(x, pj_l)?;

        let z1 = tape.matmul(enc_in, ep[0])?;
        let z1 = tape.add_bias(z1, ep[1])?;
        let a1 = tape.relu(z1)?;
        let z2 = tape.matmul(a1, ep[2])?;
        let z2 = tape.add_bias(z2, ep[3])?;
        let a2 = tape.relu(z2)?;
        let mu = tape.matmul(a2, ep[4])?;
        let mu = tape.add_bias(mu, ep[5])?;
        let lv = tape.matmul(a2, ep[6])?;
        let lv = tape.add_bias(lv, ep[7])?;

        // Reparameterized sample: z = mu + exp(lv/2) * eps.
        let half_lv = tape.scale(lv, 0.5)?;
        let sigma = tape.exp(half_lv)?;
        let eps_l = tape.constant(eps.clone());
        let noise = tape.mul(sigma, eps_l)?;
        let z = tape.add(mu, noise)?;

        let dec_in = tape.concat_cols(z, pj_l)?;
        let xhat = MlpParams::forward_from(&mut tape, &dp, dec_in, FinalAct::Tanh)?;

        // Reconstruction: mean over batch of the squared L2 gap.
        let diff = tape.sub(xhat, x)?;
        let dsq = tape.square(diff)?;
        let drow = tape.sum_cols(dsq)?;
        let recon = tape.mean_all(drow)?;

        // KL to the standard normal: 1/2 sum(mu^2 + sigma^2 - 1 - log sigma^2).
        let mu_sq = tape.square(mu)?;
        let var = tape.exp(lv)?;
        let s1 = tape.add(mu_sq, var)?;
        let s2 = tape.affine(s1, 1.0, -1.0)?;
        let s3 = tape.sub(s2, lv)?;
        let krow = tape.sum_cols(s3)?;
        let kmean = tape.mean_all(krow)?;
        let kl = tape.scale(kmean, 0.5)?;

        let weighted = tape.scale(kl, self.beta_current)?;
        let total = tape.add(recon, weighted)?;

        let recon_v = tape.scalar_value(recon);
        let kl_v = tape.scalar_value(kl);
        let total_v = tape.scalar_value(total);

        let mut wrt = ep.clone();
        wrt.extend_from_slice(&dp);
        let grads = tape.backward(total, &wrt)?;
        let grads = grads.iter().map(|&g| tape.value(g).clone()).collect();
        Ok(CvaeLossParts {
            total: total_v,
            reconstruction: recon_v,
            kl: kl_v,
            grads,
        })
    }

    /// Epoch loop with derived per-epoch randomness (checkpoint-resumable).
    pub fn train(&mut self, orders: &Matrix, pj: &Matrix) -> Result<()> {
        if orders.rows() < self.cfg.minibatch {
            return Err(CvaeError::BadConfig(format!(
                "training needs at least {} rows",
                self.cfg.minibatch
            )));
        }
        for epoch in self.epochs_done..self.cfg.epochs {
            let mut rng = derived_rng(self.cfg.seed, "cvae-epoch", epoch as u64);
            let mut indices: Vec<usize> = (0..orders.rows()).collect();
            rand::seq::SliceRandom::shuffle(indices.as_mut_slice(), &mut rng);

            let mut total_sum = 0.0;
            let mut kl_sum = 0.0;
            let mut steps = 0u64;
            for chunk in indices.chunks_exact(self.cfg.minibatch) {
                let x = orders.select_rows(chunk);
                let p = pj.select_rows(chunk);
                let eps = Matrix::from_fn(self.cfg.minibatch, self.cfg.latent, |_, _| {
                    rng.sample(StandardNormal)
                });
                let parts = self.loss(&x, &p, &eps)?;
                if !parts.total.is_finite() {
                    return Err(CvaeError::Diverged(format!(
                        "loss {} at epoch {epoch}",
                        parts.total
                    )));
                }
                let mut ms = self.enc.matrices_vec();
                ms.extend(self.dec.matrices_vec());
                self.opt
                    .step(&mut ms, &parts.grads)
                    .map_err(|e| CvaeError::Diverged(e.to_string()))?;
                let dec_ms = ms.split_off(8);
                self.enc.set_from(ms);
                self.dec.set_from(dec_ms);

                total_sum += parts.total;
                kl_sum += parts.kl;
                steps += 1;
                self.metrics.gen_steps += 1;
            }

            let mean_kl = kl_sum / steps as f64;
            // Collapse watch: a near-zero posterior KL means the decoder is
            // ignoring z; relax the KL pressure once.
            if mean_kl / (self.cfg.latent as f64) < 1e-3 && self.beta_current > 0.5 {
                self.beta_current = 0.5;
                self.collapse_epoch = Some(epoch);
            }
            self.metrics.rows.push(MetricsRow {
                step: self.metrics.gen_steps,
                critic_loss: total_sum / steps as f64,
                gen_loss: mean_kl,
                tracker_accuracy: None,
            });
            self.epochs_done = epoch + 1;
        }
        Ok(())
    }

    /// Decodes n draws from the prior, conditioned on one product
    /// embedding. Rows land in (-1, 1) through the tanh head.
    pub fn sample(&self, n: usize, pj: &[f64], seed: u64) -> Result<Matrix> {
        if pj.len() != self.cfg.d_prod {
            return Err(CvaeError::BadConfig(format!(
                "product embedding has {} entries, expected {}",
                pj.len(),
                self.cfg.d_prod
            )));
        }
        if n == 0 {
            return Ok(Matrix::zeros(0, self.cfg.d_order));
        }
        let mut rng = derived_rng(seed, "cvae-sample", 0);
        let z = Matrix::from_fn(n, self.cfg.latent, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut pj_rows = Vec::with_capacity(n * pj.len());
        for _ in 0..n {
            pj_rows.extend_from_slice(pj);
        }
        let pj_m = Matrix::from_vec(n, pj.len(), pj_rows)?;
        Ok(self.decode(&z, &pj_m))
    }

    /// Decoder forward pass.
    pub fn decode(&self, z: &Matrix, pj: &Matrix) -> Matrix {
        let input = z.concat_cols(pj);
        self.dec.forward_value(&input, FinalAct::Tanh)
    }

    /// Posterior mean reconstruction (no sampling), for held-out checks.
    pub fn reconstruct_mean(&self, orders: &Matrix, pj: &Matrix) -> Matrix {
        let relu = |m: Matrix| m.map(|v| if v > 0.0 { v } else { 0.0 });
        let enc_in = orders.concat_cols(pj);
        let a1 = relu(enc_in.matmul(&self.enc.w1).add_bias(&self.enc.b1));
        let a2 = relu(a1.matmul(&self.enc.w2).add_bias(&self.enc.b2));
        let mu = a2.matmul(&self.enc.w_mu).add_bias(&self.enc.b_mu);
        self.decode(&mu, pj)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let cfg = &self.cfg;
        let cfg_row = vec![
            cfg.d_order as f64,
            cfg.d_prod as f64,
            cfg.latent as f64,
            cfg.enc_hidden[0] as f64,
            cfg.enc_hidden[1] as f64,
            cfg.dec_hidden[0] as f64,
            cfg.dec_hidden[1] as f64,
            cfg.beta_kl,
            cfg.minibatch as f64,
            cfg.epochs as f64,
            cfg.adam.learning_rate,
            cfg.adam.beta1,
            cfg.adam.beta2,
            cfg.adam.epsilon,
            self.beta_current,
            self.epochs_done as f64,
        ];
        let mut entries = vec![
            ("meta.cfg".to_string(), Matrix::from_vec(1, cfg_row.len(), cfg_row).unwrap()),
            (
                "meta.seed".to_string(),
                Matrix::from_vec(1, 2, vec![(cfg.seed >> 32) as f64, (cfg.seed & 0xFFFF_FFFF) as f64])
                    .unwrap(),
            ),
        ];
        let enc_names = ["w1", "b1", "w2", "b2", "w_mu", "b_mu", "w_lv", "b_lv"];
        for (name, m) in enc_names.iter().zip(self.enc.matrices_vec()) {
            entries.push((format!("enc.{name}"), m));
        }
        entries.extend(self.dec.named_entries("dec"));
        let (m, v) = self.opt.moments();
        for (i, mat) in m.iter().enumerate() {
            entries.push((format!("adam.m{i}"), mat.clone()));
        }
        for (i, mat) in v.iter().enumerate() {
            entries.push((format!("adam.v{i}"), mat.clone()));
        }
        entries.push((
            "adam.t".to_string(),
            Matrix::from_vec(1, 1, vec![self.opt.step_count() as f64]).unwrap(),
        ));
        checkpoint::save(path, &entries)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let entries = checkpoint::load(path)?;
        let cfg_row = checkpoint::find(&entries, "meta.cfg")?;
        let seed_row = checkpoint::find(&entries, "meta.seed")?;
        let g = |i: usize| cfg_row.get(0, i);
        let cfg = CvaeConfig {
            d_order: g(0) as usize,
            d_prod: g(1) as usize,
            latent: g(2) as usize,
            enc_hidden: [g(3) as usize, g(4) as usize],
            dec_hidden: [g(5) as usize, g(6) as usize],
            beta_kl: g(7),
            minibatch: g(8) as usize,
            epochs: g(9) as usize,
            seed: ((seed_row.get(0, 0) as u64) << 32) | (seed_row.get(0, 1) as u64),
            adam: AdamConfig {
                learning_rate: g(10),
                beta1: g(11),
                beta2: g(12),
                epsilon: g(13),
            },
        };
        let mut model = Self::new(cfg)?;
        let get = |name: &str| -> Result<Matrix> { Ok(checkpoint::find(&entries, name)?.clone()) };
        model.enc.set_from(vec![
            get("enc.w1")?,
            get("enc.b1")?,
            get("enc.w2")?,
            get("enc.b2")?,
            get("enc.w_mu")?,
            get("enc.b_mu")?,
            get("enc.w_lv")?,
            get("enc.b_lv")?,
        ]);
        model.dec = MlpParams::from_entries(&entries, "dec")?;
        let count = 8 + 6;
        let mut m = Vec::with_capacity(count);
        let mut v = Vec::with_capacity(count);
        for i in 0..count {
            m.push(get(&format!("adam.m{i}"))?);
            v.push(get(&format!("adam.v{i}"))?);
        }
        let t = checkpoint::find(&entries, "adam.t")?.get(0, 0) as u64;
        model.opt.restore(m, v, t);
        model.beta_current = g(14);
        model.epochs_done = g(15) as usize;
        Ok(model)
    }
}
