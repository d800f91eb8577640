use rand::seq::SliceRandom;
use rand::Rng;

use ecgan_autodiff::adam::AdamState;
use ecgan_autodiff::stream::{derive_seed, derived_rng};
use ecgan_autodiff::{checkpoint, Matrix};

use crate::loss::{discriminator_loss, generator_loss};
use crate::mlp::MlpParams;
use crate::sample::noise_batch;
use crate::{CondSpec, GanConfig, GanError, GanModel, LossMode, Result};

/// Probe invoked during training to track generator quality; receives the
/// live generator, the config and a derived seed, returns an accuracy.
pub type TrackerFn<'a> = dyn FnMut(&MlpParams, &GanConfig, u64) -> f64 + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    /// Generator steps completed when the row was written.
    pub step: u64,
    pub critic_loss: f64,
    pub gen_loss: f64,
    pub tracker_accuracy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
    pub critic_steps: u64,
    pub gen_steps: u64,
}

impl MetricsLog {
    /// CSV with a provenance comment line and the fixed column set.
    pub fn to_csv(&self, provenance: &str) -> String {
        let mut out = format!("# {provenance}\nstep,critic_loss,gen_loss,tracker_accuracy\n");
        for r in &self.rows {
            let acc = r
                .tracker_accuracy
                .map(|a| a.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.step, r.critic_loss, r.gen_loss, acc
            ));
        }
        out
    }
}

/// Runs the alternating schedule from the model's current epoch up to the
/// configured epoch count. Minibatches cycle critic_ratio critic steps then
/// one generator step; trailing batches that cannot complete a full cycle
/// are dropped so the logged step ratio is exact. Each epoch's randomness
/// is derived from (seed, epoch), which makes checkpoint resume replay the
/// exact remaining schedule.
pub fn train(
    model: &mut GanModel,
    orders: &Matrix,
    cond: Option<&Matrix>,
    mut tracker: Option<&mut TrackerFn>,
) -> Result<()> {
    let cfg = model.cfg;
    cfg.validate()?;
    if orders.rows() < cfg.minibatch {
        return Err(GanError::BadConfig(format!(
            "training needs at least one minibatch of {} rows, got {}",
            cfg.minibatch,
            orders.rows()
        )));
    }
    if orders.cols() != cfg.d_order {
        return Err(GanError::BadConfig(format!(
            "order matrix width {} does not match d={}",
            orders.cols(),
            cfg.d_order
        )));
    }
    match (cfg.conditional, cond) {
        (Some(c), Some(m)) => {
            if m.shape() != (orders.rows(), c.d_prod()) {
                return Err(GanError::Conditioning(format!(
                    "conditioning matrix must be {}x{}, got {}x{}",
                    orders.rows(),
                    c.d_prod(),
                    m.rows(),
                    m.cols()
                )));
            }
        }
        (None, None) => {}
        (Some(_), None) => {
            return Err(GanError::Conditioning(
                "conditional model needs per-order product embeddings".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(GanError::Conditioning(
                "unconditional model takes no conditioning matrix".into(),
            ))
        }
    }

    let cycle = cfg.critic_ratio + 1;
    let mut last_probe_step = model.metrics.gen_steps;

    for epoch in model.epochs_done..cfg.epochs {
        let mut rng = derived_rng(cfg.seed, "gan-epoch", epoch as u64);
        let mut indices: Vec<usize> = (0..orders.rows()).collect();
        indices.shuffle(&mut rng);
        let n_batches = orders.rows() / cfg.minibatch;
        let usable = n_batches - (n_batches % cycle);

        let mut critic_sum = 0.0;
        let mut critic_count = 0u64;
        let mut gen_sum = 0.0;
        let mut gen_count = 0u64;
        let mut probe_this_epoch = None;

        for b in 0..usable {
            let batch = &indices[b * cfg.minibatch..(b + 1) * cfg.minibatch];
            let real = orders.select_rows(batch);
            let pj = cond.map(|m| m.select_rows(batch));

            if b % cycle < cfg.critic_ratio {
                let z = noise_batch(cfg.minibatch, cfg.noise_dim, &mut rng);
                let fake = crate::sample::forward_fake(&model.gen, &cfg, &z, pj.as_ref())?;
                let eps = match cfg.loss_mode {
                    LossMode::WganGp => Some(Matrix::from_fn(cfg.minibatch, 1, |_, _| {
                        rng.random_range(0.0..1.0)
                    })),
                    _ => None,
                };
                let parts = discriminator_loss(&model.disc, &cfg, &real, &fake, eps.as_ref())?;
                if !parts.total.is_finite() {
                    return Err(GanError::Diverged {
                        context: format!("critic loss {} at epoch {epoch}", parts.total),
                    });
                }
                let mut ms = model.disc.matrices_vec();
                model
                    .opt_disc
                    .step(&mut ms, &parts.grads)
                    .map_err(|e| GanError::Diverged { context: e.to_string() })?;
                model.disc.set_from(ms);
                if cfg.loss_mode == LossMode::WganClip {
                    model.disc.clamp_all(cfg.clip);
                }
                model.metrics.critic_steps += 1;
                critic_sum += parts.total;
                critic_count += 1;
            } else {
                let z = noise_batch(cfg.minibatch, cfg.noise_dim, &mut rng);
                let parts = generator_loss(&model.gen, &model.disc, &cfg, &z, pj.as_ref())?;
                if !parts.total.is_finite() {
                    return Err(GanError::Diverged {
                        context: format!("generator loss {} at epoch {epoch}", parts.total),
                    });
                }
                let mut ms = model.gen.matrices_vec();
                model
                    .opt_gen
                    .step(&mut ms, &parts.grads)
                    .map_err(|e| GanError::Diverged { context: e.to_string() })?;
                model.gen.set_from(ms);
                model.metrics.gen_steps += 1;
                gen_sum += parts.total;
                gen_count += 1;

                if let Some(tracker) = tracker.as_deref_mut() {
                    if model.metrics.gen_steps - last_probe_step >= cfg.tracker_every {
                        let probe_seed =
                            derive_seed(cfg.seed, "tracker", model.metrics.gen_steps);
                        probe_this_epoch = Some(tracker(&model.gen, &cfg, probe_seed));
                        last_probe_step = model.metrics.gen_steps;
                    }
                }
            }
        }

        model.metrics.rows.push(MetricsRow {
            step: model.metrics.gen_steps,
            critic_loss: if critic_count > 0 { critic_sum / critic_count as f64 } else { 0.0 },
            gen_loss: if gen_count > 0 { gen_sum / gen_count as f64 } else { 0.0 },
            tracker_accuracy: probe_this_epoch,
        });
        model.epochs_done = epoch + 1;
    }
    Ok(())
}

fn loss_mode_code(m: LossMode) -> f64 {
    match m {
        LossMode::Vanilla => 0.0,
        LossMode::WganClip => 1.0,
        LossMode::WganGp => 2.0,
    }
}

fn loss_mode_from_code(c: f64) -> Result<LossMode> {
    match c as i64 {
        0 => Ok(LossMode::Vanilla),
        1 => Ok(LossMode::WganClip),
        2 => Ok(LossMode::WganGp),
        other => Err(GanError::BadConfig(format!("unknown loss mode code {other}"))),
    }
}

pub fn save_model(path: &std::path::Path, model: &GanModel) -> Result<()> {
    let cfg = &model.cfg;
    let cond = cfg.conditional;
    let cfg_row = vec![
        cfg.d_order as f64,
        cfg.noise_dim as f64,
        cfg.gen_hidden[0] as f64,
        cfg.gen_hidden[1] as f64,
        cfg.disc_hidden[0] as f64,
        cfg.disc_hidden[1] as f64,
        loss_mode_code(cfg.loss_mode),
        cfg.lambda_gp,
        cfg.clip,
        cfg.alpha,
        cfg.critic_ratio as f64,
        cfg.minibatch as f64,
        cfg.epochs as f64,
        cfg.tracker_every as f64,
        if cond.is_some() { 1.0 } else { 0.0 },
        cond.map_or(0.0, |c| c.prod_start as f64),
        cond.map_or(0.0, |c| c.prod_end as f64),
        cfg.adam.learning_rate,
        cfg.adam.beta1,
        cfg.adam.beta2,
        cfg.adam.epsilon,
    ];
    let mut entries = vec![
        ("meta.cfg".to_string(), Matrix::from_vec(1, cfg_row.len(), cfg_row).unwrap()),
        (
            "meta.seed".to_string(),
            Matrix::from_vec(
                1,
                2,
                vec![(cfg.seed >> 32) as f64, (cfg.seed & 0xFFFF_FFFF) as f64],
            )
            .unwrap(),
        ),
        (
            "meta.progress".to_string(),
            Matrix::from_vec(
                1,
                3,
                vec![
                    model.epochs_done as f64,
                    model.metrics.critic_steps as f64,
                    model.metrics.gen_steps as f64,
                ],
            )
            .unwrap(),
        ),
    ];
    entries.extend(model.gen.named_entries("gen"));
    entries.extend(model.disc.named_entries("disc"));
    push_adam(&mut entries, "adam.gen", &model.opt_gen);
    push_adam(&mut entries, "adam.disc", &model.opt_disc);
    checkpoint::save(path, &entries)?;
    Ok(())
}

fn push_adam(entries: &mut Vec<(String, Matrix)>, prefix: &str, state: &AdamState) {
    let (m, v) = state.moments();
    for (i, mat) in m.iter().enumerate() {
        entries.push((format!("{prefix}.m{i}"), mat.clone()));
    }
    for (i, mat) in v.iter().enumerate() {
        entries.push((format!("{prefix}.v{i}"), mat.clone()));
    }
    entries.push((
        format!("{prefix}.t"),
        Matrix::from_vec(1, 1, vec![state.step_count() as f64]).unwrap(),
    ));
}

fn pull_adam(
    entries: &[(String, Matrix)],
    prefix: &str,
    state: &mut AdamState,
    count: usize,
) -> Result<()> {
    let mut m = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    for i in 0..count {
        m.push(checkpoint::find(entries, &format!("{prefix}.m{i}"))?.clone());
        v.push(checkpoint::find(entries, &format!("{prefix}.v{i}"))?.clone());
    }
    let t = checkpoint::find(entries, &format!("{prefix}.t"))?.get(0, 0) as u64;
    state.restore(m, v, t);
    Ok(())
}

pub fn load_model(path: &std::path::Path) -> Result<GanModel> {
    let entries = checkpoint::load(path)?;
    let cfg_row = checkpoint::find(&entries, "meta.cfg")?;
    let seed_row = checkpoint::find(&entries, "meta.seed")?;
    let progress = checkpoint::find(&entries, "meta.progress")?;

    let g = |i: usize| cfg_row.get(0, i);
    let conditional = if g(14) > 0.5 {
        Some(CondSpec {
            prod_start: g(15) as usize,
            prod_end: g(16) as usize,
        })
    } else {
        None
    };
    let cfg = GanConfig {
        d_order: g(0) as usize,
        noise_dim: g(1) as usize,
        gen_hidden: [g(2) as usize, g(3) as usize],
        disc_hidden: [g(4) as usize, g(5) as usize],
        loss_mode: loss_mode_from_code(g(6))?,
        lambda_gp: g(7),
        clip: g(8),
        alpha: g(9),
        critic_ratio: g(10) as usize,
        minibatch: g(11) as usize,
        epochs: g(12) as usize,
        seed: ((seed_row.get(0, 0) as u64) << 32) | (seed_row.get(0, 1) as u64),
        adam: ecgan_autodiff::adam::AdamConfig {
            learning_rate: g(17),
            beta1: g(18),
            beta2: g(19),
            epsilon: g(20),
        },
        conditional,
        tracker_every: g(13) as u64,
    };

    let mut model = GanModel::new(cfg)?;
    model.gen = MlpParams::from_entries(&entries, "gen")?;
    model.disc = MlpParams::from_entries(&entries, "disc")?;
    pull_adam(&entries, "adam.gen", &mut model.opt_gen, 6)?;
    pull_adam(&entries, "adam.disc", &mut model.opt_disc, 6)?;
    model.epochs_done = progress.get(0, 0) as usize;
    model.metrics.critic_steps = progress.get(0, 1) as u64;
    model.metrics.gen_steps = progress.get(0, 2) as u64;
    Ok(model)
}
