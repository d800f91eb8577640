//! Discriminative multi-task recurrent customer encoder.
//!
//! A single tanh recurrence consumes the customer's chronological product
//! embeddings; three softmax heads (next category, next price bucket, next
//! inter-purchase-gap bucket) train it with per-iteration uniform task
//! sampling. The hidden state is the customer embedding.

use chrono::NaiveDate;
use rand::Rng;

use ecgan_autodiff::adam::{AdamConfig, AdamState};
use ecgan_autodiff::init::glorot_uniform;
use ecgan_autodiff::stream::derived_rng;
use ecgan_autodiff::{checkpoint, Matrix, NodeId, Tape};
use ecgan_marketsim::{MarketplaceWorld, OrderRecord};

use crate::{EmbedError, Result};

/// Equal-frequency buckets over log price, fitted on training data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceBuckets {
    pub boundaries: [f64; 3],
}

impl PriceBuckets {
    pub fn fit(prices: &[f64]) -> Self {
        let mut logs: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
        logs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |f: f64| logs[((logs.len() - 1) as f64 * f) as usize];
        Self {
            boundaries: [q(0.25), q(0.5), q(0.75)],
        }
    }

    pub fn bucket(&self, price: f64) -> usize {
        let t = price.ln();
        self.boundaries.iter().filter(|&&b| t > b).count()
    }

    pub const COUNT: usize = 4;
}

/// Days until the next purchase: <=7, 8..=30, >30.
pub struct GapBuckets;

impl GapBuckets {
    pub fn bucket(days: i64) -> usize {
        if days <= 7 {
            0
        } else if days <= 30 {
            1
        } else {
            2
        }
    }

    pub const COUNT: usize = 3;
}

#[derive(Clone, Copy, Debug)]
pub struct EncoderConfig {
    pub d_cust: usize,
    pub d_prod: usize,
    pub iterations: usize,
    pub batch: usize,
    /// Maximum number of trailing purchases unrolled per training sequence.
    pub window: usize,
    pub learning_rate: f64,
}

impl EncoderConfig {
    pub fn desk_default() -> Self {
        Self {
            d_cust: 16,
            d_prod: 16,
            iterations: 1_200,
            batch: 24,
            window: 24,
            learning_rate: 3e-3,
        }
    }
}

/// One purchase in a customer's chronological history.
#[derive(Clone, Debug)]
pub struct PurchaseEvent {
    pub order_id: u32,
    pub product: u32,
    pub category: u32,
    pub price: f64,
    pub date: NaiveDate,
}

/// Chronological purchase events per customer index.
pub fn event_sequences(world: &MarketplaceWorld, orders: &[OrderRecord]) -> Vec<Vec<PurchaseEvent>> {
    let mut seqs: Vec<Vec<PurchaseEvent>> = vec![Vec::new(); world.customers.len()];
    for o in orders {
        let p = world.product(o.product).expect("order references product");
        seqs[o.customer as usize].push(PurchaseEvent {
            order_id: o.id,
            product: o.product,
            category: p.category,
            price: o.price,
            date: o.date,
        });
    }
    for s in &mut seqs {
        s.sort_by_key(|e| (e.date, e.order_id));
    }
    seqs
}

struct Head {
    w: Matrix,
    b: Matrix,
}

pub struct CustomerEncoder {
    w_in: Matrix,
    w_h: Matrix,
    b: Matrix,
    heads: [Head; 3],
    pub price_buckets: PriceBuckets,
    pub d_cust: usize,
    pub d_prod: usize,
    pub n_categories: usize,
}

/// Task indices for the three heads.
const TASK_CATEGORY: usize = 0;
const TASK_PRICE: usize = 1;
const TASK_GAP: usize = 2;

impl CustomerEncoder {
    /// Trains the encoder on the training log. Customers with fewer than two
    /// training orders do not contribute sequences (they keep the zero
    /// embedding until they accrue history).
    pub fn train(
        world: &MarketplaceWorld,
        train_log: &[OrderRecord],
        product_embeddings: &[Vec<f64>],
        cfg: &EncoderConfig,
        seed: u64,
    ) -> Result<Self> {
        let n_categories = world.config.categories;
        let price_buckets =
            PriceBuckets::fit(&train_log.iter().map(|o| o.price).collect::<Vec<_>>());
        let sequences = event_sequences(world, train_log);
        let eligible: Vec<usize> = (0..sequences.len())
            .filter(|&i| sequences[i].len() >= 2)
            .collect();
        if eligible.is_empty() {
            return Err(EmbedError::Diverged(
                "no customer has two or more training orders".into(),
            ));
        }

        let mut init_rng = derived_rng(seed, "encoder-init", 0);
        let mut enc = Self {
            w_in: glorot_uniform(cfg.d_prod, cfg.d_cust, &mut init_rng),
            w_h: glorot_uniform(cfg.d_cust, cfg.d_cust, &mut init_rng),
            b: Matrix::zeros(1, cfg.d_cust),
            heads: [
                Head {
                    w: glorot_uniform(cfg.d_cust, n_categories, &mut init_rng),
                    b: Matrix::zeros(1, n_categories),
                },
                Head {
                    w: glorot_uniform(cfg.d_cust, PriceBuckets::COUNT, &mut init_rng),
                    b: Matrix::zeros(1, PriceBuckets::COUNT),
                },
                Head {
                    w: glorot_uniform(cfg.d_cust, GapBuckets::COUNT, &mut init_rng),
                    b: Matrix::zeros(1, GapBuckets::COUNT),
                },
            ],
            price_buckets,
            d_cust: cfg.d_cust,
            d_prod: cfg.d_prod,
            n_categories,
        };

        let adam_cfg = AdamConfig {
            learning_rate: cfg.learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        };
        let mut adam_core = AdamState::new(
            adam_cfg,
            &[enc.w_in.shape(), enc.w_h.shape(), enc.b.shape()],
        );
        let mut adam_heads: Vec<AdamState> = enc
            .heads
            .iter()
            .map(|h| AdamState::new(adam_cfg, &[h.w.shape(), h.b.shape()]))
            .collect();

        for iter in 0..cfg.iterations {
            let mut rng = derived_rng(seed, "encoder-iter", iter as u64);
            let task = rng.random_range(0..3usize);

            let mut tape: Tape = Tape::new();
            let w_in = tape.input(enc.w_in.clone());
            let w_h = tape.input(enc.w_h.clone());
            let b = tape.input(enc.b.clone());
            let hw = tape.input(enc.heads[task].w.clone());
            let hb = tape.input(enc.heads[task].b.clone());

            let mut losses: Vec<NodeId> = Vec::new();
            for _ in 0..cfg.batch {
                let ci = eligible[rng.random_range(0..eligible.len())];
                let seq = &sequences[ci];
                let start = seq.len().saturating_sub(cfg.window + 1);
                let events = &seq[start..];

                let mut h = tape.constant(Matrix::zeros(1, cfg.d_cust));
                for s in 0..events.len() - 1 {
                    let x = tape.constant(row_matrix(
                        &product_embeddings[events[s].product as usize],
                    ));
                    let xm = tape.matmul(x, w_in)?;
                    let hm = tape.matmul(h, w_h)?;
                    let pre = tape.add(xm, hm)?;
                    let pre = tape.add_bias(pre, b)?;
                    h = tape.tanh(pre)?;

                    let target = match task {
                        TASK_CATEGORY => events[s + 1].category as usize,
                        TASK_PRICE => enc.price_buckets.bucket(events[s + 1].price),
                        _ => GapBuckets::bucket(
                            (events[s + 1].date - events[s].date).num_days(),
                        ),
                    };
                    let logits_pre = tape.matmul(h, hw)?;
                    let logits = tape.add_bias(logits_pre, hb)?;
                    losses.push(cross_entropy(&mut tape, logits, target)?);
                }
            }
            let mut total = losses[0];
            for &l in &losses[1..] {
                total = tape.add(total, l)?;
            }
            let loss = tape.scale(total, 1.0 / losses.len() as f64)?;
            let loss_value = tape.scalar_value(loss);
            if !loss_value.is_finite() {
                return Err(EmbedError::Diverged(format!(
                    "loss became {loss_value} at iteration {iter}"
                )));
            }

            let grads = tape.backward(loss, &[w_in, w_h, b, hw, hb])?;
            let gv: Vec<Matrix> = grads.iter().map(|&g| tape.value(g).clone()).collect();
            {
                let mut core = [
                    std::mem::take(&mut enc.w_in),
                    std::mem::take(&mut enc.w_h),
                    std::mem::take(&mut enc.b),
                ];
                adam_core.step(&mut core, &gv[0..3])?;
                let [w_in_new, w_h_new, b_new] = core;
                enc.w_in = w_in_new;
                enc.w_h = w_h_new;
                enc.b = b_new;
            }
            {
                let head = &mut enc.heads[task];
                let mut hp = [std::mem::take(&mut head.w), std::mem::take(&mut head.b)];
                adam_heads[task].step(&mut hp, &gv[3..5])?;
                let [w_new, b_new] = hp;
                head.w = w_new;
                head.b = b_new;
            }
        }
        Ok(enc)
    }

    /// Final hidden state over a product-embedding history; empty history is
    /// the zero vector. Entries are tanh-bounded.
    pub fn embed(&self, history: &[&[f64]]) -> Vec<f64> {
        let mut h = Matrix::zeros(1, self.d_cust);
        for &x in history {
            h = self.step_state(&h, x);
        }
        h.data().to_vec()
    }

    /// One recurrence step from an explicit state.
    pub fn step_state(&self, h: &Matrix, x: &[f64]) -> Matrix {
        debug_assert_eq!(x.len(), self.d_prod);
        let xm = row_matrix(x).matmul(&self.w_in);
        let hm = h.matmul(&self.w_h);
        xm.add(&hm).add_bias(&self.b).map(|v| v.tanh())
    }

    /// Argmax category prediction from a hidden state.
    pub fn predict_category(&self, state: &[f64]) -> usize {
        let logits = row_matrix(state)
            .matmul(&self.heads[TASK_CATEGORY].w)
            .add_bias(&self.heads[TASK_CATEGORY].b);
        argmax(logits.data())
    }

    /// Next-category accuracy over the given customers' sequences; the
    /// state is rolled forward and each position predicts its successor.
    pub fn category_head_accuracy(
        &self,
        sequences: &[Vec<PurchaseEvent>],
        product_embeddings: &[Vec<f64>],
    ) -> f64 {
        let mut hits = 0usize;
        let mut total = 0usize;
        for seq in sequences {
            if seq.len() < 2 {
                continue;
            }
            let mut h = Matrix::zeros(1, self.d_cust);
            for s in 0..seq.len() - 1 {
                h = self.step_state(&h, &product_embeddings[seq[s].product as usize]);
                if self.predict_category(h.data()) == seq[s + 1].category as usize {
                    hits += 1;
                }
                total += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let meta = Matrix::from_vec(
            1,
            3,
            vec![
                self.d_cust as f64,
                self.d_prod as f64,
                self.n_categories as f64,
            ],
        )
        .expect("finite meta");
        let buckets = Matrix::from_vec(1, 3, self.price_buckets.boundaries.to_vec())
            .expect("finite boundaries");
        let entries = vec![
            ("enc.meta".to_string(), meta),
            ("enc.price_buckets".to_string(), buckets),
            ("enc.w_in".to_string(), self.w_in.clone()),
            ("enc.w_h".to_string(), self.w_h.clone()),
            ("enc.b".to_string(), self.b.clone()),
            ("head.cat.w".to_string(), self.heads[0].w.clone()),
            ("head.cat.b".to_string(), self.heads[0].b.clone()),
            ("head.price.w".to_string(), self.heads[1].w.clone()),
            ("head.price.b".to_string(), self.heads[1].b.clone()),
            ("head.gap.w".to_string(), self.heads[2].w.clone()),
            ("head.gap.b".to_string(), self.heads[2].b.clone()),
        ];
        checkpoint::save(path, &entries)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let entries = checkpoint::load(path)?;
        let get = |name: &str| -> Result<Matrix> {
            Ok(checkpoint::find(&entries, name)?.clone())
        };
        let meta = get("enc.meta")?;
        let buckets = get("enc.price_buckets")?;
        Ok(Self {
            w_in: get("enc.w_in")?,
            w_h: get("enc.w_h")?,
            b: get("enc.b")?,
            heads: [
                Head { w: get("head.cat.w")?, b: get("head.cat.b")? },
                Head { w: get("head.price.w")?, b: get("head.price.b")? },
                Head { w: get("head.gap.w")?, b: get("head.gap.b")? },
            ],
            price_buckets: PriceBuckets {
                boundaries: [buckets.get(0, 0), buckets.get(0, 1), buckets.get(0, 2)],
            },
            d_cust: meta.get(0, 0) as usize,
            d_prod: meta.get(0, 1) as usize,
            n_categories: meta.get(0, 2) as usize,
        })
    }
}

fn row_matrix(v: &[f64]) -> Matrix {
    Matrix::from_vec(1, v.len(), v.to_vec()).expect("finite row")
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Stable cross-entropy of a 1xK logits node against a class index: the
/// row max is lifted off-tape as a constant, which leaves the gradient
/// exact because softmax is shift-invariant.
fn cross_entropy(tape: &mut Tape, logits: NodeId, target: usize) -> Result<NodeId> {
    let k = tape.value(logits).cols();
    debug_assert!(target < k);
    let max = tape
        .value(logits)
        .data()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let max_row = tape.constant(Matrix::filled(1, k, max));
    let shifted = tape.sub(logits, max_row)?;
    let e = tape.exp(shifted)?;
    let se = tape.sum_cols(e)?;
    let lse = tape.log(se)?;
    let lse_full = tape.affine(lse, 1.0, max)?;
    let mut onehot = Matrix::zeros(1, k);
    onehot.set(0, target, 1.0);
    let oh = tape.constant(onehot);
    let picked = tape.mul(logits, oh)?;
    let xt = tape.sum_cols(picked)?;
    Ok(tape.sub(lse_full, xt)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_buckets_are_equal_frequency() {
        let prices: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let b = PriceBuckets::fit(&prices);
        let mut counts = [0usize; 4];
        for &p in &prices {
            counts[b.bucket(p)] += 1;
        }
        for c in counts {
            assert!((20..=30).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn gap_buckets_thresholds() {
        assert_eq!(GapBuckets::bucket(0), 0);
        assert_eq!(GapBuckets::bucket(7), 0);
        assert_eq!(GapBuckets::bucket(8), 1);
        assert_eq!(GapBuckets::bucket(30), 1);
        assert_eq!(GapBuckets::bucket(31), 2);
    }

    #[test]
    fn cross_entropy_matches_closed_form() {
        let mut tape: Tape = Tape::new();
        let logits = tape.input(Matrix::row_from_f64(&[1.0, 2.0, 3.0]));
        let ce = cross_entropy(&mut tape, logits, 1).unwrap();
        let z = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln();
        assert!((tape.scalar_value(ce) - (z - 2.0)).abs() < 1e-12);
    }
}
