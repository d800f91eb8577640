use ecgan_autodiff::Matrix;
use ecgan_embedding::encoder::{event_sequences, CustomerEncoder, EncoderConfig};
use ecgan_embedding::pipeline::{embed_orders, EmbedArtifacts};
use ecgan_embedding::wordvec::{embed_all_products, idf_weights, WordVectors};
use ecgan_embedding::{OrderLayout, PriceScaler};
use ecgan_marketsim::{generate_world, split_orders, MarketplaceWorld, WorldConfig};

fn test_world() -> MarketplaceWorld {
    generate_world(&WorldConfig {
        customers: 300,
        products: 120,
        categories: 12,
        orders: 9_000,
        ..WorldConfig::desk_default(31)
    })
    .unwrap()
}

fn quick_encoder_cfg() -> EncoderConfig {
    EncoderConfig {
        iterations: 500,
        ..EncoderConfig::desk_default()
    }
}

struct Fixture {
    world: MarketplaceWorld,
    train: Vec<ecgan_marketsim::OrderRecord>,
    eval: Vec<ecgan_marketsim::OrderRecord>,
    prod_embs: Vec<Vec<f64>>,
    encoder: CustomerEncoder,
}

fn fixture() -> &'static Fixture {
    use std::sync::OnceLock;
    static FIX: OnceLock<Fixture> = OnceLock::new();
    FIX.get_or_init(|| {
        let world = test_world();
        let (train, eval) = split_orders(&world.orders, 0.2, world.seed()).unwrap();
        let vectors = WordVectors::for_world(&world, 16);
        let idf = idf_weights(&world);
        let prod_embs = embed_all_products(&world, &vectors, &idf).unwrap();
        let encoder =
            CustomerEncoder::train(&world, &train, &prod_embs, &quick_encoder_cfg(), 7).unwrap();
        Fixture { world, train, eval, prod_embs, encoder }
    })
}

#[test]
fn product_embeddings_bounded_and_category_clustered() {
    let f = fixture();
    for e in &f.prod_embs {
        assert!(e.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
    // Same-category products share vocabulary, so intra-category distances
    // should be systematically smaller than inter-category ones.
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    for i in 0..f.world.products.len() {
        for j in (i + 1)..f.world.products.len() {
            let d = dist(&f.prod_embs[i], &f.prod_embs[j]);
            if f.world.products[i].category == f.world.products[j].category {
                intra.push(d);
            } else {
                inter.push(d);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&intra) < 0.6 * mean(&inter),
        "intra {} inter {}",
        mean(&intra),
        mean(&inter)
    );
}

#[test]
fn empty_history_is_zero_vector() {
    let f = fixture();
    assert_eq!(f.encoder.embed(&[]), vec![0.0; 16]);
}

#[test]
fn single_step_matches_hand_rolled_recurrence() {
    let f = fixture();
    let x = &f.prod_embs[0];
    let got = f.encoder.embed(&[x.as_slice()]);
    // One step from the zero state: tanh(x W_in + b).
    let by_hand = f
        .encoder
        .step_state(&Matrix::zeros(1, 16), x);
    assert_eq!(got, by_hand.data());
}

#[test]
fn same_history_twice_is_identical_and_bounded() {
    let f = fixture();
    let hist: Vec<&[f64]> = f.prod_embs[..10].iter().map(|v| v.as_slice()).collect();
    let a = f.encoder.embed(&hist);
    let b = f.encoder.embed(&hist);
    assert_eq!(a, b);
    assert!(a.iter().all(|v| v.abs() < 1.0));
}

#[test]
fn shuffled_history_changes_embedding() {
    let f = fixture();
    let hist: Vec<&[f64]> = f.prod_embs[..8].iter().map(|v| v.as_slice()).collect();
    let mut shuffled = hist.clone();
    shuffled.reverse();
    assert_ne!(f.encoder.embed(&hist), f.encoder.embed(&shuffled));
}

#[test]
fn category_head_beats_majority_baseline() {
    let f = fixture();
    // Majority share of next-purchase categories in the training log.
    let train_seqs = event_sequences(&f.world, &f.train);
    let mut counts = vec![0usize; f.world.config.categories];
    let mut total = 0usize;
    for seq in &train_seqs {
        for e in seq.iter().skip(1) {
            counts[e.category as usize] += 1;
            total += 1;
        }
    }
    let majority = counts.iter().copied().max().unwrap() as f64 / total as f64;

    let eval_seqs = event_sequences(&f.world, &f.eval);
    let acc = f.encoder.category_head_accuracy(&eval_seqs, &f.prod_embs);
    assert!(
        acc > 1.5 * majority,
        "accuracy {acc} vs majority baseline {majority}"
    );
}

#[test]
fn embedded_orders_lie_in_unit_box_and_disassemble() {
    let f = fixture();
    let layout = OrderLayout::desk_default();
    let scaler = PriceScaler::fit(f.train.iter().map(|o| &o.price)).unwrap();
    let embedded = embed_orders(
        &f.world,
        &f.train[..2_000],
        &f.train,
        &f.encoder,
        &f.prod_embs,
        &scaler,
        &layout,
    )
    .unwrap();
    assert_eq!(embedded.matrix.rows(), 2_000);
    assert_eq!(embedded.matrix.cols(), 40);
    for i in 0..embedded.matrix.rows() {
        for &v in embedded.matrix.row(i) {
            assert!((-1.0..=1.0).contains(&v), "row {i} value {v}");
        }
        let row = embedded.matrix.row(i);
        let (c, p, price, d) = ecgan_embedding::disassemble_order(&layout, row).unwrap();
        assert_eq!(c.len(), 16);
        assert_eq!(p.len(), 16);
        assert!((-1.0..=1.0).contains(&price));
        assert_eq!(d.len(), 7);
        assert_eq!(p, embedded.product_rows.row(i));
    }
}

#[test]
fn eval_orders_embed_against_training_history() {
    let f = fixture();
    let layout = OrderLayout::desk_default();
    let scaler = PriceScaler::fit(f.train.iter().map(|o| &o.price)).unwrap();
    let embedded = embed_orders(
        &f.world,
        &f.eval[..500],
        &f.train,
        &f.encoder,
        &f.prod_embs,
        &scaler,
        &layout,
    )
    .unwrap();
    assert_eq!(embedded.matrix.rows(), 500);
    assert!(embedded.matrix.is_finite());
}

#[test]
fn encoder_checkpoint_round_trip() {
    let f = fixture();
    let dir = std::env::temp_dir().join("ecgan_encoder_rt");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("encoder.ckpt");
    f.encoder.save(&path).unwrap();
    let loaded = CustomerEncoder::load(&path).unwrap();
    let hist: Vec<&[f64]> = f.prod_embs[..6].iter().map(|v| v.as_slice()).collect();
    assert_eq!(f.encoder.embed(&hist), loaded.embed(&hist));
    assert_eq!(f.encoder.price_buckets, loaded.price_buckets);
}

#[test]
fn artifacts_sidecar_round_trip() {
    let f = fixture();
    let scaler = PriceScaler::fit(f.train.iter().map(|o| &o.price)).unwrap();
    let artifacts = EmbedArtifacts {
        layout: OrderLayout::desk_default(),
        scaler,
        horizon: f.world.horizon,
        world_seed: f.world.seed(),
    };
    let dir = std::env::temp_dir().join("ecgan_sidecar_rt");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("embed.meta");
    artifacts.save(&path, "test provenance").unwrap();
    assert_eq!(EmbedArtifacts::load(&path).unwrap(), artifacts);
}
