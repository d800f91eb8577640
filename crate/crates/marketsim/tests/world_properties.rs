use chrono::Datelike;
use ecgan_autodiff::stream::derived_rng;
use ecgan_marketsim::types::{SUMMER_MONTHS, TENURE_HIGH_MIN_DAYS, TENURE_MEDIUM_MIN_DAYS};
use ecgan_marketsim::{
    generate_world, io, sample_orders, Gender, Horizon, Product, SeasonProfile, Tenure, Volume,
    WorldConfig,
};

fn small_config(seed: u64) -> WorldConfig {
    WorldConfig {
        customers: 400,
        products: 120,
        categories: 12,
        orders: 8_000,
        ..WorldConfig::desk_default(seed)
    }
}

#[test]
fn same_seed_gives_identical_worlds() {
    let a = generate_world(&small_config(42)).unwrap();
    let b = generate_world(&small_config(42)).unwrap();
    assert_eq!(a.customers, b.customers);
    assert_eq!(a.products, b.products);
    assert_eq!(a.orders, b.orders);
    assert_eq!(a.vocab, b.vocab);
    let c = generate_world(&small_config(43)).unwrap();
    assert_ne!(a.orders, c.orders);
}

#[test]
fn zero_categories_rejected() {
    let cfg = WorldConfig {
        categories: 0,
        ..small_config(1)
    };
    assert!(generate_world(&cfg).is_err());
}

#[test]
fn structural_invariants_hold() {
    let world = generate_world(&small_config(7)).unwrap();
    for c in &world.customers {
        let sum: f64 = c.affinity.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "affinity sums to {sum}");
        assert!(c.affinity.iter().all(|&w| w >= 0.0));
        match c.tenure {
            Tenure::High => assert!(c.signup_days_before_end >= TENURE_HIGH_MIN_DAYS),
            Tenure::Medium => assert!(
                c.signup_days_before_end >= TENURE_MEDIUM_MIN_DAYS
                    && c.signup_days_before_end < TENURE_HIGH_MIN_DAYS
            ),
        }
    }
    for p in &world.products {
        assert!(p.title.len() >= 2 && p.title.len() <= 12);
        assert!(p.base_price > 0.0);
        assert!((0.0..=1.0).contains(&p.gender_skew));
    }
    for o in &world.orders {
        let p = world.product(o.product).expect("product exists");
        assert!(world.customer(o.customer).is_some());
        assert!(o.price >= 0.5 * p.base_price - 1e-9);
        assert!(o.price <= 2.0 * p.base_price + 1e-9);
        assert!(world.horizon.contains(o.date));
    }
    // Document frequencies agree with the titles.
    let mut df = vec![0u32; world.vocab.len()];
    for p in &world.products {
        let mut seen = p.title.clone();
        seen.sort_unstable();
        seen.dedup();
        for w in seen {
            df[w as usize] += 1;
        }
    }
    for (i, e) in world.vocab.iter().enumerate() {
        assert_eq!(e.df, df[i], "df mismatch for {:?}", e.word);
    }
}

#[test]
fn label_marginals_within_three_sigma() {
    let cfg = WorldConfig {
        customers: 2_000,
        products: 120,
        categories: 12,
        orders: 1_000,
        ..WorldConfig::desk_default(11)
    };
    let world = generate_world(&cfg).unwrap();
    let n = world.customers.len() as f64;
    let check = |count: usize, p: f64, what: &str| {
        let sigma = (n * p * (1.0 - p)).sqrt();
        let delta = (count as f64 - n * p).abs();
        assert!(delta <= 3.0 * sigma, "{what}: {count} vs {} +- {}", n * p, 3.0 * sigma);
    };
    check(
        world.customers.iter().filter(|c| c.gender == Gender::Female).count(),
        cfg.p_female,
        "female share",
    );
    check(
        world.customers.iter().filter(|c| c.tenure == Tenure::High).count(),
        cfg.p_high_tenure,
        "high tenure share",
    );
    check(
        world.customers.iter().filter(|c| c.volume == Volume::High).count(),
        cfg.p_high_volume,
        "high volume share",
    );
}

#[test]
fn degenerate_gender_skew_forces_female_purchasers() {
    let cfg = small_config(3);
    let world = generate_world(&cfg).unwrap();
    // Hand-built catalog: a single product with skew 1.0.
    let product = Product {
        id: 0,
        category: 0,
        title: vec![0, 1],
        base_price: 10.0,
        gender_skew: 1.0,
        season: SeasonProfile::Flat,
    };
    let mut rng = derived_rng(99, "skew-test", 0);
    let orders = sample_orders(
        &WorldConfig {
            orders: 2_000,
            products: 1,
            ..cfg.clone()
        },
        &world.customers,
        std::slice::from_ref(&product),
        &Horizon::default_year(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(orders.len(), 2_000);
    for o in &orders {
        let customer = world.customer(o.customer).unwrap();
        assert_eq!(customer.gender, Gender::Female);
    }
}

/// Exact binomial lower-tail P(X <= k) for X ~ Bin(n, p), in log space.
fn binomial_lower_tail(n: u64, p: f64, k: u64) -> f64 {
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let mut ln_binom = 0.0; // ln C(n, 0)
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_binom += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (ln_binom + i as f64 * ln_p + (n - i) as f64 * ln_q).exp();
    }
    total
}

#[test]
fn summer_peaked_products_concentrate_in_summer() {
    let cfg = WorldConfig {
        customers: 500,
        products: 200,
        categories: 20,
        orders: 20_000,
        ..WorldConfig::desk_default(5)
    };
    let world = generate_world(&cfg).unwrap();
    let summer_orders: Vec<_> = world
        .orders
        .iter()
        .filter(|o| world.product(o.product).unwrap().season == SeasonProfile::SummerPeaked)
        .collect();
    let n = summer_orders.len();
    assert!(n >= 500, "need a meaningful sample, got {n}");
    let in_peak = summer_orders
        .iter()
        .filter(|o| SUMMER_MONTHS.contains(&o.date.month()))
        .count();
    let frac = in_peak as f64 / n as f64;

    // With 70% planted mass, the chance of seeing <= 65% in n >= 500 draws
    // is the binomial lower tail, which the oracle shows is negligible.
    let tail = binomial_lower_tail(n as u64, cfg.season_peak_mass, (0.65 * n as f64) as u64);
    assert!(tail < 1e-6, "oracle tail {tail} too fat for this assertion");
    assert!(frac >= 0.65, "summer fraction {frac} below planted bound");
}

#[test]
fn tsv_round_trip_preserves_world() {
    let world = generate_world(&small_config(21)).unwrap();
    let dir = std::env::temp_dir().join("ecgan_world_rt");
    std::fs::create_dir_all(&dir).unwrap();
    io::save_world(&dir, &world, "test-run seed=21").unwrap();
    let loaded = io::load_world(&dir).unwrap();
    assert_eq!(world.config, loaded.config);
    assert_eq!(world.horizon, loaded.horizon);
    assert_eq!(world.customers, loaded.customers);
    assert_eq!(world.products, loaded.products);
    assert_eq!(world.orders, loaded.orders);
    assert_eq!(world.vocab, loaded.vocab);
}
