use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rand_xoshiro::Xoshiro256StarStar;

use ecgan_autodiff::stream::derived_rng;

use crate::types::category;
use crate::types::{
    Customer, Gender, Horizon, MarketplaceWorld, OrderRecord, Product, SeasonProfile, Tenure,
    VocabEntry, Volume, WorldConfig, SUMMER_MONTHS, TENURE_HIGH_MIN_DAYS, TENURE_MEDIUM_MIN_DAYS,
    WINTER_MONTHS,
};
use crate::{Result, SimError};

/// Common English function words shared across all category vocabularies.
const STOP_WORDS: [&str; 42] = [
    "the", "a", "and", "for", "with", "of", "to", "in", "on", "by", "plus", "extra", "new", "set",
    "pack", "size", "classic", "premium", "basic", "pro", "mini", "max", "soft", "large", "small",
    "light", "dark", "twin", "value", "deluxe", "original", "daily", "easy", "fit", "style",
    "series", "edition", "family", "home", "all", "one", "two",
];

/// Consonant-vowel fragments used to assemble category word stems.
const SYLLABLES: [&str; 24] = [
    "ba", "co", "da", "fe", "gi", "ha", "ja", "ke", "lu", "ma", "ne", "or", "pa", "qui", "ra",
    "sa", "te", "ul", "va", "wi", "xa", "yo", "ze", "no",
];

pub fn generate_world(config: &WorldConfig) -> Result<MarketplaceWorld> {
    if config.categories == 0 {
        return Err(SimError::InvalidConfig("categories must be >= 1".into()));
    }
    for (name, v) in [
        ("customers", config.customers),
        ("products", config.products),
        ("orders", config.orders),
    ] {
        if v == 0 {
            return Err(SimError::InvalidConfig(format!("{name} must be >= 1")));
        }
    }
    if config.products < config.categories {
        return Err(SimError::InvalidConfig(
            "need at least one product per category".into(),
        ));
    }

    let horizon = Horizon::default_year();
    let (vocab_words, category_vocab) = build_vocabulary(config);
    let customers = gen_customers(config);
    let products = gen_products(config, &category_vocab);
    let vocab = count_document_frequencies(vocab_words, &products);
    let mut rng = derived_rng(config.seed, "orders", 0);
    let orders = sample_orders(config, &customers, &products, &horizon, &mut rng)?;

    Ok(MarketplaceWorld {
        config: config.clone(),
        horizon,
        customers,
        products,
        orders,
        vocab,
    })
}

/// Vocabulary: `stop_words` shared tokens first, then `category_words`
/// unique stems per category. Returns the word list and per-category word
/// index ranges.
fn build_vocabulary(config: &WorldConfig) -> (Vec<String>, Vec<Vec<u32>>) {
    let mut words: Vec<String> = STOP_WORDS
        .iter()
        .take(config.stop_words)
        .map(|s| s.to_string())
        .collect();
    // If more stop words are requested than the fixed list, synthesize them.
    let mut extra = 0;
    while words.len() < config.stop_words {
        words.push(format!("filler{extra}"));
        extra += 1;
    }

    let mut rng = derived_rng(config.seed, "vocab", 0);
    let mut category_vocab = Vec::with_capacity(config.categories);
    let mut seen: std::collections::HashSet<String> = words.iter().cloned().collect();
    for _ in 0..config.categories {
        let mut ids = Vec::with_capacity(config.category_words);
        while ids.len() < config.category_words {
            let n = rng.random_range(2..=4);
            let mut w = String::new();
            for _ in 0..n {
                w.push_str(SYLLABLES[rng.random_range(0..SYLLABLES.len())]);
            }
            if seen.insert(w.clone()) {
                ids.push(words.len() as u32);
                words.push(w);
            }
        }
        category_vocab.push(ids);
    }
    (words, category_vocab)
}

fn gen_customers(config: &WorldConfig) -> Vec<Customer> {
    let mut rng = derived_rng(config.seed, "customers", 0);
    let mut out = Vec::with_capacity(config.customers);
    for id in 0..config.customers {
        let gender = if rng.random_bool(config.p_female) {
            Gender::Female
        } else {
            Gender::Male
        };
        let tenure = if rng.random_bool(config.p_high_tenure) {
            Tenure::High
        } else {
            Tenure::Medium
        };
        let volume = if rng.random_bool(config.p_high_volume) {
            Volume::High
        } else {
            Volume::Average
        };
        let signup_days_before_end = match tenure {
            Tenure::High => rng.random_range(TENURE_HIGH_MIN_DAYS..=10 * 365),
            Tenure::Medium => rng.random_range(TENURE_MEDIUM_MIN_DAYS..TENURE_HIGH_MIN_DAYS),
        };

        // Dirichlet-style affinity with planted gender/tenure boosts; high
        // purchasers draw peakier profiles.
        let shape = match volume {
            Volume::High => 0.7,
            Volume::Average => 1.3,
        };
        let gamma = Gamma::new(shape, 1.0).expect("valid gamma");
        let mut affinity: Vec<f64> = (0..config.categories)
            .map(|k| {
                let lean = category::gender_lean(k);
                let gender_boost = match gender {
                    Gender::Female => {
                        if lean > 0.6 {
                            3.0
                        } else if lean < 0.4 {
                            1.0 / 3.0
                        } else {
                            1.0
                        }
                    }
                    Gender::Male => {
                        if lean < 0.4 {
                            3.0
                        } else if lean > 0.6 {
                            1.0 / 3.0
                        } else {
                            1.0
                        }
                    }
                };
                let legacy = category::is_legacy(k, config.categories);
                let tenure_boost = match (tenure, legacy) {
                    (Tenure::High, true) | (Tenure::Medium, false) => 2.5,
                    _ => 0.4,
                };
                let base: f64 = f64::max(gamma.sample(&mut rng), 1e-9);
                base * gender_boost * tenure_boost
            })
            .collect();
        let total: f64 = affinity.iter().sum();
        for w in &mut affinity {
            *w /= total;
        }

        out.push(Customer {
            id: id as u32,
            gender,
            tenure,
            volume,
            affinity,
            signup_days_before_end,
        });
    }
    out
}

fn gen_products(config: &WorldConfig, category_vocab: &[Vec<u32>]) -> Vec<Product> {
    let mut rng = derived_rng(config.seed, "products", 0);
    let mut out = Vec::with_capacity(config.products);
    for id in 0..config.products {
        let k = id % config.categories;
        let words = &category_vocab[k];
        let len = rng.random_range(2..=12usize);
        let title: Vec<u32> = (0..len)
            .map(|_| {
                if rng.random_bool(0.15) {
                    rng.random_range(0..config.stop_words) as u32
                } else {
                    words[rng.random_range(0..words.len())]
                }
            })
            .collect();

        let (lo, hi) = category::price_band(k, config.categories);
        let base_price = lo * (hi / lo).powf(rng.random_range(0.0..1.0));

        let lean = category::gender_lean(k);
        let gender_skew = (lean + rng.random_range(-0.08..0.08)).clamp(0.02, 0.98);

        let season = match category::season_tendency(k) {
            SeasonProfile::SummerPeaked => {
                if rng.random_bool(0.8) {
                    SeasonProfile::SummerPeaked
                } else {
                    SeasonProfile::Flat
                }
            }
            SeasonProfile::WinterPeaked => {
                if rng.random_bool(0.8) {
                    SeasonProfile::WinterPeaked
                } else {
                    SeasonProfile::Flat
                }
            }
            SeasonProfile::Flat => match rng.random_range(0..10) {
                0 => SeasonProfile::SummerPeaked,
                1 => SeasonProfile::WinterPeaked,
                _ => SeasonProfile::Flat,
            },
        };

        out.push(Product {
            id: id as u32,
            category: k as u32,
            title,
            base_price,
            gender_skew,
            season,
        });
    }
    out
}

fn count_document_frequencies(words: Vec<String>, products: &[Product]) -> Vec<VocabEntry> {
    let mut df = vec![0u32; words.len()];
    for p in products {
        let mut seen: Vec<u32> = p.title.clone();
        seen.sort_unstable();
        seen.dedup();
        for w in seen {
            df[w as usize] += 1;
        }
    }
    words
        .into_iter()
        .zip(df)
        .map(|(word, df)| VocabEntry { word, df })
        .collect()
}

/// Samples an order log against a fixed customer/product population.
///
/// Per order: a driver customer is drawn proportional to volume weight and
/// picks a category from their affinity; the product is uniform within the
/// category; the purchaser's gender is then drawn from the product's gender
/// skew and the final purchaser comes from that gender pool, weighted by
/// volume times category affinity; the date follows the product's season
/// profile and the paid price is the base price with lognormal noise,
/// clamped to [0.5, 2.0] times base.
pub fn sample_orders(
    config: &WorldConfig,
    customers: &[Customer],
    products: &[Product],
    horizon: &Horizon,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<OrderRecord>> {
    if customers.is_empty() || products.is_empty() {
        return Err(SimError::InvalidConfig(
            "need at least one customer and product".into(),
        ));
    }
    let n_categories = config.categories;
    if customers.iter().any(|c| c.affinity.len() != n_categories)
        || products.iter().any(|p| p.category as usize >= n_categories)
    {
        return Err(SimError::InvalidConfig(
            "customer affinities and product categories must match config.categories".into(),
        ));
    }

    let volume_weight = |c: &Customer| match c.volume {
        Volume::High => config.volume_weight,
        Volume::Average => 1.0,
    };

    // Cumulative tables for weighted draws.
    let global = CumTable::new(customers.iter().map(volume_weight));
    let mut by_category: Vec<Vec<u32>> = vec![Vec::new(); n_categories];
    for p in products {
        by_category[p.category as usize].push(p.id);
    }
    // Purchaser pools per (gender, category), weighted by volume * affinity.
    let mut pools: Vec<Vec<CumTable>> = Vec::with_capacity(2);
    for gender in [Gender::Female, Gender::Male] {
        let mut per_cat = Vec::with_capacity(n_categories);
        for k in 0..n_categories {
            let table = CumTable::new(customers.iter().map(|c| {
                if c.gender == gender {
                    volume_weight(c) * c.affinity[k]
                } else {
                    0.0
                }
            }));
            per_cat.push(table);
        }
        pools.push(per_cat);
    }

    let summer_days = horizon.offsets_in_months(&SUMMER_MONTHS);
    let winter_days = horizon.offsets_in_months(&WINTER_MONTHS);
    let not_summer: Vec<i64> = (0..=horizon.span_days())
        .filter(|o| !summer_days.contains(o))
        .collect();
    let not_winter: Vec<i64> = (0..=horizon.span_days())
        .filter(|o| !winter_days.contains(o))
        .collect();

    let noise = Normal::new(0.0, 0.1).expect("valid lognormal sigma");
    let mut orders = Vec::with_capacity(config.orders);
    for id in 0..config.orders {
        let driver = &customers[global.sample(rng)];
        let k = sample_category(&driver.affinity, &by_category, rng);
        let prods = &by_category[k];
        let product = &products[prods[rng.random_range(0..prods.len())] as usize];

        let female = rng.random_bool(product.gender_skew);
        let pool = &pools[if female { 0 } else { 1 }][k];
        let purchaser = if pool.total > 0.0 {
            customers[pool.sample(rng)].id
        } else {
            driver.id
        };

        let offset = match product.season {
            SeasonProfile::Flat => rng.random_range(0..=horizon.span_days()),
            SeasonProfile::SummerPeaked => {
                if rng.random_bool(config.season_peak_mass) {
                    summer_days[rng.random_range(0..summer_days.len())]
                } else {
                    not_summer[rng.random_range(0..not_summer.len())]
                }
            }
            SeasonProfile::WinterPeaked => {
                if rng.random_bool(config.season_peak_mass) {
                    winter_days[rng.random_range(0..winter_days.len())]
                } else {
                    not_winter[rng.random_range(0..not_winter.len())]
                }
            }
        };
        let date = horizon.date_at(offset);

        let draw: f64 = noise.sample(rng);
        let multiplier = draw.exp().clamp(0.5, 2.0);
        let price = product.base_price * multiplier;

        orders.push(OrderRecord {
            id: id as u32,
            customer: purchaser,
            product: product.id,
            price,
            date,
        });
    }
    Ok(orders)
}

fn sample_category(
    affinity: &[f64],
    by_category: &[Vec<u32>],
    rng: &mut Xoshiro256StarStar,
) -> usize {
    // Mask empty categories, renormalize on the fly.
    let total: f64 = affinity
        .iter()
        .enumerate()
        .filter(|(k, _)| !by_category[*k].is_empty())
        .map(|(_, w)| w)
        .sum();
    let mut u = rng.random_range(0.0..total);
    let mut last = 0;
    for (k, &w) in affinity.iter().enumerate() {
        if by_category[k].is_empty() {
            continue;
        }
        last = k;
        if u < w {
            return k;
        }
        u -= w;
    }
    last
}

struct CumTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl CumTable {
    fn new(weights: impl Iterator<Item = f64>) -> Self {
        let mut cumulative = Vec::new();
        let mut total = 0.0;
        for w in weights {
            total += w;
            cumulative.push(total);
        }
        Self { cumulative, total }
    }

    fn sample(&self, rng: &mut Xoshiro256StarStar) -> usize {
        let u = rng.random_range(0.0..self.total);
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => i + 1,
            Err(i) => i,
        }
        .min(self.cumulative.len() - 1)
    }
}
