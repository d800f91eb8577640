//! TSV persistence for worlds: customers.tsv, products.tsv, orders.tsv and
//! vocab.tsv. Every file starts with a `#` provenance comment and a `#`
//! world-parameter comment (customers.tsv carries the authoritative copy
//! used to reconstruct the configuration), then a column-header line.
//! Dates are ISO-8601; floats use shortest round-trip formatting, so a
//! save/load cycle is lossless.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::types::{
    Customer, Gender, Horizon, MarketplaceWorld, OrderRecord, Product, SeasonProfile, Tenure,
    VocabEntry, Volume, WorldConfig,
};
use crate::{Result, SimError};

pub const CUSTOMERS_FILE: &str = "customers.tsv";
pub const PRODUCTS_FILE: &str = "products.tsv";
pub const ORDERS_FILE: &str = "orders.tsv";
pub const VOCAB_FILE: &str = "vocab.tsv";

fn world_params_line(world: &MarketplaceWorld) -> String {
    let c = &world.config;
    format!(
        "# world: seed={} customers={} products={} categories={} orders={} p_female={} p_high_tenure={} p_high_volume={} volume_weight={} season_peak_mass={} category_words={} stop_words={} horizon={}..{}",
        c.seed,
        c.customers,
        c.products,
        c.categories,
        c.orders,
        c.p_female,
        c.p_high_tenure,
        c.p_high_volume,
        c.volume_weight,
        c.season_peak_mass,
        c.category_words,
        c.stop_words,
        world.horizon.start,
        world.horizon.end
    )
}

pub fn save_world(dir: &Path, world: &MarketplaceWorld, provenance: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let params = world_params_line(world);
    let header = |columns: &str| format!("# {provenance}\n{params}\n{columns}\n");

    let mut out = String::new();
    out.push_str(&header(
        "id\tgender\ttenure\tvolume\tsignup_days_before_end\taffinity",
    ));
    for c in &world.customers {
        let affinity = c
            .affinity
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            c.id,
            c.gender.label(),
            c.tenure.label(),
            c.volume.label(),
            c.signup_days_before_end,
            affinity
        ));
    }
    write_atomic(&dir.join(CUSTOMERS_FILE), &out)?;

    let mut out = String::new();
    out.push_str(&header(
        "id\tcategory\ttitle\tbase_price\tgender_skew\tseason",
    ));
    for p in &world.products {
        let title = p
            .title
            .iter()
            .map(|&w| world.vocab[w as usize].word.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            p.id,
            p.category,
            title,
            p.base_price,
            p.gender_skew,
            p.season.label()
        ));
    }
    write_atomic(&dir.join(PRODUCTS_FILE), &out)?;

    let mut out = String::new();
    out.push_str(&header("id\tcustomer\tproduct\tprice\tdate"));
    for o in &world.orders {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            o.id, o.customer, o.product, o.price, o.date
        ));
    }
    write_atomic(&dir.join(ORDERS_FILE), &out)?;

    let mut out = String::new();
    out.push_str(&header("index\tword\tdf"));
    for (i, e) in world.vocab.iter().enumerate() {
        out.push_str(&format!("{}\t{}\t{}\n", i, e.word, e.df));
    }
    write_atomic(&dir.join(VOCAB_FILE), &out)?;
    Ok(())
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_world(dir: &Path) -> Result<MarketplaceWorld> {
    let (config, horizon) = parse_world_params(dir)?;

    let vocab = parse_rows(dir, VOCAB_FILE, |fields, _| {
        expect_fields(VOCAB_FILE, fields, 3)?;
        Ok(VocabEntry {
            word: fields[1].to_string(),
            df: parse(VOCAB_FILE, fields[2])?,
        })
    })?;
    let word_ids: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, e)| (e.word.as_str(), i as u32))
        .collect();

    let customers = parse_rows(dir, CUSTOMERS_FILE, |fields, _| {
        expect_fields(CUSTOMERS_FILE, fields, 6)?;
        let affinity = fields[5]
            .split(',')
            .map(|s| parse(CUSTOMERS_FILE, s))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Customer {
            id: parse(CUSTOMERS_FILE, fields[0])?,
            gender: parse_gender(fields[1])?,
            tenure: parse_tenure(fields[2])?,
            volume: parse_volume(fields[3])?,
            affinity,
            signup_days_before_end: parse(CUSTOMERS_FILE, fields[4])?,
        })
    })?;

    let products = parse_rows(dir, PRODUCTS_FILE, |fields, _| {
        expect_fields(PRODUCTS_FILE, fields, 6)?;
        let title = fields[2]
            .split(' ')
            .map(|w| {
                word_ids.get(w).copied().ok_or_else(|| SimError::Parse {
                    file: PRODUCTS_FILE.into(),
                    detail: format!("title word {w:?} missing from vocab"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(Product {
            id: parse(PRODUCTS_FILE, fields[0])?,
            category: parse(PRODUCTS_FILE, fields[1])?,
            title,
            base_price: parse(PRODUCTS_FILE, fields[3])?,
            gender_skew: parse(PRODUCTS_FILE, fields[4])?,
            season: parse_season(fields[5])?,
        })
    })?;

    let orders = parse_rows(dir, ORDERS_FILE, |fields, _| {
        expect_fields(ORDERS_FILE, fields, 5)?;
        let date = NaiveDate::parse_from_str(fields[4], "%Y-%m-%d").map_err(|e| SimError::Parse {
            file: ORDERS_FILE.into(),
            detail: format!("bad date {:?}: {e}", fields[4]),
        })?;
        Ok(OrderRecord {
            id: parse(ORDERS_FILE, fields[0])?,
            customer: parse(ORDERS_FILE, fields[1])?,
            product: parse(ORDERS_FILE, fields[2])?,
            price: parse(ORDERS_FILE, fields[3])?,
            date,
        })
    })?;

    Ok(MarketplaceWorld {
        config,
        horizon,
        customers,
        products,
        orders,
        vocab,
    })
}

fn parse_world_params(dir: &Path) -> Result<(WorldConfig, Horizon)> {
    let text = fs::read_to_string(dir.join(CUSTOMERS_FILE))?;
    let line = text
        .lines()
        .find(|l| l.starts_with("# world:"))
        .ok_or_else(|| SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: "missing '# world:' parameter line".into(),
        })?;
    let mut kv: HashMap<&str, &str> = HashMap::new();
    for token in line.trim_start_matches("# world:").split_whitespace() {
        if let Some((k, v)) = token.split_once('=') {
            kv.insert(k, v);
        }
    }
    let get = |k: &str| -> Result<&str> {
        kv.get(k).copied().ok_or_else(|| SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: format!("world parameter {k} missing"),
        })
    };
    let horizon_raw = get("horizon")?;
    let (hs, he) = horizon_raw.split_once("..").ok_or_else(|| SimError::Parse {
        file: CUSTOMERS_FILE.into(),
        detail: format!("bad horizon {horizon_raw:?}"),
    })?;
    let horizon = Horizon {
        start: NaiveDate::parse_from_str(hs, "%Y-%m-%d").map_err(|e| SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: format!("bad horizon start: {e}"),
        })?,
        end: NaiveDate::parse_from_str(he, "%Y-%m-%d").map_err(|e| SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: format!("bad horizon end: {e}"),
        })?,
    };
    let config = WorldConfig {
        seed: parse(CUSTOMERS_FILE, get("seed")?)?,
        customers: parse(CUSTOMERS_FILE, get("customers")?)?,
        products: parse(CUSTOMERS_FILE, get("products")?)?,
        categories: parse(CUSTOMERS_FILE, get("categories")?)?,
        orders: parse(CUSTOMERS_FILE, get("orders")?)?,
        p_female: parse(CUSTOMERS_FILE, get("p_female")?)?,
        p_high_tenure: parse(CUSTOMERS_FILE, get("p_high_tenure")?)?,
        p_high_volume: parse(CUSTOMERS_FILE, get("p_high_volume")?)?,
        volume_weight: parse(CUSTOMERS_FILE, get("volume_weight")?)?,
        season_peak_mass: parse(CUSTOMERS_FILE, get("season_peak_mass")?)?,
        category_words: parse(CUSTOMERS_FILE, get("category_words")?)?,
        stop_words: parse(CUSTOMERS_FILE, get("stop_words")?)?,
    };
    Ok((config, horizon))
}

fn parse_rows<T>(
    dir: &Path,
    file: &str,
    mut row: impl FnMut(&[&str], usize) -> Result<T>,
) -> Result<Vec<T>> {
    let text = fs::read_to_string(dir.join(file))?;
    let mut out = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            saw_header = true; // column-name line
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        out.push(row(&fields, lineno)?);
    }
    Ok(out)
}

fn expect_fields(file: &str, fields: &[&str], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(SimError::Parse {
            file: file.into(),
            detail: format!("expected {n} fields, got {}", fields.len()),
        });
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(file: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| SimError::Parse {
        file: file.into(),
        detail: format!("bad value {s:?}: {e}"),
    })
}

fn parse_gender(s: &str) -> Result<Gender> {
    match s {
        "female" => Ok(Gender::Female),
        "male" => Ok(Gender::Male),
        _ => Err(SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: format!("bad gender {s:?}"),
        }),
    }
}

fn parse_tenure(s: &str) -> Result<Tenure> {
    match s {
        "medium" => Ok(Tenure::Medium),
        "high" => Ok(Tenure::High),
        _ => Err(SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: format!("bad tenure {s:?}"),
        }),
    }
}

fn parse_volume(s: &str) -> Result<Volume> {
    match s {
        "average" => Ok(Volume::Average),
        "high" => Ok(Volume::High),
        _ => Err(SimError::Parse {
            file: CUSTOMERS_FILE.into(),
            detail: format!("bad volume {s:?}"),
        }),
    }
}

fn parse_season(s: &str) -> Result<SeasonProfile> {
    match s {
        "summer" => Ok(SeasonProfile::SummerPeaked),
        "winter" => Ok(SeasonProfile::WinterPeaked),
        "flat" => Ok(SeasonProfile::Flat),
        _ => Err(SimError::Parse {
            file: PRODUCTS_FILE.into(),
            detail: format!("bad season {s:?}"),
        }),
    }
}
