//! End-to-end embedding of an order log into the order-vector matrix, plus
//! the sidecar artifacts later stages need to interpret and invert rows.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ecgan_autodiff::Matrix;
use ecgan_marketsim::{Horizon, MarketplaceWorld, OrderRecord};

use crate::dates::encode_date;
use crate::encoder::{event_sequences, CustomerEncoder};
use crate::price::PriceScaler;
use crate::{assemble_order, EmbedError, OrderLayout, Result};

/// Embedded order matrix with per-row conditioning targets.
pub struct EmbeddedOrders {
    /// N x D order vectors; row order matches `order_ids`.
    pub matrix: Matrix,
    /// N x d_prod product embedding per order (conditioning target).
    pub product_rows: Matrix,
    pub order_ids: Vec<u32>,
    pub layout: OrderLayout,
}

/// Everything needed to interpret an embedded row later.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedArtifacts {
    pub layout: OrderLayout,
    pub scaler: PriceScaler,
    pub horizon: Horizon,
    pub world_seed: u64,
}

/// Embeds `targets`, with customer states rolled forward over `history`
/// (orders strictly before each target's date). For training-set embedding
/// both arguments are the training log.
pub fn embed_orders(
    world: &MarketplaceWorld,
    targets: &[OrderRecord],
    history: &[OrderRecord],
    encoder: &CustomerEncoder,
    product_embeddings: &[Vec<f64>],
    scaler: &PriceScaler,
    layout: &OrderLayout,
) -> Result<EmbeddedOrders> {
    let history_seqs = event_sequences(world, history);

    // Targets grouped per customer in chronological order.
    let mut target_rows: Vec<(usize, &OrderRecord)> = targets.iter().enumerate().collect();
    target_rows.sort_by_key(|(_, o)| (o.customer, o.date, o.id));

    let d = layout.total_dim();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); targets.len()];
    let mut i = 0;
    while i < target_rows.len() {
        let customer = target_rows[i].1.customer;
        let seq = &history_seqs[customer as usize];
        let mut state = Matrix::zeros(1, layout.d_cust);
        let mut consumed = 0usize;
        while i < target_rows.len() && target_rows[i].1.customer == customer {
            let (row_index, order) = target_rows[i];
            while consumed < seq.len() && seq[consumed].date < order.date {
                state = encoder.step_state(
                    &state,
                    &product_embeddings[seq[consumed].product as usize],
                );
                consumed += 1;
            }
            let prod = product_embeddings
                .get(order.product as usize)
                .ok_or_else(|| EmbedError::DimensionMismatch {
                    expected: "known product id".into(),
                    got: format!("product {}", order.product),
                })?;
            let date = encode_date(order.date, &world.horizon)?;
            let price = scaler.encode(order.price)?;
            rows[row_index] = assemble_order(layout, state.data(), prod, price, &date)?;
            i += 1;
        }
    }

    let mut data = Vec::with_capacity(targets.len() * d);
    let mut prod_data = Vec::with_capacity(targets.len() * layout.d_prod);
    for (row, order) in rows.iter().zip(targets.iter()) {
        debug_assert_eq!(row.len(), d);
        data.extend_from_slice(row);
        prod_data.extend_from_slice(&row[layout.product_range()]);
        debug_assert!(world.product(order.product).is_some());
    }
    Ok(EmbeddedOrders {
        matrix: Matrix::from_vec(targets.len(), d, data)?,
        product_rows: Matrix::from_vec(targets.len(), layout.d_prod, prod_data)?,
        order_ids: targets.iter().map(|o| o.id).collect(),
        layout: *layout,
    })
}

/// Full-history embedding per customer (rows indexed by customer id).
pub fn embed_all_customers(
    world: &MarketplaceWorld,
    history: &[OrderRecord],
    encoder: &CustomerEncoder,
    product_embeddings: &[Vec<f64>],
) -> Matrix {
    let seqs = event_sequences(world, history);
    let mut data = Vec::with_capacity(world.customers.len() * encoder.d_cust);
    for seq in &seqs {
        let refs: Vec<&[f64]> = seq
            .iter()
            .map(|e| product_embeddings[e.product as usize].as_slice())
            .collect();
        data.extend_from_slice(&encoder.embed(&refs));
    }
    Matrix::from_vec(world.customers.len(), encoder.d_cust, data).expect("finite embeddings")
}

impl EmbedArtifacts {
    pub fn save(&self, path: &Path, provenance: &str) -> Result<()> {
        let text = format!(
            "# {provenance}\nd_cust={}\nd_prod={}\ntmin={}\ntmax={}\nhorizon_start={}\nhorizon_end={}\nworld_seed={}\n",
            self.layout.d_cust,
            self.layout.d_prod,
            self.scaler.tmin,
            self.scaler.tmax,
            self.horizon.start,
            self.horizon.end,
            self.world_seed,
        );
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut kv = HashMap::new();
        for line in text.lines() {
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| EmbedError::Sidecar(format!("bad line {line:?}")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<String> {
            kv.get(k)
                .cloned()
                .ok_or_else(|| EmbedError::Sidecar(format!("missing key {k}")))
        };
        let parse_f = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|e| EmbedError::Sidecar(format!("bad {k}: {e}")))
        };
        let parse_u = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|e| EmbedError::Sidecar(format!("bad {k}: {e}")))
        };
        let parse_date = |k: &str| -> Result<chrono::NaiveDate> {
            chrono::NaiveDate::parse_from_str(&get(k)?, "%Y-%m-%d")
                .map_err(|e| EmbedError::Sidecar(format!("bad {k}: {e}")))
        };
        Ok(Self {
            layout: OrderLayout::new(parse_u("d_cust")?, parse_u("d_prod")?),
            scaler: PriceScaler::new(parse_f("tmin")?, parse_f("tmax")?)?,
            horizon: Horizon {
                start: parse_date("horizon_start")?,
                end: parse_date("horizon_end")?,
            },
            world_seed: get("world_seed")?
                .parse()
                .map_err(|e| EmbedError::Sidecar(format!("bad world_seed: {e}")))?,
        })
    }
}
