use ecgan_autodiff::stream::derived_rng;
use rand::seq::SliceRandom;

use crate::types::OrderRecord;
use crate::{Result, SimError};

/// Disjoint train/eval partition of the order log by order, seeded shuffle.
/// Both halves come back sorted by order id so downstream chronology is
/// stable regardless of shuffle internals.
pub fn split_orders(
    orders: &[OrderRecord],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<OrderRecord>, Vec<OrderRecord>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(SimError::InvalidConfig(format!(
            "holdout fraction must be in (0,1), got {holdout_fraction}"
        )));
    }
    let mut indices: Vec<usize> = (0..orders.len()).collect();
    let mut rng = derived_rng(seed, "split", 0);
    indices.shuffle(&mut rng);
    let n_eval = (orders.len() as f64 * holdout_fraction).round() as usize;
    let (eval_idx, train_idx) = indices.split_at(n_eval);

    let collect = |idx: &[usize]| -> Vec<OrderRecord> {
        let mut v: Vec<OrderRecord> = idx.iter().map(|&i| orders[i].clone()).collect();
        v.sort_by_key(|o| o.id);
        v
    };
    Ok((collect(train_idx), collect(eval_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn toy_orders(n: usize) -> Vec<OrderRecord> {
        (0..n)
            .map(|i| OrderRecord {
                id: i as u32,
                customer: 0,
                product: 0,
                price: 1.0,
                date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            })
            .collect()
    }

    #[test]
    fn fraction_point_two_splits_forty_ten() {
        let orders = toy_orders(50_000);
        let (train, eval) = split_orders(&orders, 0.2, 1).unwrap();
        assert_eq!(train.len(), 40_000);
        assert_eq!(eval.len(), 10_000);
    }

    #[test]
    fn union_is_original_multiset() {
        let orders = toy_orders(1_000);
        let (train, eval) = split_orders(&orders, 0.3, 2).unwrap();
        let mut ids: Vec<u32> = train.iter().chain(eval.iter()).map(|o| o.id).collect();
        ids.sort_unstable();
        let expect: Vec<u32> = (0..1_000).collect();
        assert_eq!(ids, expect);
    }

    #[test]
    fn same_seed_same_split() {
        let orders = toy_orders(500);
        let a = split_orders(&orders, 0.25, 7).unwrap();
        let b = split_orders(&orders, 0.25, 7).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = split_orders(&orders, 0.25, 8).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn rejects_degenerate_fraction() {
        let orders = toy_orders(10);
        assert!(split_orders(&orders, 0.0, 1).is_err());
        assert!(split_orders(&orders, 1.0, 1).is_err());
    }
}
