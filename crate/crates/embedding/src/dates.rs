//! Circular date encoding: a linear epoch offset plus (sin, cos) pairs for
//! day of month, day of week and month, so calendar-adjacent dates are
//! equidistant across wraparounds.

use chrono::{Datelike, NaiveDate};
use std::f64::consts::TAU;

use ecgan_marketsim::Horizon;

use crate::{EmbedError, Result};

pub const DATE_DIM: usize = 7;

/// [offset, sin dom, cos dom, sin dow, cos dow, sin month, cos month]
pub type DateVector = [f64; DATE_DIM];

fn days_in_month(year: i32, month: u32) -> u32 {
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    };
    next.unwrap()
        .signed_duration_since(NaiveDate::from_ymd_opt(year, month, 1).unwrap())
        .num_days() as u32
}

pub fn encode_date(d: NaiveDate, horizon: &Horizon) -> Result<DateVector> {
    if !horizon.contains(d) {
        return Err(EmbedError::DateOutOfHorizon(d));
    }
    let span = horizon.span_days().max(1) as f64;
    let offset = 2.0 * horizon.day_offset(d) as f64 / span - 1.0;

    let dom_angle = TAU * (d.day() - 1) as f64 / days_in_month(d.year(), d.month()) as f64;
    let dow_angle = TAU * d.weekday().num_days_from_monday() as f64 / 7.0;
    let month_angle = TAU * (d.month() - 1) as f64 / 12.0;

    Ok([
        offset,
        dom_angle.sin(),
        dom_angle.cos(),
        dow_angle.sin(),
        dow_angle.cos(),
        month_angle.sin(),
        month_angle.cos(),
    ])
}

/// Recovers the month (1..=12) from the last two components of a date
/// slice by the nearest month angle.
pub fn month_from_date_slice(date: &[f64]) -> u32 {
    debug_assert_eq!(date.len(), DATE_DIM);
    let (s, c) = (date[5], date[6]);
    let mut best = 1;
    let mut best_dot = f64::NEG_INFINITY;
    for m in 1..=12u32 {
        let angle = TAU * (m - 1) as f64 / 12.0;
        let dot = s * angle.sin() + c * angle.cos();
        if dot > best_dot {
            best_dot = dot;
            best = m;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn year_2024() -> Horizon {
        // 2024-01-01 is a Monday.
        Horizon {
            start: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2024, 12, 30).unwrap(),
        }
    }

    #[test]
    fn horizon_start_monday_january_first() {
        let h = year_2024();
        let v = encode_date(h.start, &h).unwrap();
        let expect = [-1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        for (a, b) in v.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15, "{v:?}");
        }
    }

    #[test]
    fn wednesday_pair_matches_trig() {
        let h = year_2024();
        // 2024-01-03 is a Wednesday (dow index 2).
        let v = encode_date(NaiveDate::from_ymd_opt(2024, 1, 3).unwrap(), &h).unwrap();
        let angle = TAU * 2.0 / 7.0;
        assert!((v[3] - angle.sin()).abs() < 1e-15);
        assert!((v[4] - angle.cos()).abs() < 1e-15);
        assert!((v[3] - 0.9749).abs() < 1e-4);
        assert!((v[4] - (-0.2225)).abs() < 1e-4);
    }

    #[test]
    fn adjacent_weekday_distances_equal_including_wraparound() {
        let h = year_2024();
        // One full week starting at the horizon start (Monday).
        let days: Vec<DateVector> = (0..7)
            .map(|i| encode_date(h.start + chrono::Days::new(i), &h).unwrap())
            .collect();
        let dist = |a: &DateVector, b: &DateVector| {
            let ds = a[3] - b[3];
            let dc = a[4] - b[4];
            (ds * ds + dc * dc).sqrt()
        };
        let base = dist(&days[0], &days[1]);
        for i in 1..7 {
            let d = dist(&days[i], &days[(i + 1) % 7]);
            assert!((d - base).abs() < 1e-12, "pair {i} distance {d} vs {base}");
        }
    }

    #[test]
    fn trig_pairs_unit_norm_all_year() {
        let h = Horizon::default_year();
        let mut d = h.start;
        while d <= h.end {
            let v = encode_date(d, &h).unwrap();
            for pair in [(v[1], v[2]), (v[3], v[4]), (v[5], v[6])] {
                let norm = pair.0 * pair.0 + pair.1 * pair.1;
                assert!((norm - 1.0).abs() < 1e-12, "{d} {v:?}");
            }
            assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
            d = d + chrono::Days::new(1);
        }
    }

    #[test]
    fn horizon_end_maps_to_plus_one() {
        let h = Horizon::default_year();
        let v = encode_date(h.end, &h).unwrap();
        assert_eq!(v[0], 1.0);
    }

    #[test]
    fn out_of_horizon_rejected() {
        let h = year_2024();
        let before = NaiveDate::from_ymd_opt(2023, 12, 31).unwrap();
        assert!(encode_date(before, &h).is_err());
    }

    #[test]
    fn month_recovery_inverts_encoding() {
        let h = Horizon::default_year();
        let mut d = h.start;
        while d <= h.end {
            let v = encode_date(d, &h).unwrap();
            assert_eq!(month_from_date_slice(&v), d.month(), "{d}");
            d = d + chrono::Days::new(11);
        }
    }

    #[test]
    fn short_month_wraparound_stays_exact() {
        // February 2023 has 28 days; day 28 -> day 1 of any month must sit at
        // equal angular steps because the encoding uses actual month length.
        let h = Horizon::default_year();
        let feb28 = encode_date(NaiveDate::from_ymd_opt(2023, 2, 28).unwrap(), &h).unwrap();
        let angle = TAU * 27.0 / 28.0;
        assert!((feb28[1] - angle.sin()).abs() < 1e-15);
        assert!((feb28[2] - angle.cos()).abs() < 1e-15);
    }
}
