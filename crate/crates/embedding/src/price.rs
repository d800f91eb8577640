use crate::{EmbedError, Result};

/// Log-price normalization to [-1, 1] with bounds taken from training data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceScaler {
    pub tmin: f64,
    pub tmax: f64,
}

impl PriceScaler {
    pub fn new(tmin: f64, tmax: f64) -> Result<Self> {
        if !(tmax > tmin) {
            return Err(EmbedError::DegeneratePriceBounds);
        }
        Ok(Self { tmin, tmax })
    }

    /// Bounds from the log of observed positive prices.
    pub fn fit<'a>(prices: impl Iterator<Item = &'a f64>) -> Result<Self> {
        let mut tmin = f64::INFINITY;
        let mut tmax = f64::NEG_INFINITY;
        for &p in prices {
            if p <= 0.0 {
                return Err(EmbedError::NonPositivePrice(p));
            }
            let t = p.ln();
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        Self::new(tmin, tmax)
    }

    /// 2*(ln p - tmin)/(tmax - tmin) - 1, clamped to [-1, 1].
    pub fn encode(&self, p: f64) -> Result<f64> {
        if p <= 0.0 {
            return Err(EmbedError::NonPositivePrice(p));
        }
        let x = 2.0 * (p.ln() - self.tmin) / (self.tmax - self.tmin) - 1.0;
        Ok(x.clamp(-1.0, 1.0))
    }

    /// Inverse of `encode` for in-range values.
    pub fn decode(&self, x: f64) -> f64 {
        (self.tmin + (x + 1.0) / 2.0 * (self.tmax - self.tmin)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaler() -> PriceScaler {
        PriceScaler::fit([4.0, 9.0, 25.0, 100.0].iter()).unwrap()
    }

    #[test]
    fn boundaries_map_to_plus_minus_one() {
        let s = scaler();
        assert_eq!(s.encode(4.0).unwrap(), -1.0);
        assert_eq!(s.encode(100.0).unwrap(), 1.0);
    }

    #[test]
    fn geometric_mean_maps_to_zero() {
        let s = scaler();
        let gm = (4.0f64 * 100.0).sqrt();
        assert!(s.encode(gm).unwrap().abs() < 1e-12);
    }

    #[test]
    fn encode_decode_round_trip_tight() {
        let s = scaler();
        for &p in &[4.0, 5.5, 9.0, 31.0, 99.0, 100.0] {
            let back = s.decode(s.encode(p).unwrap());
            assert!((p - back).abs() / p < 1e-9, "{p} -> {back}");
        }
    }

    #[test]
    fn out_of_range_clamps_and_rejects_non_positive() {
        let s = scaler();
        assert_eq!(s.encode(1.0).unwrap(), -1.0);
        assert_eq!(s.encode(1e6).unwrap(), 1.0);
        assert!(s.encode(0.0).is_err());
        assert!(s.encode(-3.0).is_err());
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(PriceScaler::fit([7.0, 7.0].iter()).is_err());
        assert!(PriceScaler::new(1.0, 1.0).is_err());
    }
}
