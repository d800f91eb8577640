//! Order representation: IDF-weighted product embeddings, a multi-task
//! recurrent customer encoder, log-price normalization, a 7-dimensional
//! circular date vector, and their concatenation into the order vector all
//! models consume. Every emitted component lies in [-1, 1].

pub mod dates;
pub mod encoder;
pub mod pipeline;
pub mod price;
pub mod wordvec;

pub use dates::{encode_date, month_from_date_slice, DateVector, DATE_DIM};
pub use encoder::{CustomerEncoder, EncoderConfig, GapBuckets, PriceBuckets};
pub use pipeline::{EmbeddedOrders, EmbedArtifacts};
pub use price::PriceScaler;
pub use wordvec::{embed_product, idf_weights, WordVectors};

use thiserror::Error;

/// Component dimensions of the order vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderLayout {
    pub d_cust: usize,
    pub d_prod: usize,
}

impl OrderLayout {
    pub fn new(d_cust: usize, d_prod: usize) -> Self {
        Self { d_cust, d_prod }
    }

    /// Desk-scale default: 16 + 16 + 1 + 7 = 40.
    pub fn desk_default() -> Self {
        Self::new(16, 16)
    }

    /// Full-scale configuration: 128 + 128 + 1 + 7 = 264.
    pub fn full_scale() -> Self {
        Self::new(128, 128)
    }

    pub fn total_dim(&self) -> usize {
        self.d_cust + self.d_prod + 1 + DATE_DIM
    }

    pub fn customer_range(&self) -> std::ops::Range<usize> {
        0..self.d_cust
    }

    pub fn product_range(&self) -> std::ops::Range<usize> {
        self.d_cust..self.d_cust + self.d_prod
    }

    pub fn price_index(&self) -> usize {
        self.d_cust + self.d_prod
    }

    pub fn date_range(&self) -> std::ops::Range<usize> {
        self.price_index() + 1..self.total_dim()
    }
}

/// Concatenates the four components; `disassemble` inverts it exactly.
pub fn assemble_order(
    layout: &OrderLayout,
    customer: &[f64],
    product: &[f64],
    price: f64,
    date: &DateVector,
) -> Result<Vec<f64>> {
    if customer.len() != layout.d_cust || product.len() != layout.d_prod {
        return Err(EmbedError::DimensionMismatch {
            expected: format!("customer {} product {}", layout.d_cust, layout.d_prod),
            got: format!("customer {} product {}", customer.len(), product.len()),
        });
    }
    let mut v = Vec::with_capacity(layout.total_dim());
    v.extend_from_slice(customer);
    v.extend_from_slice(product);
    v.push(price);
    v.extend_from_slice(date);
    Ok(v)
}

pub fn disassemble_order<'a>(
    layout: &OrderLayout,
    v: &'a [f64],
) -> Result<(&'a [f64], &'a [f64], f64, &'a [f64])> {
    if v.len() != layout.total_dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: format!("order vector of {}", layout.total_dim()),
            got: format!("{}", v.len()),
        });
    }
    Ok((
        &v[layout.customer_range()],
        &v[layout.product_range()],
        v[layout.price_index()],
        &v[layout.date_range()],
    ))
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("unembeddable title: every token is out of vocabulary")]
    UnembeddableTitle,
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("price log-bounds degenerate (tmax must exceed tmin)")]
    DegeneratePriceBounds,
    #[error("date {0} outside the encoding horizon")]
    DateOutOfHorizon(chrono::NaiveDate),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("customer encoder training diverged: {0}")]
    Diverged(String),
    #[error("{0}")]
    Autodiff(#[from] ecgan_autodiff::AutodiffError),
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] ecgan_autodiff::checkpoint::CheckpointError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed sidecar: {0}")]
    Sidecar(String),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_dims_total_forty() {
        assert_eq!(OrderLayout::desk_default().total_dim(), 40);
    }

    #[test]
    fn full_scale_dims_total_264() {
        assert_eq!(OrderLayout::full_scale().total_dim(), 264);
    }

    #[test]
    fn assemble_disassemble_round_trip() {
        let layout = OrderLayout::new(3, 2);
        let c = [0.1, -0.2, 0.3];
        let p = [0.5, 0.6];
        let d = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let v = assemble_order(&layout, &c, &p, -0.4, &d).unwrap();
        assert_eq!(v.len(), layout.total_dim());
        let (c2, p2, price, d2) = disassemble_order(&layout, &v).unwrap();
        assert_eq!(c2, c);
        assert_eq!(p2, p);
        assert_eq!(price, -0.4);
        assert_eq!(d2, d);
    }

    #[test]
    fn assemble_rejects_wrong_dims() {
        let layout = OrderLayout::new(3, 2);
        let err = assemble_order(&layout, &[0.0; 2], &[0.0; 2], 0.0, &[0.0; 7]);
        assert!(err.is_err());
    }
}
