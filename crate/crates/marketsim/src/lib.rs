//! Synthetic marketplace: customers, products with text titles, and a
//! one-year order log with planted gender/tenure/volume/price/seasonality
//! structure, so every downstream characterization has known ground truth.

pub mod generate;
pub mod io;
pub mod split;
pub mod types;

pub use generate::{generate_world, sample_orders};
pub use split::split_orders;
pub use types::{
    Customer, Gender, Horizon, MarketplaceWorld, OrderRecord, Product, SeasonProfile, Tenure,
    VocabEntry, Volume, WorldConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid world configuration: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed world file {file}: {detail}")]
    Parse { file: String, detail: String },
}

pub type Result<T> = std::result::Result<T, SimError>;
