//! Evaluation machinery: a logistic real-vs-fake tracker, triplet
//! feature-correlation agreement, random-forest leaf real-order-ratio
//! distributions, exact t-SNE / PCA projections, characteristic
//! classifiers over customer embeddings, per-product propensity scores and
//! the rank-concordance score over product pairs, plus report emission.

pub mod classifiers;
pub mod forest;
pub mod logistic;
pub mod propensity;
pub mod report;
pub mod rsm;
pub mod tracker;
pub mod triplet;
pub mod tsne;

pub use classifiers::{train_characteristic_classifiers, CharacteristicClassifier};
pub use forest::{forest_leaf_distribution, ForestConfig, LeafReport};
pub use logistic::{LogisticConfig, LogisticModel};
pub use propensity::{
    compute_propensities, OrderGenerator, ProductPropensity, PropensityTable, CHARACTERISTICS,
};
pub use rsm::{rsm, rsm_table};
pub use tracker::logistic_tracker;
pub use triplet::{pearson_correlation_matrix, triplet_agreement, TripletReport};
pub use tsne::{pca_project, project_tsne, TsneConfig, TsneResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("degenerate split: training labels are single-class")]
    DegenerateSplit,
    #[error("{0}")]
    Autodiff(#[from] ecgan_autodiff::AutodiffError),
    #[error("{0}")]
    Embed(#[from] ecgan_embedding::EmbedError),
    #[error("{0}")]
    Gan(#[from] ecgan_gan::GanError),
    #[error("{0}")]
    Cvae(#[from] ecgan_cvae::CvaeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;
