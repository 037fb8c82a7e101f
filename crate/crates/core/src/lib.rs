//! Cold-start recommender laboratory.
//!
//! * [`zeromat`]: trains user/item factors with no rating data at all, using
//!   only the universe size and the maximum rating.
//! * [`baselines`]: PMF trained on observed ratings, and uniform random guessing.
//! * [`ingest`]: MovieLens/CSV loading, seeded splits and a synthetic
//!   Zipf-popularity generator with a uniform-mix knob.
//! * [`metrics`]: MAE, a Gini-based popularity concentration score and
//!   rank/frequency slope fitting.
//! * [`harness`]: end-to-end comparisons and the uniform-mix sweep.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the double-precision types the harness and CLI use.

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod persist;
pub mod scalar;
pub mod zeromat;

pub use error::{Error, Result};
pub use model::{
    global_max_dot, predict_rating, FactorModel, RatingTriple, RatingsDataset, TrainConfig,
};
pub use scalar::Scalar;

pub type Dataset = model::RatingsDataset<f64>;
pub type Model = model::FactorModel<f64>;
pub type Config = model::TrainConfig<f64>;
pub type Pmf = baselines::PmfConfig<f64>;
pub type Zipf = ingest::ZipfSpec<f64>;
pub type Run = zeromat::ZeroMatRun<f64>;

pub type Dataset32 = model::RatingsDataset<f32>;
pub type Model32 = model::FactorModel<f32>;
pub type Config32 = model::TrainConfig<f32>;
