//! Deep cross-modal hashing.
//!
//! Two feed-forward networks, one per modality, map image and text features
//! to real `c`-dimensional outputs whose signs are the hash codes. Training
//! alternates SGD on each network with a closed-form update of the shared
//! training codes. The [`retrieval`] module scores cross-modal search by
//! Hamming ranking (MAP) and hash lookup (precision/recall per radius).
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix it to `f64`, with `*32` variants for `f32`.

pub mod cli;
pub mod data;
mod error;
pub mod math;
pub mod model;
pub mod net;
pub mod retrieval;

pub use error::{Error, Result};
pub use math::{sign_matrix, CodeMatrix, Rng, Scalar};

pub type Matrix = math::DenseMatrix<f64>;
pub type Matrix32 = math::DenseMatrix<f32>;
pub type Net = net::FeedForwardNet<f64>;
pub type Net32 = net::FeedForwardNet<f32>;
pub type Hyperparams = model::Hyperparams<f64>;
pub type Hyperparams32 = model::Hyperparams<f32>;
pub type TrainState = model::TrainState<f64>;
pub type TrainState32 = model::TrainState<f32>;
pub type Checkpoint = model::Checkpoint<f64>;
pub type Dataset = data::MultiModalDataset<f64>;
pub type Dataset32 = data::MultiModalDataset<f32>;
