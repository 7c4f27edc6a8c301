//! Nonlinear generalized functions as ε-nets of sampled functions, with
//! growth classification against regular scales, embeddings of
//! distributions, Fourier exchange and wavefront estimation.

pub mod embed;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod microlocal;
pub mod mollifier;
pub mod scalar;
pub mod scales;
pub mod serde_ext;
pub mod transform;

pub use grid::{EpsilonNet, GridBox, GridFunction, GrowthProfile, Ladder, Side, SubBox};
pub use scalar::Real;

pub type Net64 = EpsilonNet<f64>;
pub type Net32 = EpsilonNet<f32>;
pub type GridFunction64 = GridFunction<f64>;
pub type GridFunction32 = GridFunction<f32>;
pub type Embedding64 = embed::EmbeddingResult<f64>;
pub type Embedding32 = embed::EmbeddingResult<f32>;
