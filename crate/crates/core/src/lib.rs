//! (alpha, beta)-parameterized Lloyd's clustering.
//!
//! Seeding samples each new center with probability proportional to
//! `d^alpha` (uniform at `alpha = 0`, k-means++ at `alpha = 2`,
//! farthest-first at `alpha = inf`); the local search runs Lloyd's method on
//! the l_beta objective. For a fixed vector of uniforms the seeding output is
//! piecewise constant in alpha, and [`breakpoints`] enumerates those pieces
//! exactly, which [`tuner`] uses to pick the empirically best alpha over a
//! sample of instances.

pub mod breakpoints;
pub mod datagen;
pub mod error;
pub mod lloyds;
pub mod matching;
pub mod model;
pub mod seeding;
pub mod tuner;

pub use error::{Error, Result};
pub use model::{ClusteringInstance, Clustering, Centers, HammingCost};
pub use seeding::SeedVector;
