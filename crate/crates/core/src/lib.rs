//! Hit probability analysis, Monte Carlo simulation and cache placement for
//! wireless cloud caching networks whose radio units form a Matérn cluster
//! process.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes are tabulated to their published digits.
#![allow(clippy::excessive_precision)]
// Sums over several parallel tables read best with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod content;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hitprob;
pub mod interference;
pub mod optimizer;
pub mod quadrature;
pub mod scalar;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{QuadValue, Scalar};

/// Double-precision cloud layout.
pub type CloudGeometry = geometry::DiskLayout<f64>;
/// Double-precision popularity profile.
pub type PopularityProfile = content::Popularity<f64>;
/// Double-precision cache placement.
pub type CachePolicy = content::Placement<f64>;
