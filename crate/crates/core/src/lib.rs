//! Conditional WGAN-gp generation of Wigley-family ship hulls from
//! performance labels (drag coefficient, displacement, design speed).
//!
//! The numerical core is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, which is what the corpus, training and CLI use.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod hydro;
pub mod nn;
pub mod plot;
pub mod scalar;
pub mod wgan;

pub use error::{Error, Result};
pub use scalar::Real;

pub type WigleyParams = geometry::WigleyParams<f64>;
pub type WigleyExponents = geometry::WigleyExponents<f64>;
pub type GridSpec = geometry::GridSpec<f64>;
pub type HullGrid = geometry::HullGrid<f64>;
pub type HullPointCloud = geometry::HullPointCloud<f64>;
pub type HydroEnv = hydro::HydroEnv<f64>;
pub type QuadratureSpec = hydro::QuadratureSpec<f64>;
pub type DragBreakdown = hydro::DragBreakdown<f64>;
pub type HullLabel = hydro::HullLabel<f64>;
pub type Tensor = nn::Tensor<f64>;
pub type MlpParams = nn::MlpParams<f64>;
