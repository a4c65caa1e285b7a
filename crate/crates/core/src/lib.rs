//! Spectral hole burning in rare-earth-doped crystals: pulse synthesis,
//! three-level population dynamics, Zeeman shifts of the hole pattern,
//! spectral diffusion fits and dipolar field estimates.

pub mod constants;
pub mod diffusion;
pub mod dipolar;
pub mod error;
pub mod lineshape;
pub mod lsq;
pub mod model;
pub mod pulse;
pub mod rate;
pub mod zeeman;

pub use error::{Error, InvalidParameter, Result};
pub use model::{
    validate, Background, FrequencyGrid, LaserParams, MaterialParams, PopulationState,
    SpectralArray, SpectralUnit,
};
