//! Operator calculus for `−Δ + σ·∇` with measure-valued drifts on a periodic
//! lattice.

pub mod battery;
pub mod error;
pub mod fft;
pub mod classes;
pub mod field;
pub mod fieldio;
pub mod grid;
pub mod norms;
pub mod power;
pub mod quad;
pub mod resolvent;
pub mod semigroup;
pub mod measures;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Field, VecField, C64};
pub use grid::Grid;
pub use spectral::MultiplierSymbol;
