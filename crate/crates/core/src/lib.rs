//! Quantization of torus symbols and their averaged dynamics.
//!
//! A function on the cotangent bundle of the flat N-torus is represented by
//! its mixed Fourier coefficients `F̂(k, p)`: a Fourier series in position
//! (frequency `k`) sampled at integer momenta `p`.  Such a symbol becomes a
//! bounded operator on `ℓ²(Z^N)` with matrix entries `A[k, m] = F̂(k − m, m)`,
//! and the free Schrödinger flow acts on symbols by an explicit phase twist.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: integer modes, energy shells of `H = −Δ/2`, resonances.
//! * [`symbols`]: coefficient tables, weighted norms, sampling grids.
//! * [`operators`]: banded matrices, norms, singular values.
//! * [`dynamics`]: the flow on symbols and its finite-time averages.
//! * [`semiclassical`]: eigenfunction averages `τ_E` and rank certificates.

pub mod dynamics;
pub mod lattice;
pub mod operators;
pub mod semiclassical;
pub mod symbols;

pub use dynamics::{AveragingReport, TimeParameter};
pub use lattice::{EnergyCutoff, ModeBox, ModeIndex};
pub use operators::{OperatorMatrix, StateVector};
pub use semiclassical::{AverageDecomposition, DecayCurve};
pub use symbols::{RegularityIndex, SymbolCoefficients, SymbolGrid};
