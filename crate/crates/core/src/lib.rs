//! Piecewise-geodesic approximations of Wiener measure on non-positively
//! curved manifolds.
//!
//! The crate builds the Jacobi-field Gram matrix of a piecewise path, compares
//! it with its flat counterpart through the Radon-Nikodym density
//! `rho = sqrt(det G / det L)`, and provides the spectral theory of the flat
//! matrix together with seeded Monte Carlo campaigns.
//!
//! The numerical core is generic over [`Real`] (implemented for `f32` and
//! `f64`). The Monte Carlo layer works in `f64`; the aliases at the crate root
//! name the `f64` instantiations used by the command line front end.

pub mod density;
pub mod development;
pub mod error;
pub mod gram;
pub mod jacobi;
pub mod manifold;
pub mod montecarlo;
pub mod paths;
pub mod quadrature;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Partition = paths::Partition<f64>;
pub type IncrementVector = paths::IncrementVector<f64>;
pub type CurvatureModel = manifold::CurvatureModel<f64>;
pub type ManifoldPath = development::ManifoldPath<f64>;
pub type JacobiSegment = jacobi::JacobiSegment<f64>;
pub type TransferData = jacobi::TransferData<f64>;
pub type BlockTridiagonal = gram::BlockTridiagonal<f64>;
pub type SpectralData = spectral::SpectralData<f64>;
pub type CholeskyFactor = spectral::CholeskyFactor<f64>;
pub type DensitySample = density::DensitySample<f64>;
