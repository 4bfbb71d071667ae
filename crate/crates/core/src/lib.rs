//! Photon-coincidence statistics of two-mode Gaussian states and photon-pair
//! sources, together with the nonclassicality and quantum non-Gaussianity
//! witnesses built on them.
//!
//! The covariance-matrix pipeline ([`gaussian`], [`spad`], [`pnrd`],
//! [`criteria`]) is generic over the scalar type; the truncated Fock-space
//! oracle ([`fock`]), the Monte-Carlo certification ([`montecarlo`]) and the
//! source model ([`model`]) work in `f64`.

pub mod criteria;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod pnrd;
pub mod real;
pub mod spad;

pub use error::{Error, Result};
pub use real::Real;

pub type GaussianState64 = gaussian::GaussianState<f64>;
pub type GaussianState32 = gaussian::GaussianState<f32>;
pub type BlochMessiahParams64 = gaussian::BlochMessiahParams<f64>;
pub type BlochMessiahParams32 = gaussian::BlochMessiahParams<f32>;
pub type ClickStats64 = spad::ClickStats<f64>;
pub type PnrdStats64 = pnrd::PnrdStats<f64>;
pub type Verdict64 = criteria::Verdict<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
