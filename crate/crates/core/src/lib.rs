//! Spectrum sharing between a LEO and a GEO operator serving IoT devices with
//! CRDSA random access.
//!
//! The crate combines a frame-level Monte Carlo simulator of iterative
//! successive interference cancellation ([`macsim`]) with a density-evolution
//! approximation of the segregated-band peak throughput ([`deanalysis`]).
//! Analytical modules are generic over [`Scalar`]; the `*F64` / `*F32` aliases
//! below name the common instantiations.

pub mod deanalysis;
pub mod error;
pub mod linkbudget;
pub mod macsim;
pub mod phy;
pub mod rng;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use macsim::{Band, PerService};
pub use phy::Service;
pub use scalar::Scalar;

pub type LinkParamsF64 = linkbudget::LinkParams<f64>;
pub type LinkParamsF32 = linkbudget::LinkParams<f32>;
pub type LinkBudgetResultF64 = linkbudget::LinkBudgetResult<f64>;
pub type LinkBudgetResultF32 = linkbudget::LinkBudgetResult<f32>;
pub type TinSicModelF64 = phy::TinSicModel<f64>;
pub type TinSicModelF32 = phy::TinSicModel<f32>;
pub type RateF64 = phy::Rate<f64>;
pub type RateF32 = phy::Rate<f32>;
pub type DeConfigF64 = deanalysis::DeConfig<f64>;
pub type DeConfigF32 = deanalysis::DeConfig<f32>;
pub type DeResultF64 = deanalysis::DeResult<f64>;
pub type DeResultF32 = deanalysis::DeResult<f32>;
