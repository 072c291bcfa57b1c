//! Spectral-gap bounds, exact spectra and Monte Carlo estimates for the Kac
//! walk with collision rate proportional to (v_i² + v_j²)^γ.

pub mod bounds;
pub mod correlation;
pub mod error;
pub mod kac_walk;
pub mod poly;
pub mod products;
pub mod special;
pub mod sphere;
pub mod variational;

pub use error::{KacError, Result};
pub use poly::Poly;
pub use products::{ProductResult, RationalProductSpec, Truncation};
pub use sphere::{MarginalDensity, SpherePoint, SphereSpec};
pub use correlation::CorrelationSpectrum;
pub use bounds::{BaseChoice, BoundReport, GapBoundInputs};
pub use variational::{LinearizedModel, TrialProfile};
pub use kac_walk::{GapEstimate, VelocityState};
