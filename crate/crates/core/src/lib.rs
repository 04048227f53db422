//! Simulation toolkit for two-mode collective-spin metrology: Dicke-family
//! state constructors, loss and dephasing channels, squeezing figures of
//! merit, Pegg-Barnett relative-phase distributions and Bayesian
//! Mach-Zehnder phase estimation.
//!
//! All state values are immutable after construction and every operation is
//! a pure function, so everything here is safe to evaluate concurrently;
//! cached operator tables are initialized behind locks and shared read-only
//! afterwards.

pub mod bayes;
pub mod error;
mod math;
pub mod noise;
pub mod operators;
pub mod phase;
pub mod sector;
pub mod squeezing;
pub mod states;

pub use error::{Error, Result};
pub use operators::{
    Axis, MomentRecord, SpinOperators, build_sector_operators, collective_moments, rotate_y,
    to_pm_basis,
};
pub use sector::{C64, SectorContent, SectorDensityMatrix, SectorPureState, SectoredState};
pub use squeezing::{NConvention, SqueezingReport, entanglement_depth_lower_bound, xi_d, xi_s};
pub use states::{
    GaussianDickeParams, SqueezedSearchParams, dicke_state, gaussian_dicke, lossy_dicke,
    min_variance_squeezed_state, spin_coherent_x,
};
