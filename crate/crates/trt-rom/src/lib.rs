//! 1D multigroup thermal radiative transfer on slab geometry.
//!
//! Full-order model: backward-Euler discrete-ordinates transport (simple
//! corner balance) coupled to the material energy balance through a
//! multilevel quasidiffusion ladder (multigroup low-order system, grey
//! low-order system, temperature update). Reduced-order model: Galerkin
//! projection of the transport equation onto a POD basis computed in the
//! weighted phase-space inner product, with the same low-order ladder.
//!
//! Modules follow the data flow:
//! - [`grid`]: spatial mesh, angular quadrature, time grid, phase-space layout
//! - [`physics`]: opacity law, Planck integrals, equation of state
//! - [`transport`]: corner-balance sweep and matrix-free operator applications
//! - [`moments`]: angular moments, Eddington factors, grey closure coefficients
//! - [`loqd`]: multigroup and grey low-order solvers, temperature update
//! - [`fom`]: full-order time-stepping driver and snapshot recording
//! - [`pod`]: weighted proper orthogonal decomposition and rank selection
//! - [`rom`]: reduced operator assembly and reduced-order time stepping
//! - [`baselines`]: multigroup P1 and flux-limited diffusion reference models
//! - [`config`], [`persist`], [`compare`]: run configuration, on-disk formats,
//!   error reports

pub mod baselines;
pub mod compare;
pub mod config;
pub mod error;
pub mod fom;
pub mod grid;
pub mod loqd;
pub mod moments;
pub mod persist;
pub mod physics;
pub mod pod;
pub mod rom;
pub mod transport;

pub use config::RunConfig;
pub use error::Error;

/// Speed of light in cm/ns.
pub const LIGHT_SPEED: f64 = 29.9792458;

/// Radiation constant a_R in jerk/(cm^3 keV^4), from exact SI defining
/// constants: a = 8 pi^5 k^4 / (15 h^3 c^3) converted to keV temperatures.
pub const RADIATION_CONSTANT: f64 = 0.013720169264801067;

pub type Result<T> = std::result::Result<T, Error>;
