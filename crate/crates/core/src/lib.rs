//! Load and spectrum models for dynamic wireless power transfer roadways.
//!
//! Modules, from the single vehicle up:
//!
//! * [`er_model`] roadway geometry and the load waveform of one EV;
//! * [`spectrum`] closed-form Fourier coefficients, THC and harmonic bounds;
//! * [`fleet`] line spectrum of a random fleet and composition analysis;
//! * [`traffic`] synthetic arrivals and trajectory files;
//! * [`signal`] sampled aggregate load, PSD estimates, peaks and Monte Carlo;
//! * [`composition`] the truck-share sweep over sampled one-minute windows;
//! * [`validate`] self-checks of every closed form against numerical oracles;
//! * [`cli`] the `dwpt` command-line front end.

pub mod cli;
pub mod composition;
pub mod er_model;
pub mod error;
pub mod fleet;
pub mod quad;
pub mod signal;
pub mod spectrum;
pub mod traffic;
pub mod validate;

pub use er_model::{load_at_position, load_at_time, pulse_g, ControlScheme, ErConfig, EvParams};
pub use error::{DwptError, Result};
pub use fleet::{
    analytic_psd, class_moments, composition_boundary, composition_condition, mixture_moments,
    q_ratio, thc_total, CompositionScenario, DemandDist, FleetClass, FleetModel, PsdModel,
};
pub use spectrum::{
    compare_schemes, fs_coefficients, fs_dc, fs_harmonic, harmonic_bound,
    harmonic_ratio_clipping, harmonic_ratio_scaling, thc_single, FsCoefficients, Truncation,
};
