//! Numerical toolkit for single-photon detector POVMs.
//!
//! A detector is modelled as a two-level trigger with a time-dependent decay
//! rate `kappa(t)` and detuning `Delta(t)`. A click at the check time `T`
//! projects onto a retrodictive wavepacket `Psi(t)`. This crate computes that
//! wavepacket from a drive ([`forward`]), constructs the drive for a desired
//! wavepacket ([`inverse`]), measures entropic time and frequency widths
//! ([`uncertainty`]), assembles click elements for a realistic filtered,
//! amplified and inefficient chain ([`detector`]), and evaluates a
//! two-mode superresolution scheme ([`applications`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod detector;
pub mod error;
pub mod forward;
pub mod grids;
pub mod inverse;
pub mod io;
pub mod uncertainty;

/// Version of this crate, recorded in output manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, ErrorKind, Result};
pub use forward::{
    detection_probability, integrate_langevin, polynomial_drive, retrodict, DetectorDrive,
    LangevinOptions, OnTime, PolynomialDrive, PolynomialFamily, TriggerMode,
};
pub use grids::{
    fourier_transform, inverse_fourier_transform, ComplexEnvelope, Domain, FourierSign, Grid,
};
pub use inverse::{
    gaussian_target, hermite_gaussian_target, invert_to_drive, symmetry_check, TargetWavepacket,
};
pub use num_complex::Complex64;
pub use uncertainty::{
    entropic_uncertainty, mixture_distribution, time_frequency_product, RetrodictiveDistribution,
};
