//! Physical-space energy-cascade diagnostics for sampled 3D incompressible
//! velocity fields.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! evaluate cover elements and FFT lines on the rayon pool; every reduction
//! runs over a fixed tree so results do not depend on the thread count.
//!
//! Layout follows the analysis pipeline:
//!
//! * [`grid`], [`field`], [`spectral`], [`generators`], [`quadrature`]:
//!   periodic sampled fields, discrete calculus, pressure recovery and
//!   closed-form test flows.
//! * [`cutoff`]: the test functions `phi = eta(t) psi(x)`.
//! * [`cover`]: `(K1, K2)`-covers of the integral ball and their lattice
//!   decomposition.
//! * [`functional`]: localized energy, flux, anomalous dissipation and the
//!   Duchon-Robert estimator.
//! * [`ensemble`]: ensemble averages, the two-sided dissipation bounds, the
//!   cascade verdict, locality ratios and the tube scans.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod cover;
pub mod cutoff;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod field;
pub mod functional;
pub mod generators;
pub mod grid;
pub mod math;
pub mod quadrature;
pub mod reduce;
pub mod spectral;

pub use cover::{Cover, CoverParams, CoverVerification, LatticeDecomposition, ProbeSet};
pub use cutoff::{CutoffFunction, SpatialCutoff, SpatialKind, TemporalCutoff};
pub use ensemble::{CascadeVerdict, ConstantsMode, EnsembleReport, LocalityReport};
pub use error::{Error, Result};
pub use field::{ScalarDensity, VectorField3};
pub use functional::{FieldDensities, FluxForm, LocalFunctionalValue};
pub use grid::{Grid3, TimeAxis};

/// Three-component vector in world coordinates.
pub type Vec3 = [f64; 3];
