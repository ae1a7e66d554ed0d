//! Polarization-correlated photon pairs from a single laser-driven ⁴⁰Ca⁺ ion.
//!
//! The crate models the eight Zeeman sublevels of the S½, P½ and D3/2
//! manifolds driven by a 397 nm and an 866 nm laser, and builds everything
//! downstream of that master equation:
//!
//! * [`atom`] and [`params`]: level scheme, dipole channels, laser geometry.
//! * [`liouvillian`] and [`dynamics`]: the Lindblad generator, its steady
//!   state and exact propagation on a delay grid.
//! * [`correlations`]: total and polarization-conditioned g²(τ), purity,
//!   the polarization-error mixing model and excitation spectra.
//! * [`trajectory`] and [`stream`]: quantum-jump emission records, detector
//!   thinning and the `IONCLK1` time-tag format.
//! * [`correlator`]: timestamp correlation histograms.
//! * [`fitting`]: parameter recovery from spectra and g² data.
//!
//! Internally all times are in seconds and all frequencies in rad/s.
//! Conversion to MHz, nanoseconds and gauss happens only at file boundaries
//! (see [`units`]).

pub mod atom;
pub mod correlations;
pub mod correlator;
pub mod dynamics;
mod error;
pub mod fitting;
pub mod linalg;
pub mod liouvillian;
pub mod params;
pub mod stream;
pub mod trajectory;
pub mod units;

pub use error::{Error, Result};

pub use atom::{Polarization, Wavelength};
pub use correlations::{CorrelationCurve, CurveKind, ErrorModel, IonModel};
pub use dynamics::{DensityMatrix, Trajectory};
pub use liouvillian::Liouvillian;
pub use params::ExperimentParams;
pub use stream::ClickStream;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Operators on the eight-level Hilbert space.
pub type Matrix8 = nalgebra::SMatrix<C64, 8, 8>;

/// State vectors on the eight-level Hilbert space.
pub type Vector8 = nalgebra::SVector<C64, 8>;

/// Number of atomic levels.
pub const N_LEVELS: usize = 8;

/// Dimension of the vectorized density matrix.
pub const N_LIOUVILLE: usize = N_LEVELS * N_LEVELS;

/// Version string written into output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
