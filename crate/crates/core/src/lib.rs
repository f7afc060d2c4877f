//! Anisotropic dyadic Fourier layering, Nikol'skii–Besov block norms and
//! band-limited approximation of functions on R^d.
//!
//! The crate is organised bottom-up:
//!
//! - [`anisotropy`]: smoothness vectors `r`, the harmonic exponent `g(r)` and
//!   the layer bases `a_j = 2^{g/r_j}`.
//! - [`field`]: sampled functions on a truncated box, the unitary Fourier
//!   transform and `L_p` quadrature.
//! - [`spectral`]: frequency boxes `D_{a^s}`, shells, Fourier sections and the
//!   `a`-layering of a field.
//! - [`besov`]: the block-sum Besov norm and the modulus-of-smoothness norm.
//! - [`extremal`]: sinc-product entire functions, their analytic norms and the
//!   lower-bound witnesses.
//! - [`approx`]: approximation errors by Fourier sections, rate scans and the
//!   different-metrics inequality.
//! - [`cli`]: the batch experiment runner behind the `aniso-besov` binary.

pub mod anisotropy;
pub mod approx;
pub mod besov;
pub mod cli;
pub mod error;
pub mod extremal;
pub mod field;
pub mod quad;
pub mod spectral;

pub use anisotropy::{harmonic_exponent, AnisotropyProfile};
pub use error::{Error, Result};
pub use field::{lp_norm, sample, GridSpec, SampledField, SpectralField};
