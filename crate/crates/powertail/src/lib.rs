//! Evaluation, fitting and sampling for an impact-factor distribution with
//! an exponential (Boltzmann) body and a power-law tail.
//!
//! The density is recovered by a Fourier-cosine inversion of a
//! characteristic-function kernel built from the modified Bessel function
//! of the second kind:
//!
//! ```text
//! W(R) = 1/sqrt(pi T) ∫_0^∞ cos(x sqrt(R)) [phi_nu(x s)]^theta dx,
//! phi_nu(t) = 2^(1-nu)/Γ(nu) t^nu K_nu(t),  nu = beta - 1/2,
//! s = sqrt((beta - 3/2) T / theta)
//! ```
//!
//! For small R the survival function behaves like exp(-R/T); for large R it
//! crosses over to a power law. `T` acts as an effective temperature of the
//! body, `theta` controls where the crossover happens, and `beta > 3/2`
//! shapes the tail.
//!
//! Modules:
//! - [`specfun`]: log-gamma, real-order K_nu, the normalized kernel.
//! - [`distcore`]: PDF / survival evaluation by oscillation-aware
//!   quadrature, closed-form small-R approximations, tail diagnostics.
//! - [`fitkit`]: empirical survival functions, log-space least-squares
//!   fitting, Kolmogorov-Smirnov stability statistics, stratification.
//! - [`sampler`]: reproducible inverse-transform sampling from tabulated
//!   survival curves.
//! - [`ingest`]: delimited journal/impact-factor table parsing with
//!   decimal-comma support.

pub mod distcore;
pub mod error;
pub mod fitkit;
pub mod ingest;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
