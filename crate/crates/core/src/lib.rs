//! Fractional dyadic diffusion geometry on the half line `[0, ∞)`.
//!
//! * [`dyadic`]: exact dyadic points and intervals, the dyadic distance `δ`
//!   and the Haar system.
//! * [`spectral`]: the Haar heat kernel, the profile `ψ_t` and the diffusion
//!   distance `d_t = ψ_t ∘ δ`, computed in closed form and as a spectral sum,
//!   plus diffusion balls.
//! * [`laplacian`]: the dyadic fractional Laplacian by shell decomposition and
//!   the heat evolution in spectral and kernel-integral form.
//! * [`euclidean`]: the Gauss–Weierstrass diffusion metric on `ℝⁿ`.
//! * [`verify`]: property suites behind the `verify` command.

pub mod cli;
pub mod dyadic;
pub mod error;
pub mod euclidean;
pub mod laplacian;
pub mod numeric;
pub mod quadrature;
pub mod spectral;
pub mod verify;

pub use dyadic::{dyadic_distance, haar_eval, smallest_common_interval, DyadicInterval, DyadicPoint, HaarWavelet};
pub use error::{Error, Result};
pub use spectral::{Ball, DiffusionParams, TruncationPolicy};
