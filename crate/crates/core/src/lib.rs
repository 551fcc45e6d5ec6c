//! Spectral solitary-wave solver for a fully dispersive Whitham-Boussinesq
//! system.
//!
//! The travelling-wave problem reduces to a single profile equation for u,
//! the Euler-Lagrange equation of the energy
//!
//! ```text
//! E(u) = (1/2) int ( L^{1/2}u + (1/2)(L^{-1/2}u)^2 )^2 dx
//! ```
//!
//! minimized over the sphere Q(u) = (1/2) int u^2 = q. Here L is a Fourier
//! multiplier with an admissible even symbol m; the water-wave case is
//! m(xi) = xi/tanh(xi) and m(xi) = 1 + b xi^2 gives a Boussinesq system.
//! The Lagrange multiplier lambda of a minimizer determines the wave speed
//! through lambda = -1/c^2, and as q -> 0 the rescaled minimizers approach
//! the KdV sech^2 profile.
//!
//! Module map:
//! - [`symbols`]: symbol catalog, fractional powers, admissibility checker
//! - [`grid`]: periodic grid, grid functions, quadrature
//! - [`spectral`]: multiplier application, derivatives, Sobolev norms,
//!   resampling
//! - [`functionals`]: Q, L, N_c, N_r, E, the gradient, and the KdV energy
//!   decomposition
//! - [`solver`]: projected gradient descent on the constraint sphere
//! - [`asymptotics`]: KdV profile, rescaling/alignment, physical variables,
//!   steady residuals, asymptotic-law fits
//! - [`sweep`]: continuation ladders in q
//!
//! ```
//! use whitham_soliton::asymptotics::{kdv_compare, recover_physical, steady_residual};
//! use whitham_soliton::solver::{minimize_constrained, SolverConfig};
//! use whitham_soliton::symbols::SymbolSpec;
//!
//! let spec = SymbolSpec::whitham();
//! let mut cfg = SolverConfig::new(1e-2);
//! cfg.n = 256;
//! cfg.l0 = 30.0;
//! let result = minimize_constrained(&cfg, &spec)?;
//! assert!(result.converged && result.lambda > -1.0 && result.lambda < -0.5);
//!
//! let comparison = kdv_compare(&result)?;
//! assert!(comparison.h1_distance < 1.0);
//! let wave = recover_physical(&result, &spec)?;
//! let (r1, _r2) = steady_residual(&wave, &spec);
//! assert!(r1 < 1e-6);
//! # Ok::<(), whitham_soliton::Error>(())
//! ```

// validation uses negated comparisons (`!(x > 0.0)`) deliberately: they
// reject NaN, which the suggested `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod solver;
pub mod spectral;
pub mod sweep;
pub mod symbols;

pub use error::{Error, Result};
