//! Solver core for steady linear half-space kinetic equations
//!
//! ```text
//!     mu d/dx f + L f = 0          on (0, inf) x V,
//!     f|_{mu>0} = h + K(f|_{mu<0}) at x = 0,
//!     lim_{x->inf} f in H+ (+) H0,
//! ```
//!
//! where `L` is a self-adjoint nonnegative collision operator and `K` a
//! Maxwell (diffuse + specular) reflection operator. The method adds
//! rank-one damping terms to `L` so the damped operator is coercive,
//! solves the damped problem with a spectral Galerkin scheme built on
//! even/odd extensions of half-range orthogonal polynomials, and then
//! removes the damping by superposing special solutions. The limit of the
//! recovered solution at infinity (its end state) comes out as part of the
//! answer.
//!
//! Module map:
//! - [`linalg`]: dense Cholesky / Jacobi eigensolver / LU / least squares
//! - [`quadrature`]: Gauss-Legendre, truncated Gaussian-weight rules
//!   (Stieltjes + Golub-Welsch) and the trapezoidal rule
//! - [`basis`]: orthonormal families, even/odd extension, tensor indexing
//! - [`phase`]: discrete phase-space grid (species x mu x transverse)
//! - [`models`]: the three kinetic models and their null-space data
//! - [`boundary`]: reflection operators and the discrete boundary rows
//! - [`solver`]: pencil assembly, decaying modes, damped solve, recovery
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the default
//! `std` feature for the standard library float intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
// Index-driven loops over matrix entries read better than iterator chains
// in the dense kernels, and `!(x > 0.0)` deliberately treats NaN as a
// failure.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod basis;
pub mod boundary;
pub mod linalg;
pub mod models;
pub mod phase;
pub mod quadrature;
pub mod rng;
pub mod solver;
