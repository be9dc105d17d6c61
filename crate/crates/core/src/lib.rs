//! Steady states of dissipative dynamical systems, computed through the
//! time-steppers people already have.
//!
//! The central object is the fixed-point map `F(u) = u - Phi_T(u)`, where
//! `Phi_T` advances the system by a fixed horizon `T`. Zeros of `F` are
//! steady states, and for dissipative problems the Jacobian of `F` is a
//! compact perturbation of the identity: most of its spectrum piles up in a
//! tight cluster near 1 while only a handful of slow modes escape. GMRES
//! resolves one escaped eigenvalue per iteration and then converges in a
//! single step on the cluster, so the inner solves cost a few operator
//! applications regardless of mesh size. Everything here is matrix-free:
//! the only access to the problem is through residual evaluations.
//!
//! Module layout:
//!
//! - [`linalg`]: dense, tridiagonal, and orthogonalization kernels.
//! - [`krylov`]: full-memory GMRES and residual-history bound checks.
//! - [`newton`]: inexact Newton with finite-difference directional
//!   derivatives and Eisenstat-Walker forcing.
//! - [`timestepper`]: RK4 and implicit trapezoid integrators plus the
//!   fixed-point formulation of steadiness.
//! - [`problems`]: the Chandrasekhar H-equation, the Chafee-Infante PDE,
//!   and a synthetic low-rank-plus-noise operator with a known inverse.
//! - [`continuation`]: pseudo-arclength branch following and fold detection.
//! - [`spectrum`]: finite-difference Jacobians and in-crate eigensolvers.

// Numeric guards are written negated so that NaN fails them, and the
// matrix kernels keep their loops in subscript form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod continuation;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod newton;
pub mod problems;
pub mod spectrum;
pub mod timestepper;

pub use error::SolverError;
