//! Sharp mean-exit-time predictions for small-noise diffusions
//! `dX = b dt + sqrt(h) dB` with a non-reversible, possibly non-Gibbsian
//! drift `b = -(grad f + l)`, `l . grad f = 0`, exiting a bounded domain
//! `Omega = {g < 0}`.
//!
//! The crate computes the leading-order Eyring-Kramers prefactor,
//!
//! ```text
//! 1/kappa0 = sqrt(det Hess f(x0)) / sqrt(pi)
//!            * sum over saddles z of
//!              d_n f(z) / sqrt(det Hess f|bnd(z)) * exp(I_z),
//! I_z      = integral over t in [0, inf) of div l (psi_t(z)) dt,
//! ```
//!
//! where `psi` solves `dpsi/dt = -(grad f - l)(psi)`, and the closed-form
//! predictions `E[tau] = kappa0 sqrt(h) exp(2 Delta / h)` and
//! `lambda_h = zeta0 h^(-1/2) exp(-2 Delta / h)` with `zeta0 = 1/kappa0`,
//! `Delta` the boundary barrier. It validates them at desk scale against
//! quadrature, finite-difference PDE, and Monte Carlo oracles.
//!
//! Modules follow the pipeline:
//!
//! - [`expr`]: expression parsing and exact symbolic differentiation
//! - [`geometry`]: implicit domains, boundary frames, boundary Hessians
//! - [`wellspec`]: problem description, assumption checks, critical points
//! - [`flow`]: the psi-flow, divergence integrals, stationary density R0
//! - [`kramers`]: prefactor assembly and closed-form predictions
//! - [`montecarlo`]: Euler-Maruyama first-exit simulation
//! - [`pde`]: Dirichlet mean-exit and principal-eigenvalue grid solver

pub mod expr;

pub use expr::{Expression, VectorExpression};
