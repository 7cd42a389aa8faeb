//! 2D incompressible Navier-Stokes solver with subgrid artificial viscosity
//! (SAV) stabilization.
//!
//! The scheme advances the velocity/pressure pair with a BDF2 formula whose
//! convecting field is linearly extrapolated (`2 u^n - u^{n-1}`), so every
//! step is a single sparse linear solve. Stabilization adds a vorticity
//! penalty `alpha1 (curl u, curl v)` and anti-diffuses it on the resolved
//! scales through an auxiliary variable `S_H`, the L2 projection of the
//! vorticity onto a lower-degree space; grad-div stabilization
//! `alpha2 (div u, div v)` improves discrete mass conservation.
//!
//! Crate layout:
//! - [`linalg`]: CSR matrices, block assembly, sparse LU, GMRES.
//! - [`mesh`]: triangulations of the benchmark domains, refinement, file I/O.
//! - [`spaces`]: P1/P2 Lagrange spaces, quadrature, operator assembly,
//!   boundary conditions, norms.
//! - [`solver`]: the time stepper.
//! - [`diagnostics`]: energy/enstrophy, drag/lift, exact discrete identity
//!   checks, error norms.
//! - [`cli`]: experiment drivers and configuration.

pub mod cli;
pub mod diagnostics;
pub mod linalg;
pub mod mesh;
pub mod solver;
pub mod spaces;
