//! Control-volume finite-element (CVFE) solver for an electrostatically
//! coupled cross-diffusion system of ion species in a solvent under a
//! volume-filling constraint.
//!
//! The discretization combines P1 finite-element fluxes on a conforming
//! simplicial mesh with vertex-centered balances on the barycentric dual
//! mesh. Each implicit time step solves the coupled nonlinear system for the
//! ion concentrations and the electric potential with a damped Newton method
//! that preserves the positivity of all concentrations.
//!
//! Modules:
//! - [`mesh`]: mesh generation, gmsh ingestion, uniform refinement, geometry.
//! - [`scheme`]: discrete states, the concentration/chemical-potential
//!   transform, residuals and Jacobians of the coupled scheme.
//! - [`newton`]: damped Newton time stepping and the transient loop.
//! - [`sparse`]: compressed-row matrices and a direct solver.
//! - [`diagnostics`]: mass/entropy records, nested-mesh errors, rate fits.
//! - [`config`], [`expr`], [`vtk`], [`cli`]: the file-driven front end.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod expr;
pub mod mesh;
pub mod newton;
pub mod numeric;
pub mod scheme;
pub mod sparse;
pub mod vtk;
