//! Solvers and diagnostics for tissue-growth models with congestion.
//!
//! Densities are pushed by the gradient of a potential `w` that solves
//! `-nu Lap w + w = p`, where the pressure `p` is a subgradient of a convex
//! energy of the density. With `nu = 0` the model reduces to a porous-medium
//! equation with growth. The [`diagnostics`] module evaluates the energy
//! balances and bounds that such flows satisfy.

pub mod checks;
pub mod convex_energy;
pub mod field_grid;
pub mod helmholtz_solver;
pub mod pressure_laws;
pub mod darcy_stepper;
pub mod diagnostics;
pub mod quadrature;
pub mod brinkman_stepper;
