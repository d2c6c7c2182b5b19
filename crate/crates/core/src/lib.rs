//! Hamilton-Jacobi equations on polygonal ramified spaces.

pub mod dirichlet;
pub mod geometry;
pub mod hamiltonian;
pub mod io;
pub mod metric;
pub mod fixtures;
pub mod viscosity;
pub mod cli;
