//! Time-harmonic scattering in a two-dimensional sound-hard waveguide with
//! thin chimneys on the top wall: finite-element solves with transparent
//! modal boundaries, coefficient extraction, first-order asymptotics, a
//! fixed-point height designer, a constrained Neumann eigenvalue bound and
//! an independent finite-difference cross-check.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod designer;
pub mod geometry;
pub mod modal;
pub mod numeric;
pub mod obstruction;
pub mod oracle_fd;
pub mod p2;
pub mod pipeline;
pub mod scattering;
pub mod solver;

pub use geometry::{
    generate_mesh, generate_mesh_with, validate_spec, BoundaryTag, Chimney, Mesh, MeshError, MeshOptions, Region,
    SpecViolation, WaveguideSpec,
};
pub use numeric::C64;
