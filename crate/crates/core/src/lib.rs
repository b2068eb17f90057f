//! Numerical laboratory for Morse indices of global solutions to the
//! one-phase free boundary problem in the plane.
//!
//! The crate evaluates the three global solutions with finite topology
//! (the half-plane, the disk complement and the double hairpin), meshes
//! truncations of their positive phases, assembles the second variation
//! form `Q(φ, φ) = ∫|∇φ|² − ∫_F H φ²` with P1 elements, and counts its
//! negative directions through matrix inertia. An independent
//! Fourier–Bessel treatment of the disk form `Q0` serves as ground truth.
//!
//! Module map:
//!
//! * [`solutions`]: closed-form solutions, the strip chart and the conformal map `G`.
//! * [`meshgen`]: structured triangulations with tagged boundary edges.
//! * [`fem`]: P1 assembly of stiffness, mass and Robin boundary mass; Robin–Poisson solves.
//! * [`spectra`]: inertia (Morse index) and low eigenpairs of the pencil `(K, M)`.
//! * [`disk_oracle`]: Bessel secular equations for the disk Robin problem.
//! * [`experiments`]: verification experiments emitting [`report::ExperimentReport`]s.
//! * [`acceptance`]: the acceptance table, shared by the test suite and the CLI.

pub mod acceptance;
pub mod disk_oracle;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod meshgen;
pub mod quadrature;
pub mod report;
pub mod solutions;
pub mod sparse;
pub mod spectra;

pub use error::{Error, Result};
pub use meshgen::{BoundaryEdge, EdgeTag, TriMesh};
pub use solutions::SolutionKind;

/// Planar coordinates `(x₁, x₂)`.
pub type Point = [f64; 2];
