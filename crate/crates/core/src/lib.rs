//! Principal eigenvalues of the indefinite-weight problem
//! Δφ + λ m φ = 0 with Robin boundary conditions ∂ₙφ + βφ = 0,
//! and minimization of λ over bang-bang weights m = κ·1_E − 1_{Ω∖E}
//! under the volume constraint |E| = c|Ω|.
//!
//! The crate provides:
//!
//! - deterministic structured meshes of the interval, the rectangle and
//!   the disk ([`mesh`]);
//! - P1 finite-element assembly of the stiffness, boundary-mass, mass and
//!   weighted-mass operators entering the Rayleigh quotient ([`assembly`]);
//! - eigenvalue solvers: the spectral probe ρ(λ), the principal eigenvalue
//!   λ(m), the auxiliary eigenvalue γ(μ), a mesh-free transfer-matrix
//!   solver for interval weights in 1D, the threshold β*(κ, c), and the
//!   radial reduction for arbitrary dimension N ([`eigen`]);
//! - set transformations: bathtub thresholding, monotone and Schwarz
//!   rearrangements, the half-to-whole stretch map of the ball, and the
//!   orthogonal-cap radius solve ([`rearrange`]);
//! - the fixed-point thresholding optimizer and the 1D interval sweep
//!   ([`optimize`]);
//! - a semi-implicit solver for the diffusive logistic equation, which the
//!   eigenvalue thresholds govern ([`dynamics`]);
//! - plain-text field-file and CSV export ([`io`]).

pub mod assembly;
pub mod dynamics;
pub mod eigen;
mod error;
pub mod io;
pub mod mesh;
pub mod optimize;
pub mod rearrange;
pub mod sparse;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
