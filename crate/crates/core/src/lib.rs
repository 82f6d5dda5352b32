//! Numerical toolkit for the Biedenharn–Macfarlane q-oscillator with q > 1:
//! its Fock representation, the Jacobi-matrix position and momentum operators
//! with their self-adjointness verdicts, the one-parameter family of
//! self-adjoint extensions (discrete spectra, weights, eigenfunctions,
//! coordinate/momentum isometries), and the discrete q-analogue of the
//! Fourier transform between the two grid realizations.
//!
//! Modules:
//! - [`qcore`]: q-numbers and q-Pochhammer symbols with controlled truncation
//! - [`fock`]: ladder operators and the Hamiltonian spectrum on truncated
//!   coefficient vectors
//! - [`jacobi`]: three-term recurrence polynomials, truncated
//!   eigendecomposition, self-adjointness verdicts
//! - [`qhermite`]: q⁻¹-Hermite polynomials and the eigenvector coefficient
//!   families, each computable by two independent methods
//! - [`spectra`]: extremal measures, spectral points and weights, isometries
//!   onto weighted ℓ² grids, moments
//! - [`qfourier`]: the q-Fourier transform matrix built two independent ways,
//!   with inverse and Plancherel verification
//! - [`checks`]: the named invariant suite behind the CLI `verify` command
//!
//! Every paper-level formula is paired with an independent second computation
//! somewhere in the crate: weights against the mass identity, the
//! eigenfunction product against its series, the transform product form
//! against its defining sum, recurrence polynomials against a dense
//! eigensolver.

pub mod checks;
pub mod error;
pub mod fock;
pub mod jacobi;
pub mod qcore;
pub mod qfourier;
pub mod qhermite;
pub mod spectra;

mod par;

pub use error::{Error, Result};
pub use fock::FockVector;
pub use jacobi::{JacobiOperator, SelfAdjointness, SelfAdjointnessVerdict};
pub use qcore::{QParameters, Tolerance};
pub use qhermite::OperatorKind;
pub use spectra::{ExtremalMeasure, GridFunction, SpectralWindow};
pub use qfourier::TransformMatrix;
