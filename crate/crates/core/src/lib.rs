//! Numerics for Hardy and Hardy-Sobolev-Maz'ya inequalities with chained
//! interior singularities.
//!
//! The crate decides admissibility of inverse-square coefficient chains via
//! the nonpositive-alpha recursion, tabulates the derived weighted-Sobolev
//! exponents, evaluates the extremal test families whose Rayleigh and
//! Sobolev quotients witness sharpness and failure, and cross-checks the
//! constants with a staggered-grid finite-difference eigenvalue oracle.

pub mod error;
pub mod exponents;
pub mod families;
pub mod fields;
pub mod frame;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod sparse;
pub mod special;

pub use error::{Error, Result};
pub use exponents::{critical_q, sobolev_constant, sobolev_spec, SobolevSpec, WeightKind};
pub use frame::ProblemFrame;
pub use params::{
    alpha_from_beta, beta_from_alpha, canonical_alpha, gamma_from_alpha,
    AdmissibilityCertificate, AlphaContext, AlphaSeq, BetaSeq, CanonicalVariant, GammaSeq,
};
