//! Coefficient recursions and the admissibility decision procedure.
//!
//! A chain of Hardy coefficients beta_{k0..n} is admissible exactly when it
//! is generated from a nonpositive alpha sequence by
//!
//! ```text
//! beta_{k0} = 1/4 - alpha_{k0}^2,
//! beta_m    = (alpha_{m-1} - 1/2)^2 - alpha_m^2,   m > k0.
//! ```
//!
//! `beta_from_alpha` runs the recursion forward; `alpha_from_beta` inverts it
//! deterministically (nonpositive roots) and returns a certificate either way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::ProblemFrame;

/// Rejection requires the radicand to be below `-REJECT_TOL`; values in
/// `[-REJECT_TOL, 0)` are treated as exact zeros so that boundary sequences
/// (beta at its maximal admissible value) are accepted.
pub const REJECT_TOL: f64 = 1e-12;

/// Whether an alpha sequence is constrained to nonpositive entries.
///
/// The forward recursion accepts arbitrary reals; the characterization,
/// the Sobolev exponent tables and the test families require nonpositive
/// entries. The distinction is carried on the value itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaContext {
    /// Entries may be arbitrary reals (forward direction only).
    Forward,
    /// Every entry is <= 0.
    Nonpositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSeq {
    frame: ProblemFrame,
    values: Vec<f64>,
    context: AlphaContext,
}

impl AlphaSeq {
    /// Arbitrary real entries, one per chain index.
    pub fn forward(frame: ProblemFrame, values: Vec<f64>) -> Result<Self> {
        check_len(&frame, values.len(), "alpha")?;
        check_finite(&values, "alpha")?;
        Ok(AlphaSeq { frame, values, context: AlphaContext::Forward })
    }

    /// Nonpositive entries, one per chain index.
    pub fn nonpositive(frame: ProblemFrame, values: Vec<f64>) -> Result<Self> {
        check_len(&frame, values.len(), "alpha")?;
        check_finite(&values, "alpha")?;
        if let Some(v) = values.iter().find(|v| **v > 0.0) {
            return Err(Error::argument(format!(
                "alpha entry {v} is positive; this context requires nonpositive entries"
            )));
        }
        Ok(AlphaSeq { frame, values, context: AlphaContext::Nonpositive })
    }

    pub fn frame(&self) -> ProblemFrame {
        self.frame
    }

    pub fn context(&self) -> AlphaContext {
        self.context
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry alpha_m for a chain index m.
    pub fn at(&self, m: usize) -> Result<f64> {
        Ok(self.values[self.frame.offset(m)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSeq {
    frame: ProblemFrame,
    values: Vec<f64>,
}

impl BetaSeq {
    pub fn new(frame: ProblemFrame, values: Vec<f64>) -> Result<Self> {
        check_len(&frame, values.len(), "beta")?;
        check_finite(&values, "beta")?;
        Ok(BetaSeq { frame, values })
    }

    /// The all-zero sequence (no potential).
    pub fn zeros(frame: ProblemFrame) -> Self {
        BetaSeq { frame, values: vec![0.0; frame.chain_len()] }
    }

    pub fn frame(&self) -> ProblemFrame {
        self.frame
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, m: usize) -> Result<f64> {
        Ok(self.values[self.frame.offset(m)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSeq {
    frame: ProblemFrame,
    values: Vec<f64>,
}

impl GammaSeq {
    pub fn new(frame: ProblemFrame, values: Vec<f64>) -> Result<Self> {
        check_len(&frame, values.len(), "gamma")?;
        check_finite(&values, "gamma")?;
        Ok(GammaSeq { frame, values })
    }

    pub fn frame(&self) -> ProblemFrame {
        self.frame
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, m: usize) -> Result<f64> {
        Ok(self.values[self.frame.offset(m)?])
    }

    /// Sum of all exponents; the ground state is homogeneous of this degree
    /// (negated).
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_len(frame: &ProblemFrame, len: usize, what: &str) -> Result<()> {
    if len != frame.chain_len() {
        return Err(Error::argument(format!(
            "{what} sequence has length {len}, frame expects {}",
            frame.chain_len()
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::argument(format!("{what} entry {v} is not finite")));
    }
    Ok(())
}

/// Outcome of the admissibility decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AdmissibilityCertificate {
    /// The sequence is admissible; `alpha` regenerates it through
    /// [`beta_from_alpha`]. `slack` is the minimum of alpha_m^2 over the
    /// chain (zero exactly on the admissibility boundary).
    Accepted { alpha: AlphaSeq, slack: f64 },
    /// The recursion failed at chain index `fail_index`; `slack` is the
    /// negative radicand at that step.
    Rejected { fail_index: usize, slack: f64 },
}

impl AdmissibilityCertificate {
    pub fn is_accepted(&self) -> bool {
        matches!(self, AdmissibilityCertificate::Accepted { .. })
    }

    pub fn alpha(&self) -> Option<&AlphaSeq> {
        match self {
            AdmissibilityCertificate::Accepted { alpha, .. } => Some(alpha),
            AdmissibilityCertificate::Rejected { .. } => None,
        }
    }

    pub fn slack(&self) -> f64 {
        match self {
            AdmissibilityCertificate::Accepted { slack, .. } => *slack,
            AdmissibilityCertificate::Rejected { slack, .. } => *slack,
        }
    }
}

/// Forward recursion: beta_{k0} = 1/4 - alpha_{k0}^2 and
/// beta_m = (alpha_{m-1} - 1/2)^2 - alpha_m^2 for m > k0.
///
/// Each difference of squares is fused into a single rounding so the
/// recovery in [`alpha_from_beta`] loses as little of a small alpha as the
/// format permits.
pub fn beta_from_alpha(alpha: &AlphaSeq) -> BetaSeq {
    let vals = alpha.values();
    let mut beta = Vec::with_capacity(vals.len());
    // + 0.0 normalizes a negative zero
    beta.push(-vals[0].mul_add(vals[0], -0.25) + 0.0);
    for m in 1..vals.len() {
        let t = vals[m - 1] - 0.5;
        beta.push(t.mul_add(t, -(vals[m] * vals[m])) + 0.0);
    }
    BetaSeq { frame: alpha.frame(), values: beta }
}

/// Deterministic inversion of the recursion, always taking the nonpositive
/// root. Radicands in `[-REJECT_TOL, 0)` count as zero; anything lower
/// rejects at that index.
pub fn alpha_from_beta(beta: &BetaSeq) -> AdmissibilityCertificate {
    let frame = beta.frame();
    let vals = beta.values();
    let mut alpha: Vec<f64> = Vec::with_capacity(vals.len());
    for (off, &b) in vals.iter().enumerate() {
        let radicand = if off == 0 {
            0.25 - b
        } else {
            let t = alpha[off - 1] - 0.5;
            t.mul_add(t, -b)
        };
        if radicand < -REJECT_TOL {
            return AdmissibilityCertificate::Rejected {
                fail_index: frame.k0() + off,
                slack: radicand,
            };
        }
        // + 0.0 normalizes the negative zero of -sqrt(0)
        alpha.push(-radicand.max(0.0).sqrt() + 0.0);
    }
    let slack = alpha.iter().map(|a| a * a).fold(f64::INFINITY, f64::min);
    let alpha = AlphaSeq { frame, values: alpha, context: AlphaContext::Nonpositive };
    AdmissibilityCertificate::Accepted { alpha, slack }
}

/// gamma_{k0} = alpha_{k0} + 1/2 and gamma_m = alpha_m - alpha_{m-1} + 1/2.
/// These are the ground-state exponents of the chain.
pub fn gamma_from_alpha(alpha: &AlphaSeq) -> GammaSeq {
    let vals = alpha.values();
    let mut gamma = Vec::with_capacity(vals.len());
    gamma.push(vals[0] + 0.5);
    for m in 1..vals.len() {
        gamma.push(vals[m] - vals[m - 1] + 0.5);
    }
    GammaSeq { frame: alpha.frame(), values: gamma }
}

/// Named coefficient choices realizing the classical sharp constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CanonicalVariant {
    /// ((k-2)/2)^2 at index k, then 1/4 at every later index.
    SharpAtK,
    /// ((k-2)/2)^2 at index k and ((n-k)/2)^2 at index n, zeros between.
    SharpPair,
    /// Maximal decay: every beta equals zero.
    MaximalDecay,
}

/// The alpha sequences used to realize the canonical constants. Interior
/// chains only (`k0 = 3`).
pub fn canonical_alpha(frame: ProblemFrame, k: usize, variant: CanonicalVariant) -> Result<AlphaSeq> {
    if frame.k0() != 3 {
        return Err(Error::argument("canonical sequences are defined for interior chains (k0 = 3)"));
    }
    let n = frame.n();
    if k < 3 || k > n {
        return Err(Error::argument(format!("index k = {k} outside [3, {n}]")));
    }
    let decay = |m: usize| -((m as f64) - 2.0) / 2.0;
    let values: Vec<f64> = match variant {
        CanonicalVariant::SharpAtK => frame
            .chain()
            .map(|m| if m < k { decay(m) } else { 0.0 })
            .collect(),
        CanonicalVariant::SharpPair => frame
            .chain()
            .map(|m| {
                if m < k {
                    decay(m)
                } else if m == k || m == n {
                    0.0
                } else {
                    // m = k + l with 1 <= l <= n - k - 1
                    -((m - k) as f64) / 2.0
                }
            })
            .collect(),
        CanonicalVariant::MaximalDecay => frame.chain().map(decay).collect(),
    };
    AlphaSeq::nonpositive(frame, values)
}
