use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ambient dimension together with the start index of the singularity chain.
///
/// The chain of subspaces S_{k0}, S_{k0+1}, ..., S_n carries one Hardy
/// coefficient per codimension. `k0 = 3` is the interior case; `k0 = 1` is
/// the half-space recursion, supported in the parameter and exponent
/// operations only (no quadrature or grid oracle path).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemFrame {
    n: usize,
    k0: usize,
}

impl ProblemFrame {
    pub fn new(n: usize, k0: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::argument(format!("dimension n must be >= 3, got {n}")));
        }
        if k0 != 1 && k0 != 3 {
            return Err(Error::argument(format!("chain start k0 must be 1 or 3, got {k0}")));
        }
        if k0 > n {
            return Err(Error::argument(format!("chain start k0 = {k0} exceeds n = {n}")));
        }
        Ok(ProblemFrame { n, k0 })
    }

    /// Interior chain S_3, ..., S_n.
    pub fn interior(n: usize) -> Result<Self> {
        ProblemFrame::new(n, 3)
    }

    /// Half-space chain S_1, ..., S_n.
    pub fn half_space(n: usize) -> Result<Self> {
        ProblemFrame::new(n, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    /// Number of coefficients in the chain.
    pub fn chain_len(&self) -> usize {
        self.n - self.k0 + 1
    }

    /// Chain indices k0, k0+1, ..., n.
    pub fn chain(&self) -> impl Iterator<Item = usize> + '_ {
        self.k0..=self.n
    }

    /// Position of chain index `m` inside a chain-ordered slice.
    pub fn offset(&self, m: usize) -> Result<usize> {
        if m < self.k0 || m > self.n {
            return Err(Error::argument(format!(
                "chain index {m} outside [{}, {}]",
                self.k0, self.n
            )));
        }
        Ok(m - self.k0)
    }
}
