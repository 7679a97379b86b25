//! Derived exponent tables for the weighted Sobolev inequalities and the
//! classical Sobolev constant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::ProblemFrame;
use crate::params::{gamma_from_alpha, AlphaContext, AlphaSeq};
use crate::special::ln_gamma;

/// Which weight multiplies the Sobolev term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    /// |X_2|^{(Q-2)n/2 - Q}, valid for 2 < Q <= 2n/(n-2).
    X2,
    /// |x_1|^{(Q-2)n/2 - Q}, valid for 2(n-1)/(n-2) < Q <= 2n/(n-2).
    X1,
}

/// Largest admissible exponent 2n/(n-2).
pub fn critical_q(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// Lower endpoint 2(n-1)/(n-2) of the |x_1|-weight range; at this exponent
/// the weight power is exactly -1 and the weight stops being locally
/// integrable.
pub fn x1_lower_q(n: usize) -> f64 {
    2.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Exponent table for one (Q, weight, alpha) combination.
///
/// `sigma` holds sigma_1..sigma_n (index l-1); slots below the weight's own
/// index are zero. `c` holds the running sums c_l = sigma_start + ... +
/// sigma_l + l - 1 for l = c_start..n, cross-checked against the closed form
/// (Q+2)/2 (-alpha_l + (Q-2)(n-l)/(2(Q+2))) for l >= 3.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub frame: ProblemFrame,
    pub weight_kind: WeightKind,
    /// The Sobolev exponent Q.
    pub q_exponent: f64,
    /// s = (Q+2)/2 (the power applied to |v| before the L^1 step).
    pub s: f64,
    /// q = Q/s = 2Q/(Q+2), the dual L^1-stage exponent in (1, n/(n-1)].
    pub q_dual: f64,
    /// b = sigma_w - 1 + (q-1)n/q where sigma_w is the weight's own exponent.
    pub b: f64,
    /// B = sigma_w - 1 + (Q-2)n/(2Q); equals `b` when q = 2Q/(Q+2).
    pub b_cap: f64,
    /// sigma_1..sigma_n, index l-1.
    pub sigma: Vec<f64>,
    /// First index l carrying a c_l entry (2 for the X2 weight, 1 for x1).
    pub c_start: usize,
    /// c_l for l = c_start..=n, index l - c_start.
    pub c: Vec<f64>,
    /// Weight power (Q-2)n/2 - Q; zero exactly at the critical exponent.
    pub maz_power: f64,
    pub valid: bool,
    pub reason: Option<String>,
}

impl SobolevSpec {
    pub fn sigma_at(&self, l: usize) -> f64 {
        self.sigma[l - 1]
    }

    pub fn c_at(&self, l: usize) -> f64 {
        self.c[l - self.c_start]
    }
}

/// Closed form for c_l, l >= 3: (Q+2)/2 (-alpha_l + (Q-2)(n-l)/(2(Q+2))).
pub fn c_closed_form(n: usize, q_exponent: f64, alpha_l: f64, l: usize) -> f64 {
    0.5 * (q_exponent + 2.0)
        * (-alpha_l + (q_exponent - 2.0) * ((n - l) as f64) / (2.0 * (q_exponent + 2.0)))
}

/// Weight power (Q-2)n/2 - Q, grouped so that the critical exponent lands on
/// exactly zero in floating point.
pub fn maz_power(n: usize, q_exponent: f64) -> f64 {
    ((n as f64 - 2.0) * q_exponent - 2.0 * n as f64) / 2.0
}

/// Builds the full exponent table. `Q <= 2` is a hard argument error;
/// exponents above the critical one produce an invalid (but well-formed)
/// table, as does `alpha_n = 0`.
pub fn sobolev_spec(
    frame: ProblemFrame,
    alpha: &AlphaSeq,
    q_exponent: f64,
    weight_kind: WeightKind,
) -> Result<SobolevSpec> {
    if alpha.frame() != frame {
        return Err(Error::argument("alpha frame does not match"));
    }
    if frame.k0() != 3 {
        return Err(Error::argument(
            "exponent tables are defined for the interior chain (k0 = 3)",
        ));
    }
    if alpha.context() != AlphaContext::Nonpositive {
        return Err(Error::argument("sobolev_spec requires a nonpositive alpha sequence"));
    }
    if !(q_exponent > 2.0) {
        return Err(Error::argument(format!("Q must exceed 2, got {q_exponent}")));
    }
    let n = frame.n();
    let nf = n as f64;
    let s = 0.5 * (q_exponent + 2.0);
    let q_dual = q_exponent / s;
    let gamma = gamma_from_alpha(alpha);

    // sigma_w = ((Q-2)n - 2Q)/4 sits on the weight's own index; sigma_2 = 0
    // for the x1 weight. Chain exponents: sigma_m = -(Q+2)/2 gamma_m.
    let sigma_w = 0.25 * ((q_exponent - 2.0) * nf - 2.0 * q_exponent);
    let weight_index = match weight_kind {
        WeightKind::X2 => 2,
        WeightKind::X1 => 1,
    };
    let mut sigma = vec![0.0; n];
    sigma[weight_index - 1] = sigma_w;
    for m in frame.chain() {
        if m >= 3 {
            sigma[m - 1] = -s * gamma.at(m)?;
        }
    }

    let b = sigma_w - 1.0 + (q_dual - 1.0) * nf / q_dual;
    let b_cap = sigma_w - 1.0 + (q_exponent - 2.0) * nf / (2.0 * q_exponent);

    let c_start = weight_index;
    let mut c = Vec::with_capacity(n - c_start + 1);
    let mut running = 0.0;
    for l in c_start..=n {
        running += sigma[l - 1];
        c.push(running + (l as f64 - 1.0));
    }

    let mp = maz_power(n, q_exponent);
    let crit = critical_q(n);
    let alpha_n = *alpha.values().last().expect("nonempty chain");

    let (valid, reason) = if q_exponent > crit {
        (false, Some(format!("Q = {q_exponent} exceeds the critical exponent 2n/(n-2) = {crit}")))
    } else if weight_kind == WeightKind::X1 && q_exponent <= x1_lower_q(n) {
        (
            false,
            Some(format!(
                "Q = {q_exponent} is at or below 2(n-1)/(n-2) = {}: weight power {mp} <= -1, \
                 the weight is not locally integrable",
                x1_lower_q(n)
            )),
        )
    } else if alpha_n == 0.0 {
        (false, Some("alpha_n = 0: no positive Sobolev constant exists".to_string()))
    } else {
        (true, None)
    };

    Ok(SobolevSpec {
        frame,
        weight_kind,
        q_exponent,
        s,
        q_dual,
        b,
        b_cap,
        sigma,
        c_start,
        c,
        maz_power: mp,
        valid,
        reason,
    })
}

/// Best constant of the classical Sobolev inequality,
/// S_n = pi n (n-2) (Gamma(n/2)/Gamma(n))^{2/n}, via log-Gamma.
pub fn sobolev_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::argument(format!("Sobolev constant needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    let log_ratio = ln_gamma(0.5 * nf) - ln_gamma(nf);
    Ok(PI * nf * (nf - 2.0) * (2.0 / nf * log_ratio).exp())
}
