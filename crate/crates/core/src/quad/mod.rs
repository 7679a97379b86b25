//! Deterministic adaptive quadrature over chained radial coordinates.
//!
//! Integrands that depend on a chain of subspace radii |X_{m_1}|, ...,
//! |X_{m_q}| reduce to an integral over the positive orthant of per-block
//! transverse variables t_i with weight t_i^{d_i - 1} and a product of
//! unit-sphere areas in front. Reduced dimension at most 3 goes through
//! nested adaptive Gauss-Kronrod on log-graded meshes; deeper chains fall
//! back to seeded quasi-Monte Carlo and are flagged stochastic.

mod gk;
mod qmc;

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sphere_area;

/// Deterministic nested quadrature is used up to this reduced dimension.
pub const DETERMINISTIC_DIM_CAP: usize = 3;

const MAX_PANELS_PER_SEGMENT: usize = 120;
const GLOBAL_EVAL_BUDGET: u64 = 200_000_000;

/// A chain of radius indices m_1 < m_2 < ... < m_q <= n that an integrand
/// depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedChain {
    n: usize,
    indices: Vec<usize>,
}

impl ReducedChain {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::argument("chain must contain at least one radius index"));
        }
        let mut prev = 0usize;
        for &m in &indices {
            if m <= prev {
                return Err(Error::argument("chain indices must be strictly increasing"));
            }
            if m > n {
                return Err(Error::argument(format!("chain index {m} exceeds dimension {n}")));
            }
            prev = m;
        }
        Ok(ReducedChain { n, indices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Coordinate-block dimensions (m_1, m_2 - m_1, ..., [n - m_q if > 0]).
    pub fn group_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.indices.len() + 1);
        let mut prev = 0usize;
        for &m in &self.indices {
            dims.push(m - prev);
            prev = m;
        }
        if prev < self.n {
            dims.push(self.n - prev);
        }
        dims
    }

    /// Number of reduced integration variables.
    pub fn reduced_dim(&self) -> usize {
        self.group_dims().len()
    }
}

/// Product of unit-sphere areas and per-variable power weights such that
///
/// ```text
/// int_{R^n} f(r_{m_1}, ..., r_{m_q}) dx
///   = constant * int_orthant f(radii(t)) prod_i t_i^{weights[i]} dt
/// ```
///
/// with r_{m_j} = sqrt(t_1^2 + ... + t_j^2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureDescription {
    pub constant: f64,
    pub block_dims: Vec<usize>,
    /// Power carried by each t_i, equal to `block_dims[i] - 1`.
    pub weights: Vec<f64>,
}

pub fn reduce_measure(chain: &ReducedChain) -> MeasureDescription {
    let dims = chain.group_dims();
    let constant = dims.iter().map(|&d| sphere_area(d)).product();
    let weights = dims.iter().map(|&d| (d - 1) as f64).collect();
    MeasureDescription { constant, block_dims: dims, weights }
}

/// An integrand over the chained radii together with the analytic structure
/// the mesh generator needs: power-law exponents at each radial origin,
/// support floors (below which the integrand vanishes identically, e.g. from
/// logarithmic cutoffs), known breakpoints per radius, and the support bound
/// on the outermost radius.
///
/// `eval(radii, log_measure)` must return f(radii) * exp(log_measure). The
/// engine hands the accumulated logarithm of the reduction measure to the
/// integrand so that power-law products can fold it in log space; near the
/// radial origins the bare f overflows f64 long before the measure-weighted
/// product does.
pub struct ChainIntegrand<'a> {
    pub eval: &'a (dyn Fn(&[f64], f64) -> f64 + Sync),
    /// Power of the integrand as r_{m_j} -> 0, one entry per chain index.
    pub sing_powers: Vec<f64>,
    /// The integrand vanishes identically for r_{m_j} below this value.
    pub lower_supports: Vec<f64>,
    /// Radii at which the integrand has kinks (cutoff band edges, bump
    /// plateau edges), one list per chain index.
    pub breakpoints: Vec<Vec<f64>>,
    /// The integrand vanishes for |x| beyond this radius.
    pub outer_support: f64,
}

impl<'a> ChainIntegrand<'a> {
    /// Smooth integrand with no declared singularities and support bound `r`.
    pub fn smooth(
        eval: &'a (dyn Fn(&[f64], f64) -> f64 + Sync),
        chain: &ReducedChain,
        r: f64,
    ) -> Self {
        let q = chain.indices().len();
        ChainIntegrand {
            eval,
            sing_powers: vec![0.0; q],
            lower_supports: vec![0.0; q],
            breakpoints: vec![Vec::new(); q],
            outer_support: r,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Estimated absolute error: difference against refinement by doubling,
    /// not a rigorous bound.
    pub abs_error_estimate: f64,
    pub evaluations: u64,
    /// True when the quasi-Monte Carlo fallback produced the value.
    pub stochastic: bool,
}

/// Integrate over R^n after symmetry reduction. Deterministic for reduced
/// dimension <= 3; falls back to seeded quasi-Monte Carlo (default seed)
/// above that.
pub fn integrate_chain(
    chain: &ReducedChain,
    integrand: &ChainIntegrand<'_>,
    tol: f64,
) -> Result<QuadratureResult> {
    integrate_chain_seeded(chain, integrand, tol, qmc::DEFAULT_SEED)
}

/// As [`integrate_chain`], with an explicit seed for the stochastic path.
pub fn integrate_chain_seeded(
    chain: &ReducedChain,
    integrand: &ChainIntegrand<'_>,
    tol: f64,
    seed: u64,
) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::argument(format!("tolerance must be positive, got {tol}")));
    }
    let q = chain.indices().len();
    if integrand.sing_powers.len() != q
        || integrand.lower_supports.len() != q
        || integrand.breakpoints.len() != q
    {
        return Err(Error::argument(
            "integrand descriptor arrays must have one entry per chain index",
        ));
    }
    if !(integrand.outer_support > 0.0) {
        return Err(Error::argument("outer support must be positive"));
    }

    let measure = reduce_measure(chain);
    check_integrable(chain, integrand, &measure)?;

    if chain.reduced_dim() > DETERMINISTIC_DIM_CAP {
        return qmc::integrate(chain, integrand, &measure, tol, seed);
    }

    let ctx = NestCtx {
        measure: &measure,
        integrand,
        rel_tol: (tol / 3.0).max(1e-14),
        evals: Cell::new(0),
        budget_hit: Cell::new(false),
    };
    let mut radii = vec![0.0; q];
    let (value, err) = integrate_level(&ctx, 0, 0.0, 0.0, &mut radii);
    let value = value * measure.constant;
    let err = err * measure.constant;
    if ctx.budget_hit.get() {
        return Err(Error::QuadratureBudget {
            value,
            error_estimate: err,
            evaluations: ctx.evals.get(),
        });
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate: err,
        evaluations: ctx.evals.get(),
        stochastic: false,
    })
}

/// Non-integrable corner detection: approaching the corner where the first
/// j radii vanish together, the integrand scales like rho^(sum of powers)
/// against measure rho^(sum of dims - 1); the integral diverges when
/// sum(p_i + d_i) <= 0, unless a support floor cuts the corner off.
fn check_integrable(
    chain: &ReducedChain,
    integrand: &ChainIntegrand<'_>,
    measure: &MeasureDescription,
) -> Result<()> {
    let q = chain.indices().len();
    let mut scale = 0.0;
    for j in 0..q {
        if integrand.lower_supports[j] > 0.0 {
            return Ok(()); // corner excluded from the support
        }
        scale += integrand.sing_powers[j] + measure.block_dims[j] as f64;
        if scale <= 1e-12 {
            return Err(Error::Divergence(format!(
                "power {} at the r_{} corner is not integrable (measure dimension {})",
                integrand.sing_powers[j],
                chain.indices()[j],
                measure.block_dims[j]
            )));
        }
    }
    Ok(())
}

struct NestCtx<'a> {
    measure: &'a MeasureDescription,
    integrand: &'a ChainIntegrand<'a>,
    rel_tol: f64,
    evals: Cell<u64>,
    budget_hit: Cell<bool>,
}

/// Integrate block `level` with the squared radius of all outer blocks equal
/// to `sum_sq` and `log_jac` the accumulated log of the outer measure
/// weights. Returns (value, propagated error estimate) without the measure
/// constant.
fn integrate_level(
    ctx: &NestCtx<'_>,
    level: usize,
    sum_sq: f64,
    log_jac: f64,
    radii: &mut Vec<f64>,
) -> (f64, f64) {
    let dims = &ctx.measure.block_dims;
    let d = dims[level] as f64;
    let q = ctx.integrand.sing_powers.len();
    let is_radius = level < q;

    let hi_sq = ctx.integrand.outer_support * ctx.integrand.outer_support - sum_sq;
    if hi_sq <= 0.0 {
        return (0.0, 0.0);
    }
    let hi = hi_sq.sqrt();

    // Support floor on this block's radius, transformed to the transverse
    // variable given the outer radii.
    let mut t_lo = 0.0;
    if is_radius {
        let ls = ctx.integrand.lower_supports[level];
        if ls > 0.0 {
            let rem = ls * ls - sum_sq;
            if rem > 0.0 {
                t_lo = rem.sqrt();
            }
        }
    }
    if t_lo >= hi {
        return (0.0, 0.0);
    }

    // Breakpoints in the transverse variable. Deeper radii matter too: a
    // kink at r_i = c (i >= this block) crosses this level at t = c when the
    // deeper transverse variables are small, so every declared breakpoint
    // from this radius outward is translated here.
    let mut cuts: Vec<f64> = Vec::new();
    if is_radius {
        for bps in &ctx.integrand.breakpoints[level..] {
            for &bp in bps {
                let rem = bp * bp - sum_sq;
                if rem > 0.0 {
                    let t = rem.sqrt();
                    if t > t_lo * (1.0 + 1e-14) && t < hi * (1.0 - 1e-14) {
                        cuts.push(t);
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    }

    // Local decay rate of integrand * measure as t -> 0 in log coordinates.
    // At the outermost level the declared power is live; deeper levels see
    // positive outer radii, so only the measure dimension remains.
    let rate = if level == 0 && is_radius {
        (ctx.integrand.sing_powers[0] + d).max(1e-3)
    } else {
        d
    };

    // Segment endpoints in log coordinates.
    let mut tail_est = 0.0;
    let u_hi = hi.ln();
    let u_lo = if t_lo > 0.0 {
        t_lo.ln()
    } else {
        let first = cuts.first().copied().unwrap_or(hi);
        let depth = (45.0 / rate).max(12.0);
        (first.ln() - depth).max(-700.0)
    };
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(u_lo);
    for c in &cuts {
        let uc = c.ln();
        if uc > u_lo && uc < u_hi {
            bounds.push(uc);
        }
    }
    bounds.push(u_hi);

    let innermost = level + 1 == dims.len();
    // the integrand in log coordinates carries the jacobian e^{u d} of this
    // level on top of the outer ones
    let mut evaluate = |u: f64| -> (f64, f64) {
        let t = u.exp();
        let lj = log_jac + u * d;
        if is_radius {
            radii[level] = (sum_sq + t * t).sqrt();
        }
        if innermost {
            ctx.evals.set(ctx.evals.get() + 1);
            if ctx.evals.get() > GLOBAL_EVAL_BUDGET {
                ctx.budget_hit.set(true);
            }
            ((ctx.integrand.eval)(radii, lj), 0.0)
        } else {
            integrate_level(ctx, level + 1, sum_sq + t * t, lj, radii)
        }
    };

    let mut total = 0.0;
    let mut err = 0.0;
    for w in bounds.windows(2) {
        if ctx.budget_hit.get() {
            break;
        }
        let out = gk::adaptive(&mut evaluate, w[0], w[1], ctx.rel_tol, 0.0, MAX_PANELS_PER_SEGMENT);
        total += out.value;
        err += out.error + out.passenger.abs();
    }

    // analytic estimate of the truncated head below u_lo: the integrand in
    // log coordinates decays like e^(rate * u), so the remainder is about
    // G(u_lo) / rate
    if t_lo == 0.0 && !ctx.budget_hit.get() {
        let (v, _) = evaluate(u_lo);
        tail_est = v.abs() / rate;
    }

    (total, err + tail_est)
}
