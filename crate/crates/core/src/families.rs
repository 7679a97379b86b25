//! Extremal test families and their Rayleigh / Sobolev quotients.
//!
//! The families are products of radial factors: powers of the chained
//! subspace distances, logarithmic cutoffs h_k that vanish below 1/k^2 and
//! plateau above 1/k, and a fixed bump supported in |x| <= 1. Their
//! quotients approach the sharp Hardy constants from above as the cutoff
//! levels grow, and the borderline family with a small exponent shift
//! epsilon drives the weighted Sobolev quotient to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::SobolevSpec;
use crate::frame::ProblemFrame;
use crate::params::{beta_from_alpha, gamma_from_alpha, AlphaContext, AlphaSeq, BetaSeq};
use crate::quad::{integrate_chain, ChainIntegrand, QuadratureResult, ReducedChain};
use crate::special::{sphere_area, sphere_moment};
use crate::WeightKind;

/// Fixed first-cutoff level used by the two-parameter sweeps: the outer
/// cutoff is sent to its limit first by freezing it at a large value.
pub const STEPQ_K3: f64 = 1e8;

/// A logarithmic cutoff level: h is 0 below 1/k^2, 1 above 1/k, and
/// 1 + ln(k r)/ln k in between. `k = f64::INFINITY` denotes the pointwise
/// limit h == 1 (used when the sharp cutoff has been sent to infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    /// Chain index the cutoff acts on (through r_j = |X_j|).
    pub j: usize,
    /// Level k > 1.
    pub k: f64,
}

impl CutoffSpec {
    pub fn new(j: usize, k: f64) -> Result<Self> {
        if !(k > 1.0) {
            return Err(Error::argument(format!("cutoff level must exceed 1, got {k}")));
        }
        Ok(CutoffSpec { j, k })
    }

    fn band_lo(&self) -> f64 {
        if self.k.is_infinite() { 0.0 } else { 1.0 / (self.k * self.k) }
    }

    fn band_hi(&self) -> f64 {
        if self.k.is_infinite() { 0.0 } else { 1.0 / self.k }
    }
}

/// h_k(r): 0 for r < 1/k^2, then 1 + ln(k r)/ln k, then 1 for r >= 1/k.
pub fn cutoff_h(spec: &CutoffSpec, r: f64) -> f64 {
    if spec.k.is_infinite() {
        return if r > 0.0 { 1.0 } else { 0.0 };
    }
    let lo = spec.band_lo();
    let hi = spec.band_hi();
    if r <= lo {
        0.0
    } else if r >= hi {
        1.0
    } else {
        1.0 + (spec.k * r).ln() / spec.k.ln()
    }
}

/// Weak derivative of h_k: 1/(r ln k) on the middle band, zero elsewhere.
pub fn cutoff_h_deriv(spec: &CutoffSpec, r: f64) -> f64 {
    if spec.k.is_infinite() {
        return 0.0;
    }
    if r >= spec.band_lo() && r < spec.band_hi() {
        1.0 / (r * spec.k.ln())
    } else {
        0.0
    }
}

/// Radially symmetric bump: 1 on [0, 1/2], 0 on [1, inf), monotone between.
///
/// The transition is linear in v = ln(2r)/ln 2 with quintic-smoothstep
/// shoulders of half-width `shoulder`, which keeps the gradient energy
/// integral of r phi'^2 close to its 1/ln 2 minimum; the shoulders make phi
/// C^2 with the derivative vanishing at both plateau edges.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BumpProfile {
    shoulder: f64,
    derivative_bound: f64,
}

fn quintic(s: f64) -> f64 {
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Integral of the quintic smoothstep from 0 to s.
fn quintic_int(s: f64) -> f64 {
    s * s * s * s * (2.5 - 3.0 * s + s * s)
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile::new(0.08)
    }
}

impl BumpProfile {
    pub fn new(shoulder: f64) -> Self {
        assert!(shoulder > 0.0 && shoulder < 0.5);
        // the ramp peaks at 1/(1 - shoulder) in v; |phi'| <= peak/(r ln 2)
        let derivative_bound = 1.0 / ((1.0 - shoulder) * 0.5 * std::f64::consts::LN_2);
        BumpProfile { shoulder, derivative_bound }
    }

    /// Ramp weight in the log variable v: 0 at the edges, 1 in the interior.
    fn ramp(&self, v: f64) -> f64 {
        let d = self.shoulder;
        if v <= 0.0 || v >= 1.0 {
            0.0
        } else if v < d {
            quintic(v / d)
        } else if v > 1.0 - d {
            quintic((1.0 - v) / d)
        } else {
            1.0
        }
    }

    /// Integral of the ramp from 0 to v, normalized by the total mass.
    fn ramp_cdf(&self, v: f64) -> f64 {
        let d = self.shoulder;
        let mass = 1.0 - d;
        let raw = if v <= 0.0 {
            0.0
        } else if v < d {
            d * quintic_int(v / d)
        } else if v <= 1.0 - d {
            0.5 * d + (v - d)
        } else if v < 1.0 {
            mass - d * quintic_int((1.0 - v) / d)
        } else {
            mass
        };
        raw / mass
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.5 {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            let v = (2.0 * r).ln() / std::f64::consts::LN_2;
            1.0 - self.ramp_cdf(v)
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        if r <= 0.5 || r >= 1.0 {
            0.0
        } else {
            let v = (2.0 * r).ln() / std::f64::consts::LN_2;
            -self.ramp(v) / ((1.0 - self.shoulder) * r * std::f64::consts::LN_2)
        }
    }

    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }

    /// Radii at which the profile changes analytic piece.
    fn breakpoints(&self) -> Vec<f64> {
        let d = self.shoulder;
        vec![0.5, 0.5 * (2f64).powf(d), (2f64).powf(-d), 1.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// |X_3|^{-1/2} h_{k3} phi: drives the first-step quotient to 1/4.
    Step3,
    /// The two-cutoff family of step q: ground-state powers up to q-1, then
    /// |X_q|^{alpha_{q-1} - 1/2} h_{k3} h_{kq} phi.
    StepQ,
    /// Borderline family |X_n|^{-gamma_n + eps} h_{k3} phi carrying the
    /// ground-state prefactor of the indices below n.
    Failure,
}

/// A fully specified test function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub kind: FamilyKind,
    pub frame: ProblemFrame,
    pub alpha: AlphaSeq,
    pub cutoffs: Vec<CutoffSpec>,
    pub epsilon: Option<f64>,
    pub q: Option<usize>,
}

impl FamilyDescriptor {
    pub fn step3(frame: ProblemFrame, alpha: AlphaSeq, k3: f64) -> Result<Self> {
        let d = FamilyDescriptor {
            kind: FamilyKind::Step3,
            frame,
            alpha,
            cutoffs: vec![CutoffSpec::new(3, k3)?],
            epsilon: None,
            q: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn stepq(frame: ProblemFrame, alpha: AlphaSeq, q: usize, k3: f64, kq: f64) -> Result<Self> {
        let d = FamilyDescriptor {
            kind: FamilyKind::StepQ,
            frame,
            alpha,
            cutoffs: vec![CutoffSpec::new(3, k3)?, CutoffSpec::new(q, kq)?],
            epsilon: None,
            q: Some(q),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn failure(frame: ProblemFrame, alpha: AlphaSeq, k3: f64, epsilon: f64) -> Result<Self> {
        let d = FamilyDescriptor {
            kind: FamilyKind::Failure,
            frame,
            alpha,
            cutoffs: vec![CutoffSpec::new(3, k3)?],
            epsilon: Some(epsilon),
            q: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame.k0() != 3 {
            return Err(Error::argument("test families require an interior chain (k0 = 3)"));
        }
        if self.alpha.frame() != self.frame {
            return Err(Error::argument("alpha frame mismatch"));
        }
        if self.alpha.context() != AlphaContext::Nonpositive {
            return Err(Error::argument("test families require nonpositive alpha"));
        }
        match self.kind {
            FamilyKind::Step3 => {
                if self.cutoffs.len() != 1 || self.cutoffs[0].j != 3 {
                    return Err(Error::argument("step3 takes exactly one cutoff at j = 3"));
                }
            }
            FamilyKind::StepQ => {
                let q = self.q.ok_or_else(|| Error::argument("stepq needs q"))?;
                if q < 4 || q > self.frame.n() {
                    return Err(Error::argument(format!(
                        "stepq index q = {q} outside [4, {}]",
                        self.frame.n()
                    )));
                }
                if self.cutoffs.len() != 2 || self.cutoffs[0].j != 3 || self.cutoffs[1].j != q {
                    return Err(Error::argument("stepq takes cutoffs at j = 3 and j = q"));
                }
            }
            FamilyKind::Failure => {
                if self.cutoffs.len() != 1 || self.cutoffs[0].j != 3 {
                    return Err(Error::argument("failure takes exactly one cutoff at j = 3"));
                }
                let eps = self.epsilon.ok_or_else(|| Error::argument("failure needs epsilon"))?;
                if !(eps > 0.0) {
                    return Err(Error::argument(format!("epsilon must be positive, got {eps}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FactorKind {
    /// r^a
    Power(f64),
    /// h_k(r)
    Cutoff(CutoffSpec),
    /// phi(r)
    Bump,
}

#[derive(Debug, Clone)]
struct Factor {
    idx: usize,
    kind: FactorKind,
}

/// A built family: the pointwise function, its analytic piecewise gradient,
/// its reduced chain, and the singularity structure the quadrature needs.
#[derive(Debug, Clone)]
pub struct FamilyFunction {
    frame: ProblemFrame,
    /// Ground-state prefactor factors first (not differentiated in the
    /// substituted energy), then the active factors.
    factors: Vec<Factor>,
    v_start: usize,
    bump: BumpProfile,
    kind: FamilyKind,
    /// Scalar multiplier; every quotient is invariant under it.
    pub amplitude: f64,
}

pub fn build_family(desc: &FamilyDescriptor) -> Result<FamilyFunction> {
    build_family_with_bump(desc, BumpProfile::default())
}

pub fn build_family_with_bump(
    desc: &FamilyDescriptor,
    bump: BumpProfile,
) -> Result<FamilyFunction> {
    desc.validate()?;
    let frame = desc.frame;
    let n = frame.n();
    let gamma = gamma_from_alpha(&desc.alpha);
    let mut factors: Vec<Factor> = Vec::new();
    let mut v_start = 0;

    match desc.kind {
        FamilyKind::Step3 => {
            factors.push(Factor { idx: 3, kind: FactorKind::Power(-0.5) });
            factors.push(Factor { idx: 3, kind: FactorKind::Cutoff(desc.cutoffs[0]) });
            factors.push(Factor { idx: n, kind: FactorKind::Bump });
        }
        FamilyKind::StepQ => {
            let q = desc.q.unwrap();
            for j in 3..q {
                let g = gamma.at(j)?;
                if g != 0.0 {
                    factors.push(Factor { idx: j, kind: FactorKind::Power(-g) });
                }
            }
            // the ground-state prefactor ends here; the rest is the active
            // part v of the substitution u = prod |X_j|^{-gamma_j} v
            v_start = factors.len();
            let a_prev = desc.alpha.at(q - 1)?;
            factors.push(Factor { idx: q, kind: FactorKind::Power(a_prev - 0.5) });
            if !desc.cutoffs[0].k.is_infinite() {
                factors.push(Factor { idx: 3, kind: FactorKind::Cutoff(desc.cutoffs[0]) });
            }
            factors.push(Factor { idx: q, kind: FactorKind::Cutoff(desc.cutoffs[1]) });
            factors.push(Factor { idx: n, kind: FactorKind::Bump });
        }
        FamilyKind::Failure => {
            for j in 3..n {
                let g = gamma.at(j)?;
                if g != 0.0 {
                    factors.push(Factor { idx: j, kind: FactorKind::Power(-g) });
                }
            }
            v_start = factors.len();
            let eps = desc.epsilon.unwrap();
            factors.push(Factor { idx: n, kind: FactorKind::Power(-gamma.at(n)? + eps) });
            factors.push(Factor { idx: 3, kind: FactorKind::Cutoff(desc.cutoffs[0]) });
            factors.push(Factor { idx: n, kind: FactorKind::Bump });
        }
    }

    Ok(FamilyFunction { frame, factors, v_start, bump, kind: desc.kind, amplitude: 1.0 })
}

impl FamilyFunction {
    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn frame(&self) -> ProblemFrame {
        self.frame
    }

    /// Chain of radius indices the function depends on, increasing.
    pub fn chain_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.factors.iter().map(|f| f.idx).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    pub fn chain(&self) -> Result<ReducedChain> {
        ReducedChain::new(self.frame.n(), self.chain_indices())
    }

    /// Total power-law exponent carried at radius index `idx`.
    pub fn power_at(&self, idx: usize) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.idx == idx)
            .map(|f| match f.kind {
                FactorKind::Power(a) => a,
                _ => 0.0,
            })
            .sum()
    }

    /// Whether a power factor with nonzero exponent differentiated from
    /// `diff_start` on sits at `idx`.
    fn active_power_at(&self, idx: usize, diff_start: usize) -> bool {
        self.factors[diff_start..]
            .iter()
            .any(|f| f.idx == idx && matches!(f.kind, FactorKind::Power(a) if a != 0.0))
    }

    /// Whether the family's first cutoff has been sent to its limit.
    fn first_cutoff_infinite(&self) -> bool {
        !self.factors.iter().any(
            |f| matches!(f.kind, FactorKind::Cutoff(c) if c.j == 3 && !c.k.is_infinite()),
        )
    }

    /// The recursion coefficients generated by the ground-state prefactor
    /// alone (zero beyond its last index): collecting the closed forms
    /// div F - |F|^2 per index with gamma_j read off the prefactor powers.
    fn prefactor_beta(&self) -> Vec<f64> {
        let frame = self.frame;
        let mut gamma = vec![0.0; frame.chain_len()];
        for f in &self.factors[..self.v_start] {
            if let FactorKind::Power(a) = f.kind {
                gamma[f.idx - frame.k0()] -= a;
            }
        }
        let mut beta = vec![0.0; frame.chain_len()];
        let mut prefix = 0.0;
        for (off, m) in frame.chain().enumerate() {
            let g = gamma[off];
            beta[off] = -g * (2.0 - m as f64 + g + 2.0 * prefix);
            prefix += g;
        }
        beta
    }

    /// Support floor at radius index `idx` coming from cutoffs.
    pub fn support_floor_at(&self, idx: usize) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.idx == idx)
            .map(|f| match f.kind {
                FactorKind::Cutoff(c) => c.band_lo(),
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Piecewise breakpoints at radius index `idx`.
    pub fn breakpoints_at(&self, idx: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for f in &self.factors {
            if f.idx != idx {
                continue;
            }
            match f.kind {
                FactorKind::Cutoff(c) if !c.k.is_infinite() => {
                    out.push(c.band_lo());
                    out.push(c.band_hi());
                }
                FactorKind::Bump => out.extend(self.bump.breakpoints()),
                _ => {}
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn bounded_factor_value(&self, f: &Factor, r: f64) -> f64 {
        match f.kind {
            FactorKind::Power(_) => 1.0, // powers evaluated jointly in log space
            FactorKind::Cutoff(c) => cutoff_h(&c, r),
            FactorKind::Bump => self.bump.value(r),
        }
    }

    /// u at a point given through its chained radii (aligned with
    /// `chain_indices`).
    pub fn value(&self, radii: &[f64]) -> f64 {
        let idx = self.chain_indices();
        let plan = FamilyPlan::new(self, &idx).expect("self-chain plan");
        plan.amp_times_bounded(radii, 0.0)
    }

    /// u together with du/dr_j for each chain index.
    pub fn value_and_partials(&self, radii: &[f64]) -> (f64, Vec<f64>) {
        let idx = self.chain_indices();
        let plan = FamilyPlan::new(self, &idx).expect("self-chain plan");
        let value = plan.amp_times_bounded(radii, 0.0);
        let d = plan.class_derivs(radii, 0.0, 0);
        let partials = (0..idx.len())
            .map(|pos| d.power[pos] + d.cutoff[pos] + d.bump[pos])
            .collect();
        (value, partials)
    }
}

/// Position lookup of a family's factors inside a (super)chain, with the
/// joint log-space power evaluation.
pub(crate) struct FamilyPlan<'a> {
    family: &'a FamilyFunction,
    slots: Vec<usize>,
    len: usize,
}

impl<'a> FamilyPlan<'a> {
    pub(crate) fn new(family: &'a FamilyFunction, chain_indices: &[usize]) -> Result<Self> {
        let mut slots = Vec::with_capacity(family.factors.len());
        for f in &family.factors {
            let pos = chain_indices
                .iter()
                .position(|&m| m == f.idx)
                .ok_or_else(|| Error::argument(format!("chain misses family index {}", f.idx)))?;
            slots.push(pos);
        }
        Ok(FamilyPlan { family, slots, len: chain_indices.len() })
    }

    /// Sum of a ln r over all power factors plus ln |amplitude|.
    fn log_power(&self, radii: &[f64]) -> f64 {
        let mut s = self.family.amplitude.abs().ln();
        for (f, &slot) in self.family.factors.iter().zip(&self.slots) {
            if let FactorKind::Power(a) = f.kind {
                if a != 0.0 {
                    s += a * radii[slot].ln();
                }
            }
        }
        s
    }

    /// Product of the bounded factors, optionally leaving one out.
    fn bounded(&self, radii: &[f64], skip: Option<usize>) -> f64 {
        let mut p = 1.0;
        for (i, (f, &slot)) in self.family.factors.iter().zip(&self.slots).enumerate() {
            if Some(i) == skip {
                continue;
            }
            p *= self.family.bounded_factor_value(f, radii[slot]);
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }

    fn amp_times_bounded(&self, radii: &[f64], log_extra: f64) -> f64 {
        let b = self.bounded(radii, None);
        if b == 0.0 {
            return 0.0;
        }
        (self.log_power(radii) + log_extra).exp() * b * self.family.amplitude.signum()
    }

    /// u^mult-type integrand with extra radius powers, folded with the
    /// measure logarithm.
    pub(crate) fn power_integrand(
        &self,
        radii: &[f64],
        log_measure: f64,
        mult: f64,
        extra: &[(usize, f64)],
    ) -> f64 {
        let b = self.bounded(radii, None);
        if b == 0.0 {
            return 0.0;
        }
        let mut log = mult * self.log_power(radii) + log_measure;
        for &(pos, p) in extra {
            log += p * radii[pos].ln();
        }
        log.exp() * b.powf(mult)
    }

    /// Per-position derivative sums split by factor class, differentiating
    /// factors from `diff_start` on, scaled by e^{log_extra}. The
    /// non-differentiated prefix still multiplies every term.
    fn class_derivs(&self, radii: &[f64], log_extra: f64, diff_start: usize) -> ClassDerivs {
        let mut out = ClassDerivs::new(self.len);
        let lp = self.log_power(radii) + log_extra;
        let sign = self.family.amplitude.signum();

        let mut pow_coeff = vec![0.0; self.len];
        for (i, (f, &slot)) in self.family.factors.iter().zip(&self.slots).enumerate() {
            if i < diff_start {
                continue;
            }
            if let FactorKind::Power(a) = f.kind {
                if a != 0.0 {
                    pow_coeff[slot] += a / radii[slot];
                }
            }
        }
        let bounded_all = self.bounded(radii, None);
        if bounded_all != 0.0 {
            let base = lp.exp() * bounded_all * sign;
            for pos in 0..self.len {
                out.power[pos] = pow_coeff[pos] * base;
            }
        }
        for (i, (f, &slot)) in self.family.factors.iter().zip(&self.slots).enumerate() {
            if i < diff_start {
                continue;
            }
            match f.kind {
                FactorKind::Cutoff(c) => {
                    let dh = cutoff_h_deriv(&c, radii[slot]);
                    if dh != 0.0 {
                        let rest = self.bounded(radii, Some(i));
                        if rest != 0.0 {
                            out.cutoff[slot] += dh * lp.exp() * rest * sign;
                        }
                    }
                }
                FactorKind::Bump => {
                    let dp = self.family.bump.deriv(radii[slot]);
                    if dp != 0.0 {
                        let rest = self.bounded(radii, Some(i));
                        if rest != 0.0 {
                            out.bump[slot] += dp * lp.exp() * rest * sign;
                        }
                    }
                }
                FactorKind::Power(_) => {}
            }
        }
        out
    }

    /// The gradient-square integrand split into its named parts; the
    /// measure is folded symmetrically (each derivative carries half).
    pub(crate) fn energy_parts(
        &self,
        radii: &[f64],
        log_measure: f64,
        diff_start: usize,
    ) -> EnergyParts {
        let d = self.class_derivs(radii, 0.5 * log_measure, diff_start);
        let bil = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for j in 0..self.len {
                if a[j] == 0.0 {
                    continue;
                }
                for i in 0..self.len {
                    if b[i] == 0.0 {
                        continue;
                    }
                    let kappa = if i == j {
                        1.0
                    } else {
                        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                        radii[lo] / radii[hi]
                    };
                    s += a[j] * b[i] * kappa;
                }
            }
            s
        };
        let pow = bil(&d.power, &d.power);
        let cut = bil(&d.cutoff, &d.cutoff);
        let bump = bil(&d.bump, &d.bump);
        let mixed =
            2.0 * (bil(&d.power, &d.cutoff) + bil(&d.power, &d.bump) + bil(&d.cutoff, &d.bump));
        EnergyParts { pow, cut, bump, mixed }
    }
}

struct ClassDerivs {
    power: Vec<f64>,
    cutoff: Vec<f64>,
    bump: Vec<f64>,
}

impl ClassDerivs {
    fn new(len: usize) -> Self {
        ClassDerivs { power: vec![0.0; len], cutoff: vec![0.0; len], bump: vec![0.0; len] }
    }
}

pub(crate) struct EnergyParts {
    pub pow: f64,
    pub cut: f64,
    pub bump: f64,
    pub mixed: f64,
}

impl EnergyParts {
    fn total(&self) -> f64 {
        self.pow + self.cut + self.bump + self.mixed
    }
}

/// One evaluated quotient: labeled numerator terms, the denominator, the
/// value, and per-term quadrature error estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    pub numerator_terms: Vec<(String, f64)>,
    pub denominator: f64,
    pub value: f64,
    pub quadrature_errors: Vec<(String, f64)>,
    pub evaluations: u64,
    pub stochastic: bool,
}

impl QuotientReport {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.numerator_terms.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn total_error(&self) -> f64 {
        self.quadrature_errors.iter().map(|(_, e)| e.abs()).sum()
    }
}

struct IntegralSetup<'a> {
    family: &'a FamilyFunction,
    chain: ReducedChain,
    chain_idx: Vec<usize>,
}

impl<'a> IntegralSetup<'a> {
    fn new(family: &'a FamilyFunction, extra_indices: &[usize]) -> Result<Self> {
        let mut idx = family.chain_indices();
        for &m in extra_indices {
            if !idx.contains(&m) {
                idx.push(m);
            }
        }
        idx.sort_unstable();
        let chain = ReducedChain::new(family.frame.n(), idx.clone())?;
        Ok(IntegralSetup { family, chain, chain_idx: idx })
    }

    fn plan(&self) -> Result<FamilyPlan<'a>> {
        FamilyPlan::new(self.family, &self.chain_idx)
    }

    /// Descriptor arrays for a u^mult-type integrand; an energy integrand
    /// (`energy_diff_start` set) lowers the declared power by 2 wherever a
    /// power factor in the differentiated range sits.
    fn descriptor(
        &self,
        mult: f64,
        extra: &[(usize, f64)],
        energy_diff_start: Option<usize>,
    ) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let q = self.chain_idx.len();
        let mut powers = vec![0.0; q];
        let mut floors = vec![0.0; q];
        let mut breaks = vec![Vec::new(); q];
        for (pos, &m) in self.chain_idx.iter().enumerate() {
            powers[pos] = mult * self.family.power_at(m);
            if let Some(diff_start) = energy_diff_start {
                if self.family.active_power_at(m, diff_start) {
                    powers[pos] -= 2.0;
                }
            }
            floors[pos] = self.family.support_floor_at(m);
            breaks[pos] = self.family.breakpoints_at(m);
        }
        for &(m, p) in extra {
            if let Some(pos) = self.chain_idx.iter().position(|&i| i == m) {
                powers[pos] += p;
            }
        }
        (powers, floors, breaks)
    }

    fn run(
        &self,
        eval: &(dyn Fn(&[f64], f64) -> f64 + Sync),
        mult: f64,
        extra: &[(usize, f64)],
        energy_diff_start: Option<usize>,
        tol: f64,
    ) -> Result<QuadratureResult> {
        let (powers, floors, breaks) = self.descriptor(mult, extra, energy_diff_start);
        let integrand = ChainIntegrand {
            eval,
            sing_powers: powers,
            lower_supports: floors,
            breakpoints: breaks,
            outer_support: 1.0,
        };
        integrate_chain(&self.chain, &integrand, tol)
    }
}

/// Extra power pairs expressed in chain positions for the eval closures.
fn extra_positions(chain_idx: &[usize], extra: &[(usize, f64)]) -> Vec<(usize, f64)> {
    extra
        .iter()
        .filter_map(|&(m, p)| chain_idx.iter().position(|&i| i == m).map(|pos| (pos, p)))
        .collect()
}

/// Integral of u^2 / r_target^2 over R^n.
fn hardy_integral(family: &FamilyFunction, target: usize, tol: f64) -> Result<QuadratureResult> {
    let setup = IntegralSetup::new(family, &[target])?;
    let plan = setup.plan()?;
    let extra = [(target, -2.0)];
    let extra_pos = extra_positions(&setup.chain_idx, &extra);
    let eval = move |radii: &[f64], lm: f64| plan.power_integrand(radii, lm, 2.0, &extra_pos);
    setup.run(&eval, 2.0, &extra, None, tol)
}

/// The energy integral and its labeled decomposition.
fn energy_integrals(
    family: &FamilyFunction,
    diff_start: usize,
    tol: f64,
) -> Result<Vec<(String, QuadratureResult)>> {
    let setup = IntegralSetup::new(family, &[])?;
    let mut out = Vec::new();
    let selectors: [(&str, fn(&EnergyParts) -> f64); 5] = [
        ("energy", |p| p.total()),
        ("energy_profile", |p| p.pow),
        ("energy_cutoff_grad", |p| p.cut),
        ("energy_bump_grad", |p| p.bump),
        ("energy_mixed", |p| p.mixed),
    ];
    for (name, select) in selectors {
        let plan = setup.plan()?;
        let eval = move |radii: &[f64], lm: f64| select(&plan.energy_parts(radii, lm, diff_start));
        let res = setup.run(&eval, 2.0, &[], Some(diff_start), tol)?;
        out.push((name.to_string(), res));
    }
    Ok(out)
}

/// Rayleigh quotient: (energy - beta-weighted Hardy terms away from the
/// target) over the Hardy term at the target index. Termwise finite because
/// the family carries its cutoffs.
pub fn rayleigh_quotient(
    desc: &FamilyDescriptor,
    beta: &BetaSeq,
    target_index: usize,
    tol: f64,
) -> Result<QuotientReport> {
    let family = build_family(desc)?;
    quotient_of_family(&family, beta, target_index, tol)
}

/// As [`rayleigh_quotient`], for an already-built family (e.g. with a
/// nontrivial amplitude).
pub fn quotient_of_family(
    family: &FamilyFunction,
    beta: &BetaSeq,
    target_index: usize,
    tol: f64,
) -> Result<QuotientReport> {
    let frame = family.frame();
    if beta.frame() != frame {
        return Err(Error::argument("beta frame mismatch"));
    }
    frame.offset(target_index)?;

    // With the first cutoff sent to infinity the plain energy integral
    // diverges at the deepest singular set; the ground-state substituted
    // form is termwise finite and identical in value, but it requires the
    // subtracted coefficients to be exactly the ones the prefactor
    // generates (they cancel against the substitution identity).
    let substituted = family.kind() == FamilyKind::StepQ
        && family.first_cutoff_infinite()
        && {
            let pre_beta = family.prefactor_beta();
            frame.chain().enumerate().all(|(off, m)| {
                m == target_index
                    || (beta.values()[off] - pre_beta[off]).abs() <= 1e-10
            })
        };
    let diff_start = if substituted { family.v_start } else { 0 };

    let mut terms = Vec::new();
    let mut errors = Vec::new();
    let mut evals = 0u64;
    let mut stochastic = false;

    for (name, res) in energy_integrals(family, diff_start, tol)? {
        terms.push((name.clone(), res.value));
        errors.push((name, res.abs_error_estimate));
        evals += res.evaluations;
        stochastic |= res.stochastic;
    }
    let energy = terms[0].1;

    let mut hardy_sum = 0.0;
    if !substituted {
        for m in frame.chain() {
            if m == target_index {
                continue;
            }
            let b = beta.at(m)?;
            if b == 0.0 {
                continue;
            }
            let res = hardy_integral(family, m, tol)?;
            terms.push((format!("hardy_{m}"), b * res.value));
            errors.push((format!("hardy_{m}"), b.abs() * res.abs_error_estimate));
            hardy_sum += b * res.value;
            evals += res.evaluations;
            stochastic |= res.stochastic;
        }
    }

    let denom = hardy_integral(family, target_index, tol)?;
    errors.push(("denominator".to_string(), denom.abs_error_estimate));
    evals += denom.evaluations;
    stochastic |= denom.stochastic;

    let value = (energy - hardy_sum) / denom.value;
    Ok(QuotientReport {
        numerator_terms: terms,
        denominator: denom.value,
        value,
        quadrature_errors: errors,
        evaluations: evals,
        stochastic,
    })
}

/// Weighted Sobolev quotient N / D with D = (int weight |u|^Q dx)^{2/Q}.
///
/// The weight |X_2|^p (or |x_1|^p) is not a chained radius: inside the
/// first coordinate block it averages to a sphere moment with a
/// Beta-function closed form times r^p, so it never enlarges the chain.
///
/// Failure-kind families evaluate the numerator in ground-state substituted
/// form (prefactor^2 |grad v|^2 minus the single borderline Hardy term),
/// which is termwise finite even with the first cutoff sent to infinity;
/// for finite cutoffs the two forms agree by the ground-state identity.
pub fn sobolev_quotient(
    desc: &FamilyDescriptor,
    beta: &BetaSeq,
    spec: &SobolevSpec,
    tol: f64,
) -> Result<QuotientReport> {
    let family = build_family(desc)?;
    sobolev_quotient_of_family(&family, beta, spec, tol)
}

/// As [`sobolev_quotient`], for an already-built family.
pub fn sobolev_quotient_of_family(
    family: &FamilyFunction,
    beta: &BetaSeq,
    spec: &SobolevSpec,
    tol: f64,
) -> Result<QuotientReport> {
    let frame = family.frame();
    if beta.frame() != frame {
        return Err(Error::argument("beta frame mismatch"));
    }
    if spec.frame != frame {
        return Err(Error::argument("sobolev spec frame mismatch"));
    }
    let n = frame.n();

    let mut terms = Vec::new();
    let mut errors = Vec::new();
    let mut evals = 0u64;
    let mut stochastic = false;

    let substituted = family.kind() == FamilyKind::Failure;
    let diff_start = if substituted { family.v_start } else { 0 };

    for (name, res) in energy_integrals(family, diff_start, tol)? {
        terms.push((name.clone(), res.value));
        errors.push((name, res.abs_error_estimate));
        evals += res.evaluations;
        stochastic |= res.stochastic;
    }
    let energy = terms[0].1;

    let mut hardy_sum = 0.0;
    let hardy_range: Vec<usize> = if substituted {
        vec![n] // the substitution absorbs every term below the top index
    } else {
        frame.chain().collect()
    };
    for m in hardy_range {
        let b = beta.at(m)?;
        if b == 0.0 {
            continue;
        }
        let res = hardy_integral(family, m, tol)?;
        terms.push((format!("hardy_{m}"), b * res.value));
        errors.push((format!("hardy_{m}"), b.abs() * res.abs_error_estimate));
        hardy_sum += b * res.value;
        evals += res.evaluations;
        stochastic |= res.stochastic;
    }

    // Denominator: sphere moment of the weight over the first block.
    let q_exp = spec.q_exponent;
    let p = spec.maz_power;
    let setup = IntegralSetup::new(family, &[])?;
    let first_index = setup.chain_idx[0];
    let weight_coords = match spec.weight_kind {
        WeightKind::X2 => 2usize,
        WeightKind::X1 => 1usize,
    };
    let moment = sphere_moment(first_index, weight_coords, p).ok_or_else(|| {
        Error::Divergence(format!(
            "weight power {p} is at or below the integrability endpoint: \
             the weight is not locally integrable"
        ))
    })?;
    let angular_ratio = moment / sphere_area(first_index);

    let extra = [(first_index, p)];
    let extra_pos = extra_positions(&setup.chain_idx, &extra);
    let plan = setup.plan()?;
    let eval = move |radii: &[f64], lm: f64| plan.power_integrand(radii, lm, q_exp, &extra_pos);
    let d_int = setup.run(&eval, q_exp, &extra, None, tol)?;
    evals += d_int.evaluations;
    stochastic |= d_int.stochastic;

    let d_weighted = d_int.value * angular_ratio;
    let denominator = d_weighted.powf(2.0 / q_exp);
    errors.push((
        "denominator".to_string(),
        d_int.abs_error_estimate
            * angular_ratio
            * (2.0 / q_exp)
            * d_weighted.powf(2.0 / q_exp - 1.0),
    ));

    let value = (energy - hardy_sum) / denominator;
    Ok(QuotientReport {
        numerator_terms: terms,
        denominator,
        value,
        quadrature_errors: errors,
        evaluations: evals,
        stochastic,
    })
}

/// A fitted sharpness sweep: quotient values over a cutoff grid with the
/// a + b/ln k least-squares fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFit {
    /// Fitted limit a (the empirical sharp constant).
    pub limit: f64,
    /// Fitted 1/ln k coefficient.
    pub slope: f64,
    /// Root-mean-square fit residual.
    pub residual_rms: f64,
    pub points: Vec<SweepPoint>,
    /// Set when propagated quadrature errors exceed the fit residual.
    pub inconclusive: bool,
    /// Relative change of the largest-k quotient when the frozen first
    /// cutoff level is doubled (two-cutoff sweeps only).
    pub k3_sensitivity: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: f64,
    pub value: f64,
    pub error_estimate: f64,
}

/// Least squares for y = a + b x; returns (a, b, rms residual).
fn fit_affine(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - xm) * (y - ym);
        sxx += (x - xm) * (x - xm);
    }
    let b = sxy / sxx;
    let a = ym - b * xm;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - a - b * x;
        ss += r * r;
    }
    (a, b, (ss / n).sqrt())
}

/// Evaluate the Rayleigh quotient over a cutoff grid and fit a + b/ln k.
///
/// `step_index` is 3 for the one-cutoff family or q >= 4 for the two-cutoff
/// family. Two-cutoff sweeps take the first cutoff in its infinite limit
/// (the substituted quotient of the u_{inf, k_q} family); `k3_sensitivity`
/// reports how far the frozen finite level [`STEPQ_K3`] still is from that
/// limit at the largest grid point. The subtracted numerator terms carry
/// the recursion coefficients below the step index and zero elsewhere.
pub fn sharpness_sweep(
    frame: ProblemFrame,
    alpha: &AlphaSeq,
    step_index: usize,
    k_grid: &[f64],
    tol: f64,
) -> Result<SweepFit> {
    if k_grid.len() < 3 {
        return Err(Error::argument("k grid needs at least 3 points"));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::argument("k grid must be increasing"));
    }

    let full_beta = beta_from_alpha(alpha);
    let mut beta_vals = vec![0.0; frame.chain_len()];
    for m in frame.chain() {
        if m < step_index {
            beta_vals[frame.offset(m)?] = full_beta.at(m)?;
        }
    }
    let beta = BetaSeq::new(frame, beta_vals)?;

    let descriptor = |k: f64, k3: f64| -> Result<FamilyDescriptor> {
        if step_index == 3 {
            FamilyDescriptor::step3(frame, alpha.clone(), k)
        } else {
            FamilyDescriptor::stepq(frame, alpha.clone(), step_index, k3, k)
        }
    };

    let mut points = Vec::with_capacity(k_grid.len());
    let mut max_err: f64 = 0.0;
    for &k in k_grid {
        let desc = descriptor(k, f64::INFINITY)?;
        let report = rayleigh_quotient(&desc, &beta, step_index, tol)?;
        let err = report.total_error() / report.denominator.abs().max(f64::MIN_POSITIVE);
        max_err = max_err.max(err);
        points.push(SweepPoint { k, value: report.value, error_estimate: err });
    }

    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.k.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value).collect();
    let (limit, slope, residual_rms) = fit_affine(&xs, &ys);

    let k3_sensitivity = if step_index > 3 {
        let k_top = *k_grid.last().unwrap();
        let frozen =
            rayleigh_quotient(&descriptor(k_top, STEPQ_K3)?, &beta, step_index, tol)?;
        let baseline = points.last().unwrap().value;
        Some(((frozen.value - baseline) / baseline).abs())
    } else {
        None
    };

    Ok(SweepFit {
        limit,
        slope,
        residual_rms,
        inconclusive: max_err > residual_rms.max(1e-9),
        points,
        k3_sensitivity,
    })
}

/// A failure sweep over decreasing epsilon: the Sobolev quotient must fall,
/// the numerator stay bounded, and the denominator grow like eps^{-2/Q}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureSweep {
    pub points: Vec<FailurePoint>,
    /// Least-squares slope of ln D against ln eps (expected -2/Q).
    pub d_exponent: f64,
    /// True when the quotient decreases strictly along the grid.
    pub monotone: bool,
    pub inconclusive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailurePoint {
    pub epsilon: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
    pub error_estimate: f64,
}

/// Sweep the borderline family (alpha_n = 0) over a decreasing epsilon
/// grid. The first cutoff is evaluated in its infinite limit: every
/// integral of the substituted form converges for eps > 0, which is the
/// regime the sweep probes.
pub fn failure_sweep(
    frame: ProblemFrame,
    alpha: &AlphaSeq,
    spec: &SobolevSpec,
    eps_grid: &[f64],
    tol: f64,
) -> Result<FailureSweep> {
    if *alpha.values().last().unwrap() != 0.0 {
        return Err(Error::argument("failure sweep requires alpha_n = 0"));
    }
    if eps_grid.is_empty() || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::argument("epsilon grid must decrease toward 0"));
    }
    let beta = beta_from_alpha(alpha);

    let mut points = Vec::with_capacity(eps_grid.len());
    let mut max_err: f64 = 0.0;
    for &eps in eps_grid {
        let desc = FamilyDescriptor::failure(frame, alpha.clone(), f64::INFINITY, eps)?;
        let report = sobolev_quotient(&desc, &beta, spec, tol)?;
        let numerator = report.value * report.denominator;
        let rel_err = report.total_error() / report.denominator.abs().max(f64::MIN_POSITIVE);
        max_err = max_err.max(rel_err);
        points.push(FailurePoint {
            epsilon: eps,
            numerator,
            denominator: report.denominator,
            quotient: report.value,
            error_estimate: rel_err,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.epsilon.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.denominator.ln()).collect();
    let (_, d_exponent, resid) = fit_affine(&xs, &ys);
    let monotone = points.windows(2).all(|w| w[1].quotient < w[0].quotient);

    Ok(FailureSweep { points, d_exponent, monotone, inconclusive: max_err > resid.max(1e-6) })
}
