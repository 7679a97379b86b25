//! Pointwise geometry of the singularity chain: subspace distances, the
//! chained inverse-square potential, the ground state phi = prod |X_m|^{-gamma_m},
//! its logarithmic gradient field F, and a finite-difference residual check
//! of the identity -Delta(phi)/phi = div F - |F|^2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{BetaSeq, GammaSeq};

/// Below this distance from the deepest singular set a point counts as
/// singular; guards against overflow before a meaningful error is raised.
pub const SINGULAR_FLOOR: f64 = 1e-300;

/// A point of R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Frame + coefficients of the chained potential sum beta_m / |X_m|^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    beta: BetaSeq,
}

impl PotentialSpec {
    pub fn new(beta: BetaSeq) -> Self {
        PotentialSpec { beta }
    }

    pub fn beta(&self) -> &BetaSeq {
        &self.beta
    }
}

/// |X_m| = sqrt(x_1^2 + ... + x_m^2), the distance to S_m.
pub fn dist_subspace(p: &Point, m: usize) -> Result<f64> {
    if m < 1 || m > p.dim() {
        return Err(Error::argument(format!(
            "subspace index {m} outside [1, {}]",
            p.dim()
        )));
    }
    Ok(p.coords[..m].iter().map(|x| x * x).sum::<f64>().sqrt())
}

fn check_dim(p: &Point, n: usize) -> Result<()> {
    if p.dim() != n {
        return Err(Error::argument(format!(
            "point has dimension {}, frame expects {n}",
            p.dim()
        )));
    }
    Ok(())
}

/// Distance to S_m, required to clear the singular floor. Terms with a zero
/// coefficient never call this, so points on a shallow singular set remain
/// evaluable when nothing divides by that distance.
fn live_dist(p: &Point, m: usize) -> Result<f64> {
    let d = dist_subspace(p, m)?;
    if d < SINGULAR_FLOOR {
        return Err(Error::SingularPoint { index: m, distance: d });
    }
    Ok(d)
}

/// Sum over the chain of beta_m / |X_m|^2.
pub fn potential_value(p: &Point, spec: &PotentialSpec) -> Result<f64> {
    let frame = spec.beta.frame();
    check_dim(p, frame.n())?;
    let mut sum = 0.0;
    for m in frame.chain() {
        let b = spec.beta.at(m)?;
        if b != 0.0 {
            let d = live_dist(p, m)?;
            sum += b / (d * d);
        }
    }
    Ok(sum)
}

/// phi(p) = prod_m |X_m|^{-gamma_m}; strictly positive where defined.
pub fn ground_state_value(p: &Point, gamma: &GammaSeq) -> Result<f64> {
    let frame = gamma.frame();
    check_dim(p, frame.n())?;
    let mut log_phi = 0.0;
    for m in frame.chain() {
        let g = gamma.at(m)?;
        if g != 0.0 {
            log_phi -= g * live_dist(p, m)?.ln();
        }
    }
    Ok(log_phi.exp())
}

/// F(p) = sum_m gamma_m X_m / |X_m|^2 = -grad(phi)/phi, as an n-vector.
pub fn vector_field_value(p: &Point, gamma: &GammaSeq) -> Result<Point> {
    let frame = gamma.frame();
    check_dim(p, frame.n())?;
    let n = frame.n();
    let mut out = vec![0.0; n];
    for m in frame.chain() {
        let g = gamma.at(m)?;
        if g == 0.0 {
            continue;
        }
        let d = live_dist(p, m)?;
        let scale = g / (d * d);
        for i in 0..m {
            out[i] += scale * p.coords[i];
        }
    }
    Ok(Point::new(out))
}

/// div F - |F|^2 from the closed forms
///
/// ```text
/// div F = sum_m gamma_m (m-2) / |X_m|^2,
/// |F|^2 = sum_m gamma_m^2 / |X_m|^2 + 2 sum_{j<m} gamma_j gamma_m / |X_m|^2,
/// ```
///
/// where the cross term carries the *larger* index in the denominator
/// (X_j . X_m = |X_j|^2 for j < m). Collecting per index reproduces the
/// recursion coefficients, so the result equals `potential_value` with
/// beta = beta_from_alpha(alpha(gamma)) identically.
pub fn div_f_minus_f2(p: &Point, gamma: &GammaSeq) -> Result<f64> {
    let frame = gamma.frame();
    check_dim(p, frame.n())?;
    let mut sum = 0.0;
    let mut prefix = 0.0; // sum of gamma_j for j < m
    for m in frame.chain() {
        let g = gamma.at(m)?;
        if g != 0.0 {
            let d = live_dist(p, m)?;
            sum += g * ((m as f64 - 2.0) - g - 2.0 * prefix) / (d * d);
        }
        prefix += g;
    }
    Ok(sum)
}

/// Relative residual of the ground-state identity under a second-order
/// central-difference Laplacian with step `h`:
///
/// |Delta_h(phi)(p)/phi(p) + div_f_minus_f2(p)| / max(1, |div_f_minus_f2(p)|).
///
/// Requires every chain distance to be at least 10 h so the stencil stays
/// clear of the singular sets.
pub fn ground_state_residual(p: &Point, gamma: &GammaSeq, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::argument(format!("step h must be positive, got {h}")));
    }
    let frame = gamma.frame();
    check_dim(p, frame.n())?;
    for m in frame.chain() {
        if gamma.at(m)? == 0.0 {
            continue;
        }
        let d = dist_subspace(p, m)?;
        if d < 10.0 * h {
            return Err(Error::argument(format!(
                "point is {d:.3e} from S_{m}, needs at least 10 h = {:.3e}",
                10.0 * h
            )));
        }
    }
    let phi0 = ground_state_value(p, gamma)?;
    let n = frame.n();
    let mut lap = 0.0;
    let mut shifted = p.clone();
    for i in 0..n {
        let xi = p.coords[i];
        shifted.coords[i] = xi + h;
        let plus = ground_state_value(&shifted, gamma)?;
        shifted.coords[i] = xi - h;
        let minus = ground_state_value(&shifted, gamma)?;
        shifted.coords[i] = xi;
        lap += plus - 2.0 * phi0 + minus;
    }
    lap /= h * h;
    let analytic = div_f_minus_f2(p, gamma)?;
    Ok((lap / phi0 + analytic).abs() / analytic.abs().max(1.0))
}
