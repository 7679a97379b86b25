//! Staggered-grid finite-difference oracle for the Hardy quotients.
//!
//! The Rayleigh quotient over a Dirichlet box is discretized with the
//! standard second-order Laplacian stencil on a tensor grid offset by half
//! a cell, so no node touches a singular subspace. The smallest generalized
//! Rayleigh value of (stiffness, weighted mass) is computed by inverse
//! iteration with conjugate-gradient inner solves. Convergence of the
//! discrete minimum to the sharp constants is logarithmic: callers should
//! assert bracketing and a monotone trend, never tight equality.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::BetaSeq;
use crate::sparse::{cg_solve, dot, norm2, CsrBuilder, CsrMatrix};

/// Tensor grid on [-L, L]^n with nodes at the half-integer offsets
/// -L + (i + 1/2) h; for even cell counts no node coordinate vanishes, so
/// the grid never meets a singular subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub cells_per_axis: usize,
    pub box_half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, cells_per_axis: usize, box_half_width: f64) -> Result<Self> {
        if n != 3 && n != 4 {
            return Err(Error::argument(format!("grid dimension must be 3 or 4, got {n}")));
        }
        if cells_per_axis < 8 {
            return Err(Error::argument(format!(
                "cells_per_axis must be at least 8, got {cells_per_axis}"
            )));
        }
        if cells_per_axis % 2 != 0 {
            return Err(Error::argument(
                "cells_per_axis must be even so the staggered grid avoids the singular sets",
            ));
        }
        if !(box_half_width > 0.0) {
            return Err(Error::argument("box_half_width must be positive"));
        }
        Ok(GridSpec { n, cells_per_axis, box_half_width })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.box_half_width / self.cells_per_axis as f64
    }

    pub fn node_count(&self) -> usize {
        self.cells_per_axis.pow(self.n as u32)
    }

    fn coord(&self, i: usize) -> f64 {
        -self.box_half_width + (i as f64 + 0.5) * self.h()
    }
}

/// Stiffness matrix of the Dirichlet Laplacian, scaled by the cell volume:
/// v^T K v approximates the gradient energy. Walls are imposed exactly on
/// the box boundary through antisymmetric ghost values, which strengthens
/// the diagonal of boundary rows.
pub fn assemble_stiffness(grid: &GridSpec) -> CsrMatrix {
    let n = grid.n;
    let cells = grid.cells_per_axis;
    let h = grid.h();
    let vol = h.powi(n as i32);
    let scale = vol / (h * h);
    let total = grid.node_count();

    let mut strides = [0usize; 4];
    let mut s = 1usize;
    for d in 0..n {
        strides[d] = s;
        s *= cells;
    }

    let mut b = CsrBuilder::new(total, total * (2 * n + 1));
    let mut idx = [0usize; 4];
    for node in 0..total {
        let mut rem = node;
        for d in 0..n {
            idx[d] = rem % cells;
            rem /= cells;
        }
        // entries must be pushed with ascending column index
        let mut diag = 0.0;
        for d in 0..n {
            diag += if idx[d] == 0 || idx[d] + 1 == cells { 3.0 } else { 2.0 };
        }
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * n + 1);
        entries.push((node, diag * scale));
        for d in 0..n {
            if idx[d] > 0 {
                entries.push((node - strides[d], -scale));
            }
            if idx[d] + 1 < cells {
                entries.push((node + strides[d], -scale));
            }
        }
        entries.sort_unstable_by_key(|e| e.0);
        for (c, v) in entries {
            b.push_entry(c, v);
        }
        b.finish_row();
    }
    b.build()
}

/// Diagonal mass with nodal weights vol / |X_m|^2.
pub fn assemble_hardy_mass(grid: &GridSpec, m: usize) -> Result<Vec<f64>> {
    if m < 1 || m > grid.n {
        return Err(Error::argument(format!("mass index {m} outside [1, {}]", grid.n)));
    }
    let cells = grid.cells_per_axis;
    let vol = grid.h().powi(grid.n as i32);
    let total = grid.node_count();
    let mut w = vec![0.0; total];
    for (node, wi) in w.iter_mut().enumerate() {
        let mut rem = node;
        let mut r2 = 0.0;
        for d in 0..grid.n {
            let i = rem % cells;
            rem /= cells;
            if d < m {
                let x = grid.coord(i);
                r2 += x * x;
            }
        }
        debug_assert!(r2 > 0.0, "staggered grid node on a singular set");
        *wi = vol / r2;
    }
    Ok(w)
}

/// Diagonal lumped identity mass (vol per node).
pub fn identity_mass(grid: &GridSpec) -> Vec<f64> {
    vec![grid.h().powi(grid.n as i32); grid.node_count()]
}

/// Stiffness plus the Hardy masses for every chain index with a nonzero
/// coefficient, as consumed by [`shifted_min_rayleigh`].
pub struct AssembledSystem {
    pub stiffness: CsrMatrix,
    pub masses: Vec<(usize, f64, Vec<f64>)>,
}

/// Assemble the stiffness and one weighted mass per nonzero beta entry.
/// Weights are evaluated at the staggered nodes, never on a singular set.
pub fn assemble(grid: &GridSpec, beta: &BetaSeq) -> Result<AssembledSystem> {
    let frame = beta.frame();
    if frame.n() != grid.n {
        return Err(Error::argument("beta frame dimension does not match the grid"));
    }
    let stiffness = assemble_stiffness(grid);
    let mut masses = Vec::new();
    for m in frame.chain() {
        let b = beta.at(m)?;
        if b != 0.0 {
            masses.push((m, b, assemble_hardy_mass(grid, m)?));
        }
    }
    Ok(AssembledSystem { stiffness, masses })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigEstimate {
    pub lambda_min: f64,
    /// ||K v - lambda M v|| / (lambda ||M v||) at the returned iterate.
    pub residual_norm: f64,
    pub iterations: usize,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative eigenresidual target.
    pub tol: f64,
    pub max_iterations: usize,
    /// Terminal relative tolerance of the inner conjugate-gradient solves;
    /// early outer iterations solve only as accurately as the current
    /// eigenresidual warrants.
    pub cg_tol: f64,
    pub cg_max_iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iterations: 600,
            cg_tol: 1e-8,
            cg_max_iterations: 40_000,
            seed: 1,
        }
    }
}

/// Smallest generalized Rayleigh value of (K, M) with M a positive diagonal
/// mass, via inverse iteration on K. Deterministic for a fixed seed.
pub fn min_rayleigh(
    k: &CsrMatrix,
    mass: &[f64],
    grid: GridSpec,
    opts: &SolverOptions,
) -> Result<EigEstimate> {
    let n = k.n_rows();
    if mass.len() != n {
        return Err(Error::argument("mass dimension mismatch"));
    }
    let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize_m(&mut v, mass);

    let mut w = v.clone();
    let mut rhs = vec![0.0; n];
    let mut kv = vec![0.0; n];
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;

    for it in 1..=opts.max_iterations {
        // rhs = M v
        for i in 0..n {
            rhs[i] = mass[i] * v[i];
        }
        // solve K w = M v, warm started from the previous direction; the
        // inner accuracy follows the current eigenresidual down to cg_tol
        let inner_tol = (0.05 * residual).clamp(opts.cg_tol, 1e-2);
        cg_solve(k, &inv_diag, &rhs, &mut w, inner_tol, opts.cg_max_iterations)?;

        // lambda = (w, M v)/(w, M w) since K w ~ M v
        let mut mw = dot_mass(&w, mass, &w);
        let wv = dot_mass(&w, mass, &v);
        if mw <= 0.0 || !mw.is_finite() {
            return Err(Error::argument("mass norm degenerated during iteration"));
        }
        lambda = wv / mw;

        // v = w / ||w||_M
        mw = mw.sqrt();
        for i in 0..n {
            v[i] = w[i] / mw;
            w[i] = v[i]; // warm start for the next solve
        }

        k.spmv_into(&v, &mut kv);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let r = kv[i] - lambda * mass[i] * v[i];
            num += r * r;
            den += (mass[i] * v[i]) * (mass[i] * v[i]);
        }
        residual = num.sqrt() / (lambda.abs().max(f64::MIN_POSITIVE) * den.sqrt());
        if residual <= opts.tol {
            return Ok(EigEstimate { lambda_min: lambda, residual_norm: residual, iterations: it, grid });
        }
    }
    Err(Error::NonConvergence { lambda, residual, iterations: opts.max_iterations })
}

/// Smallest generalized Rayleigh value of (K - sum beta_m M_m, M_target).
/// A power-method probe first checks that the shifted form stays positive
/// semidefinite on this grid; a negative probe is reported as an error
/// carrying the probe value.
pub fn shifted_min_rayleigh(
    system: &AssembledSystem,
    target_mass: &[f64],
    grid: GridSpec,
    opts: &SolverOptions,
) -> Result<EigEstimate> {
    let mut shifted = system.stiffness.clone();
    if !system.masses.is_empty() {
        let n = shifted.n_rows();
        let mut delta = vec![0.0; n];
        for (_, b, mass) in &system.masses {
            for i in 0..n {
                delta[i] -= b * mass[i];
            }
        }
        shifted.add_to_diagonal(&delta);

        let probe = min_eig_probe(&shifted, opts.seed);
        if probe < -1e-8 * gershgorin_radius(&shifted) {
            return Err(Error::IndefiniteForm { probe });
        }
    }
    min_rayleigh(&shifted, target_mass, grid, opts)
}

fn normalize_m(v: &mut [f64], mass: &[f64]) {
    let norm = dot_mass(v, mass, v).sqrt();
    for vi in v.iter_mut() {
        *vi /= norm;
    }
}

fn dot_mass(a: &[f64], mass: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * mass[i] * b[i];
    }
    s
}

fn gershgorin_radius(a: &CsrMatrix) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..a.n_rows() {
        let (_, vals) = a.row(i);
        r = r.max(vals.iter().map(|v| v.abs()).sum());
    }
    r
}

/// Power-method estimate of the smallest eigenvalue of A via the spectrum
/// of R I - A with R an upper bound on ||A||.
fn min_eig_probe(a: &CsrMatrix, seed: u64) -> f64 {
    let n = a.n_rows();
    let r = gershgorin_radius(a);
    let mut rng = StdRng::seed_from_u64(seed ^ 0xabcdef);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scale = norm2(&v);
    v.iter_mut().for_each(|x| *x /= scale);
    let mut av = vec![0.0; n];
    let mut mu = 0.0;
    for _ in 0..60 {
        a.spmv_into(&v, &mut av);
        // y = (R I - A) v
        for i in 0..n {
            av[i] = r * v[i] - av[i];
        }
        mu = dot(&v, &av);
        let norm = norm2(&av);
        if norm == 0.0 {
            break;
        }
        for i in 0..n {
            v[i] = av[i] / norm;
        }
    }
    r - mu
}
