//! Compressed-row symmetric matrices and a Jacobi-preconditioned conjugate
//! gradient solver. Reductions are chunked in fixed order so results are
//! identical regardless of thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 1 << 13;

/// Symmetric sparse matrix in compressed row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Row-by-row builder; rows must be pushed in order with ascending columns.
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        CsrBuilder { n, row_ptr, cols: Vec::with_capacity(nnz_hint), vals: Vec::with_capacity(nnz_hint) }
    }

    pub fn push_entry(&mut self, col: usize, val: f64) {
        self.cols.push(col as u32);
        self.vals.push(val);
    }

    pub fn finish_row(&mut self) {
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.n + 1, "not all rows finished");
        CsrMatrix { n: self.n, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals }
    }
}

impl CsrMatrix {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if *c as usize == i {
                    d[i] = *v;
                }
            }
        }
        d
    }

    /// Adds `delta[i]` to every diagonal entry.
    pub fn add_to_diagonal(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.n);
        for i in 0..self.n {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            for k in lo..hi {
                if self.cols[k] as usize == i {
                    self.vals[k] += delta[i];
                }
            }
        }
    }

    /// y = A x, rows in parallel.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let row_ptr = &self.row_ptr;
        let cols = &self.cols;
        let vals = &self.vals;
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk_id, out)| {
            let base = chunk_id * CHUNK;
            for (k, yi) in out.iter_mut().enumerate() {
                let i = base + k;
                let lo = row_ptr[i];
                let hi = row_ptr[i + 1];
                let mut s = 0.0;
                for idx in lo..hi {
                    s += vals[idx] * x[cols[idx] as usize];
                }
                *yi = s;
            }
        });
    }

    /// Largest absolute asymmetry |a_ij - a_ji|; exact zero for stencil
    /// assemblies. Intended for tests (quadratic scan per row pair avoided
    /// via binary search on the transposed entry).
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                let (jc, jv) = self.row(j);
                let back = match jc.binary_search(&(i as u32)) {
                    Ok(pos) => jv[pos],
                    Err(_) => 0.0,
                };
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }
}

/// Deterministic dot product: fixed-size chunk partials reduced in order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients with the diagonal (Jacobi)
/// preconditioner. Solves A x = b in place for x, starting from the passed
/// initial guess, until ||r||/||b|| <= rel_tol.
pub fn cg_solve(
    a: &CsrMatrix,
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.n_rows();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome { iterations: 0, rel_residual: 0.0, converged: true });
    }

    let mut r = vec![0.0; n];
    a.spmv_into(x, &mut r);
    r.par_chunks_mut(CHUNK).zip(b.par_chunks(CHUNK)).for_each(|(rc, bc)| {
        for (ri, bi) in rc.iter_mut().zip(bc) {
            *ri = bi - *ri;
        }
    });

    let mut z: Vec<f64> = r
        .par_chunks(CHUNK)
        .zip(inv_diag.par_chunks(CHUNK))
        .flat_map_iter(|(rc, dc)| rc.iter().zip(dc).map(|(ri, di)| ri * di).collect::<Vec<_>>())
        .collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];

    for it in 0..max_iter {
        let res = norm2(&r) / b_norm;
        if res <= rel_tol {
            return Ok(CgOutcome { iterations: it, rel_residual: res, converged: true });
        }
        a.spmv_into(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::argument(format!(
                "conjugate gradients hit nonpositive curvature ({pq}); matrix is not positive definite"
            )));
        }
        let alpha = rz / pq;
        x.par_chunks_mut(CHUNK).zip(p.par_chunks(CHUNK)).for_each(|(xc, pc)| {
            for (xi, pi) in xc.iter_mut().zip(pc) {
                *xi += alpha * pi;
            }
        });
        r.par_chunks_mut(CHUNK).zip(q.par_chunks(CHUNK)).for_each(|(rc, qc)| {
            for (ri, qi) in rc.iter_mut().zip(qc) {
                *ri -= alpha * qi;
            }
        });
        z.par_chunks_mut(CHUNK)
            .zip(r.par_chunks(CHUNK).zip(inv_diag.par_chunks(CHUNK)))
            .for_each(|(zc, (rc, dc))| {
                for ((zi, ri), di) in zc.iter_mut().zip(rc).zip(dc) {
                    *zi = ri * di;
                }
            });
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_chunks_mut(CHUNK).zip(z.par_chunks(CHUNK)).for_each(|(pc, zc)| {
            for (pi, zi) in pc.iter_mut().zip(zc) {
                *pi = zi + beta * *pi;
            }
        });
    }

    let res = norm2(&r) / b_norm;
    Ok(CgOutcome { iterations: max_iter, rel_residual: res, converged: res <= rel_tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = CsrBuilder::new(n, 3 * n);
        for i in 0..n {
            if i > 0 {
                b.push_entry(i - 1, -1.0);
            }
            b.push_entry(i, 2.0);
            if i + 1 < n {
                b.push_entry(i + 1, -1.0);
            }
            b.finish_row();
        }
        b.build()
    }

    #[test]
    fn spmv_and_symmetry() {
        let a = laplacian_1d(8);
        assert_eq!(a.max_asymmetry(), 0.0);
        let x = vec![1.0; 8];
        let mut y = vec![0.0; 8];
        a.spmv_into(&x, &mut y);
        assert_eq!(y[0], 1.0);
        assert_eq!(y[3], 0.0);
        assert_eq!(y[7], 1.0);
    }

    #[test]
    fn cg_solves_laplacian() {
        let a = laplacian_1d(64);
        let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
        let b: Vec<f64> = (0..64).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut x = vec![0.0; 64];
        let out = cg_solve(&a, &inv_diag, &b, &mut x, 1e-12, 1000).unwrap();
        assert!(out.converged);
        let mut ax = vec![0.0; 64];
        a.spmv_into(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "max residual {err}");
    }

    #[test]
    fn deterministic_dot() {
        let a: Vec<f64> = (0..100_000).map(|i| ((i * 37) % 101) as f64 * 1e-3).collect();
        let b: Vec<f64> = (0..100_000).map(|i| ((i * 17) % 113) as f64 * 1e-3).collect();
        let d1 = dot(&a, &b);
        let d2 = dot(&a, &b);
        assert_eq!(d1.to_bits(), d2.to_bits());
    }
}
