//! Quasi-Monte Carlo fallback for reduced dimensions above the
//! deterministic cap: Halton points on the log-transformed box with a
//! seeded Cranley-Patterson rotation, error estimated empirically from
//! independent shifts.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::quad::{ChainIntegrand, MeasureDescription, QuadratureResult, ReducedChain};

pub(crate) const DEFAULT_SEED: u64 = 0x9e3779b97f4a7c15;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
const POINTS_PER_SHIFT: u64 = 1 << 15;
const SHIFTS: usize = 8;

fn halton(index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

pub(crate) fn integrate(
    chain: &ReducedChain,
    integrand: &ChainIntegrand<'_>,
    measure: &MeasureDescription,
    _tol: f64,
    seed: u64,
) -> Result<QuadratureResult> {
    let dim = chain.reduced_dim();
    if dim > PRIMES.len() {
        return Err(Error::argument(format!(
            "reduced dimension {dim} exceeds the quasi-Monte Carlo limit {}",
            PRIMES.len()
        )));
    }
    let q = chain.indices().len();
    let upper = integrand.outer_support;

    // Power-law importance transform per variable: sampling t = U s^{1/e}
    // with e = d + min(p, 0) absorbs the measure weight and the declared
    // head singularity exactly, leaving a bounded residual integrand:
    //
    //   int_0^U g(t) t^{d-1} dt = (U^d / e) int_0^1 g(U s^{1/e}) s^{d/e - 1} ds.
    let mut exps = vec![0.0f64; dim];
    let mut scales = vec![0.0f64; dim];
    for i in 0..dim {
        let d = measure.block_dims[i] as f64;
        let p = if i < q { integrand.sing_powers[i].min(0.0) } else { 0.0 };
        exps[i] = (d + p).max(0.05);
        scales[i] = upper.powf(d) / exps[i];
    }

    let mut rng = StdRng::seed_from_u64(seed);
    let mut shift_means = Vec::with_capacity(SHIFTS);
    let mut evals = 0u64;
    let mut radii = vec![0.0f64; q];

    for _ in 0..SHIFTS {
        let offsets: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut sum = 0.0;
        for idx in 0..POINTS_PER_SHIFT {
            let mut jac = 0.0;
            let mut sum_sq = 0.0;
            let mut live = true;
            for i in 0..dim {
                let s = (halton(idx + 1, PRIMES[i]) + offsets[i]).fract().max(1e-300);
                let d = measure.block_dims[i] as f64;
                let t = upper * s.powf(1.0 / exps[i]);
                jac += scales[i].ln() + (d / exps[i] - 1.0) * s.ln();
                sum_sq += t * t;
                if sum_sq > upper * upper {
                    live = false;
                    break;
                }
                if i < q {
                    radii[i] = sum_sq.sqrt();
                    if radii[i] < integrand.lower_supports[i] {
                        live = false;
                        break;
                    }
                }
            }
            evals += 1;
            if live {
                sum += (integrand.eval)(&radii, jac);
            }
        }
        shift_means.push(sum / POINTS_PER_SHIFT as f64);
    }

    let mean = shift_means.iter().sum::<f64>() / SHIFTS as f64;
    let var = shift_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (SHIFTS as f64 - 1.0);
    let std_err = (var / SHIFTS as f64).sqrt();

    Ok(QuadratureResult {
        value: mean * measure.constant,
        abs_error_estimate: 2.0 * std_err * measure.constant,
        evaluations: evals,
        stochastic: true,
    })
}
