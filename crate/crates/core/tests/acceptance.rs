//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with --nocapture to see them).
//!
//! Tolerances and grids are pinned here, not configurable.

use std::f64::consts::PI;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use hsm_core::exponents::{critical_q, maz_power, sobolev_constant, sobolev_spec, x1_lower_q, WeightKind};
use hsm_core::families::{failure_sweep, rayleigh_quotient, sharpness_sweep, FamilyDescriptor};
use hsm_core::fields::{dist_subspace, ground_state_residual, Point};
use hsm_core::oracle::{
    assemble_hardy_mass, assemble_stiffness, min_rayleigh, GridSpec, SolverOptions,
};
use hsm_core::params::{
    alpha_from_beta, beta_from_alpha, gamma_from_alpha, AdmissibilityCertificate, AlphaSeq,
    BetaSeq,
};
use hsm_core::quad::{integrate_chain, ChainIntegrand, ReducedChain};
use hsm_core::ProblemFrame;

fn interior(n: usize) -> ProblemFrame {
    ProblemFrame::interior(n).unwrap()
}

/// Criterion 1: 1000 random nonpositive alpha sequences round-trip through
/// the recursion within 1e-12 componentwise in under a second.
#[test]
fn criterion_1_recursion_round_trip() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(3..=10usize);
        let frame = interior(n);
        let vals: Vec<f64> =
            (0..frame.chain_len()).map(|_| -rng.random_range(0.0..3.0f64)).collect();
        let alpha = AlphaSeq::nonpositive(frame, vals.clone()).unwrap();
        let beta = beta_from_alpha(&alpha);
        match alpha_from_beta(&beta) {
            AdmissibilityCertificate::Accepted { alpha: recovered, .. } => {
                for (a, b) in vals.iter().zip(recovered.values()) {
                    worst = worst.max((a - b).abs());
                }
            }
            AdmissibilityCertificate::Rejected { fail_index, slack } => {
                panic!("round trip rejected at {fail_index} (slack {slack})")
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-12, "worst componentwise error {worst:e} exceeds 1e-12");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS: criterion 1 - 1000 round trips, worst componentwise error {worst:.3e}, {elapsed:?}"
    );
}

/// Criterion 2: the admissibility boundary beta_3 = 1/4 is accepted with
/// alpha_3 = 0; exceeding it by 1e-6 rejects at index 3.
#[test]
fn criterion_2_characterization_boundary() {
    let frame = interior(3);
    let at_boundary = BetaSeq::new(frame, vec![0.25]).unwrap();
    match alpha_from_beta(&at_boundary) {
        AdmissibilityCertificate::Accepted { alpha, .. } => {
            assert_eq!(alpha.values(), &[0.0]);
        }
        other => panic!("boundary rejected: {other:?}"),
    }
    let above = BetaSeq::new(frame, vec![0.25 + 1e-6]).unwrap();
    match alpha_from_beta(&above) {
        AdmissibilityCertificate::Rejected { fail_index, slack } => {
            assert_eq!(fail_index, 3);
            assert!(slack < 0.0);
        }
        other => panic!("beta_3 = 1/4 + 1e-6 accepted: {other:?}"),
    }
    println!("PASS: criterion 2 - boundary accepted with alpha_3 = 0, +1e-6 rejected at 3");
}

/// Criterion 3: the finite-difference Laplacian residual of the ground
/// state identity at 100 admissible points in n = 5 stays below 1e-5 with
/// h = 1e-4, and the h = 1e-2 / 1e-4 residual ratio confirms second order
/// within a factor of 3 (in the median; individual points touch the f64
/// rounding floor of the second difference).
#[test]
fn criterion_3_ground_state_identity() {
    let frame = interior(5);
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut ratios = Vec::new();
    let mut count = 0;
    while count < 100 {
        let p = Point::new((0..5).map(|_| rng.random_range(-0.6..0.6f64)).collect());
        if (3..=5).any(|m| dist_subspace(&p, m).unwrap() < 0.1) {
            continue;
        }
        count += 1;
        let vals: Vec<f64> = (0..3).map(|_| -rng.random_range(0.0..1.0f64)).collect();
        let alpha = AlphaSeq::nonpositive(frame, vals).unwrap();
        let gamma = gamma_from_alpha(&alpha);
        let r4 = ground_state_residual(&p, &gamma, 1e-4).unwrap();
        let r2 = ground_state_residual(&p, &gamma, 1e-2).unwrap();
        worst = worst.max(r4);
        if r4 > 0.0 {
            ratios.push(r2 / r4);
        }
    }
    assert!(worst <= 1e-5, "worst residual {worst:e} exceeds 1e-5");
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ratios[ratios.len() / 2];
    assert!(
        median >= 1e4 / 3.0 && median <= 3.0 * 1e4,
        "median order ratio {median} outside [1e4/3, 3e4]"
    );
    println!(
        "PASS: criterion 3 - max residual {worst:.3e} <= 1e-5, median h^2 ratio {median:.0}"
    );
}

/// Criterion 4: the n = 3 first-step sweep over k in {1e2, 1e4, 1e6} is
/// strictly decreasing, fits a + b/ln k with |a - 1/4| <= 0.01 and residual
/// below 10% of b/ln(1e6), in under a minute.
#[test]
fn criterion_4_sharpness_of_one_quarter() {
    let start = Instant::now();
    let frame = interior(3);
    let alpha = AlphaSeq::nonpositive(frame, vec![0.0]).unwrap();
    let sweep = sharpness_sweep(frame, &alpha, 3, &[1e2, 1e4, 1e6], 1e-9).unwrap();
    let elapsed = start.elapsed();

    let values: Vec<f64> = sweep.points.iter().map(|p| p.value).collect();
    assert!(
        values.windows(2).all(|w| w[1] < w[0]),
        "sweep not strictly decreasing: {values:?}"
    );
    let bound = 0.1 * sweep.slope.abs() / 1e6f64.ln();
    assert!(
        sweep.residual_rms < bound,
        "fit residual {:.3e} exceeds 10% of b/ln(1e6) = {bound:.3e}",
        sweep.residual_rms
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");

    // Extrapolating with one more 1/ln k order shows where the curvature
    // bias in the two-parameter fit comes from; printed for diagnosis.
    let quad_limit = {
        let xs: Vec<f64> = sweep.points.iter().map(|p| 1.0 / p.k.ln()).collect();
        let l0 = (xs[1] * xs[2]) / ((xs[0] - xs[1]) * (xs[0] - xs[2]));
        let l1 = (xs[0] * xs[2]) / ((xs[1] - xs[0]) * (xs[1] - xs[2]));
        let l2 = (xs[0] * xs[1]) / ((xs[2] - xs[0]) * (xs[2] - xs[1]));
        l0 * values[0] + l1 * values[1] + l2 * values[2]
    };
    println!(
        "criterion 4 measurements: values {values:?}, a = {:.6}, b = {:.6}, residual {:.3e}, \
         a + b/ln k + c/ln^2 k extrapolation = {quad_limit:.6}",
        sweep.limit, sweep.slope, sweep.residual_rms
    );
    assert!(
        (sweep.limit - 0.25).abs() <= 0.01,
        "fitted limit {:.6} misses 1/4 by {:.4} (> 0.01); the second-order extrapolation \
         gives {quad_limit:.6}",
        sweep.limit,
        (sweep.limit - 0.25).abs()
    );
    println!("PASS: criterion 4 - strictly decreasing, a = {:.6}, {elapsed:?}", sweep.limit);
}

/// Criterion 5: the step-4 sweeps in n = 4 with alpha_3 in {0, -1/2} fit
/// limits within 0.02 of 0.25 and 1.0.
#[test]
fn criterion_5_step4_sharpness() {
    let frame = interior(4);
    let grid = [1e4, 1e6, 1e8];
    for (a3, target) in [(0.0, 0.25), (-0.5, 1.0)] {
        let alpha = AlphaSeq::nonpositive(frame, vec![a3, -0.5]).unwrap();
        let sweep = sharpness_sweep(frame, &alpha, 4, &grid, 1e-9).unwrap();
        assert!(
            (sweep.limit - target).abs() <= 0.02,
            "alpha_3 = {a3}: fitted limit {:.6} misses {target} by {:.4}",
            sweep.limit,
            (sweep.limit - target).abs()
        );
        println!(
            "PASS: criterion 5 - alpha_3 = {a3}: fitted limit {:.6} (target {target}), \
             frozen-k3 sensitivity {:?}",
            sweep.limit, sweep.k3_sensitivity
        );
    }
}

/// Criterion 6: the borderline family in n = 3, Q = 6 has strictly
/// decreasing quotients over eps in {1e-1, 1e-2, 1e-3}, a fitted
/// denominator exponent within 15% of -1/3, and a bounded numerator
/// (max/min < 3).
#[test]
fn criterion_6_failure_at_alpha_n_zero() {
    let frame = interior(3);
    let alpha = AlphaSeq::nonpositive(frame, vec![0.0]).unwrap();
    let spec = sobolev_spec(frame, &alpha, 6.0, WeightKind::X2).unwrap();
    let sweep = failure_sweep(frame, &alpha, &spec, &[1e-1, 1e-2, 1e-3], 1e-9).unwrap();

    assert!(sweep.monotone, "quotients not strictly decreasing");
    let target = -2.0 / 6.0;
    let rel = ((sweep.d_exponent - target) / target).abs();
    assert!(
        rel <= 0.15,
        "fitted D exponent {:.5} is {rel:.3} away from -1/3 (limit 15%)",
        sweep.d_exponent
    );
    let nmax = sweep.points.iter().map(|p| p.numerator).fold(f64::MIN, f64::max);
    let nmin = sweep.points.iter().map(|p| p.numerator).fold(f64::MAX, f64::min);
    assert!(nmax / nmin < 3.0, "numerator spread {:.3} not bounded", nmax / nmin);
    println!(
        "PASS: criterion 6 - quotients {:?} decreasing, D exponent {:.4} ({rel:.1}% off -1/3), \
         N spread {:.3}",
        sweep.points.iter().map(|p| p.quotient).collect::<Vec<_>>(),
        sweep.d_exponent,
        nmax / nmin
    );
}

/// Criterion 7: the grid oracle brackets the Hardy constants: n = 3 at
/// 24/48/96 cells nonincreasing within [0.20, 0.50] ending at or below
/// 0.40; n = 4 (target index 4) nonincreasing toward 1 within [0.95, 1.60];
/// both within the 10-minute budget.
#[test]
fn criterion_7_fd_oracle_bracketing() {
    let start = Instant::now();
    let opts = SolverOptions::default();

    let mut n3 = Vec::new();
    for cells in [24usize, 48, 96] {
        let grid = GridSpec::new(3, cells, 1.0).unwrap();
        let k = assemble_stiffness(&grid);
        let m = assemble_hardy_mass(&grid, 3).unwrap();
        let est = min_rayleigh(&k, &m, grid, &opts).unwrap();
        n3.push(est.lambda_min);
    }
    println!("criterion 7 measurements: n=3 lambda {n3:?}");
    assert!(n3.windows(2).all(|w| w[1] <= w[0] + 1e-9), "n=3 not nonincreasing: {n3:?}");

    let mut n4 = Vec::new();
    for cells in [24usize, 32, 40] {
        let grid = GridSpec::new(4, cells, 1.0).unwrap();
        let k = assemble_stiffness(&grid);
        let m = assemble_hardy_mass(&grid, 4).unwrap();
        let est = min_rayleigh(&k, &m, grid, &opts).unwrap();
        n4.push(est.lambda_min);
    }
    let elapsed = start.elapsed();
    println!("criterion 7 measurements: n=4 lambda {n4:?}, total {elapsed:?}");
    assert!(n4.windows(2).all(|w| w[1] <= w[0] + 1e-9), "n=4 not nonincreasing: {n4:?}");
    assert!(
        n4.iter().all(|l| (0.95..=1.60).contains(l)),
        "n=4 values outside [0.95, 1.60]: {n4:?}"
    );
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");

    assert!(
        n3.iter().all(|l| (0.20..=0.50).contains(l)),
        "n=3 values outside [0.20, 0.50]: {n3:?} (solver dense-validated; discrete minimum \
         converges logarithmically from above)"
    );
    assert!(*n3.last().unwrap() <= 0.40, "n=3 final value {} above 0.40", n3.last().unwrap());
    println!("PASS: criterion 7 - n=3 {n3:?}, n=4 {n4:?}, {elapsed:?}");
}

/// Criterion 8: exponent identities: 2 sigma_2 = 2QB/(Q+2) to 1e-12 across
/// the Q range, the weight power vanishes exactly at the critical exponent,
/// and the x1 weight at its endpoint has power exactly -1 with an invalid
/// verdict naming local integrability.
#[test]
fn criterion_8_exponent_identities() {
    for n in 3..=8usize {
        let frame = interior(n);
        let alpha =
            AlphaSeq::nonpositive(frame, (0..frame.chain_len()).map(|i| -0.1 * (i as f64 + 1.0)).collect())
                .unwrap();
        let crit = critical_q(n);
        for i in 1..=8 {
            let q = 2.0 + (crit - 2.0) * (i as f64) / 8.0;
            let spec = sobolev_spec(frame, &alpha, q, WeightKind::X2).unwrap();
            let lhs = 2.0 * spec.sigma_at(2) - 2.0 * q * spec.b_cap / (q + 2.0);
            assert!(lhs.abs() <= 1e-12, "identity residual {lhs:e} at n={n}, Q={q}");
        }
        assert_eq!(maz_power(n, crit), 0.0, "critical weight power nonzero at n={n}");

        let spec = sobolev_spec(frame, &alpha, x1_lower_q(n), WeightKind::X1).unwrap();
        assert_eq!(spec.maz_power, -1.0, "x1 endpoint power at n={n}");
        assert!(!spec.valid);
        assert!(spec.reason.as_ref().unwrap().contains("not locally integrable"));
    }
    println!("PASS: criterion 8 - exponent identities hold for n = 3..8");
}

/// Criterion 9: S_3 = 3 (pi/2)^{4/3} = 5.4779040895... to 1e-10 relative.
#[test]
fn criterion_9_sobolev_constant() {
    let s3 = sobolev_constant(3).unwrap();
    let closed = 3.0 * (PI / 2.0).powf(4.0 / 3.0);
    let rel = (s3 - closed).abs() / closed;
    assert!(rel <= 1e-10, "S_3 = {s3} vs closed form {closed}: rel {rel:e}");
    assert!(
        (s3 - 5.477_904_089_531_332).abs() / s3 <= 1e-12,
        "S_3 = {s3:.15} does not match the frozen digits"
    );
    println!("PASS: criterion 9 - S_3 = {s3:.12} matches 3(pi/2)^(4/3) to {rel:.2e}");
}

/// Criterion 10: the quadrature engine reproduces Gaussian and power-law
/// closed forms to 1e-8 relative, and the Hardy denominator of the
/// first-step family fits a ln k + b with under 1% relative residual.
#[test]
fn criterion_10_quadrature_oracle() {
    // Gaussian over R^3
    let chain = ReducedChain::new(3, vec![3]).unwrap();
    let f = |r: &[f64], lj: f64| (-r[0] * r[0] + lj).exp();
    let integrand = ChainIntegrand::smooth(&f, &chain, 12.0);
    let got = integrate_chain(&chain, &integrand, 1e-10).unwrap().value;
    let exact = PI.powf(1.5);
    assert!((got - exact).abs() / exact <= 1e-8, "Gaussian {got} vs {exact}");

    // power law with endpoints: int |x|^{-2} over 1/k <= |x| <= 1
    let k = 100.0;
    let g = move |r: &[f64], lj: f64| {
        if r[0] >= 1.0 / k && r[0] <= 1.0 { (lj - 2.0 * r[0].ln()).exp() } else { 0.0 }
    };
    let integrand = ChainIntegrand {
        eval: &g,
        sing_powers: vec![-2.0],
        lower_supports: vec![1.0 / k],
        breakpoints: vec![vec![1.0 / k, 1.0]],
        outer_support: 1.0,
    };
    let got = integrate_chain(&chain, &integrand, 1e-10).unwrap().value;
    let exact = 4.0 * PI * (1.0 - 1.0 / k);
    assert!((got - exact).abs() / exact <= 1e-8, "annulus {got} vs {exact}");

    // ln k growth of the Hardy denominator
    let frame = interior(3);
    let alpha = AlphaSeq::nonpositive(frame, vec![0.0]).unwrap();
    let beta = BetaSeq::zeros(frame);
    let mut denominators = Vec::new();
    let ks = [1e2, 1e4, 1e6];
    for &kv in &ks {
        let desc = FamilyDescriptor::step3(frame, alpha.clone(), kv).unwrap();
        let rep = rayleigh_quotient(&desc, &beta, 3, 1e-10).unwrap();
        denominators.push(rep.denominator);
    }
    // least squares for y = a ln k + b
    let xs: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = denominators.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&denominators).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut rel_resid = 0.0f64;
    for (x, y) in xs.iter().zip(&denominators) {
        rel_resid = rel_resid.max(((y - slope * x - intercept) / y).abs());
    }
    assert!(rel_resid < 0.01, "ln k fit residual {rel_resid:.4} >= 1%");
    println!(
        "PASS: criterion 10 - Gaussian and annulus to 1e-8, denominator ln k fit residual {rel_resid:.2e}"
    );
}
