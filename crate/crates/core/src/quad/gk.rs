//! 21-point Gauss-Kronrod kernel and a deterministic adaptive driver for
//! one-dimensional segments. The driver integrates a main component and a
//! passenger component (used to propagate inner-quadrature error estimates
//! through nested integrals) with the same nodes.

/// Kronrod abscissae for the 10-21 pair (positive half, descending).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// 10-point Gauss weights.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// 21-point Kronrod weights.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct PanelResult {
    pub value: f64,
    pub passenger: f64,
    pub error: f64,
}

/// One 21-point panel over [a, b]; returns (value, passenger, error estimate).
fn qk21<F: FnMut(f64) -> (f64, f64)>(f: &mut F, a: f64, b: f64) -> PanelResult {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let (fc, pc) = f(center);
    let mut kron = fc * WGK[10];
    let mut pass = pc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kron.abs();
    let mut fv = [0.0f64; 21];
    fv[10] = fc;

    for j in 0..10 {
        let x = half * XGK[j];
        let (f1, p1) = f(center - x);
        let (f2, p2) = f(center + x);
        fv[j] = f1;
        fv[20 - j] = f2;
        kron += WGK[j] * (f1 + f2);
        pass += WGK[j] * (p1 + p2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = kron * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[20 - j] - mean).abs());
    }

    let raw_err = ((kron - gauss) * half).abs();
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK error rescaling
    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    PanelResult { value: kron * half, passenger: pass * half, error: err }
}

pub(crate) struct AdaptiveOutcome {
    pub value: f64,
    pub passenger: f64,
    pub error: f64,
}

/// Adaptive bisection over [a, b] until the summed panel errors fall below
/// `max(abs_tol, rel_tol * |value|)` or the interval budget runs out.
/// Deterministic: the worst panel (ties broken by position) is always split
/// first.
pub(crate) fn adaptive<F: FnMut(f64) -> (f64, f64)>(
    f: &mut F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> AdaptiveOutcome {
    struct Panel {
        a: f64,
        b: f64,
        res: PanelResult,
    }

    if a == b {
        return AdaptiveOutcome { value: 0.0, passenger: 0.0, error: 0.0 };
    }

    let mut panels = vec![Panel { a, b, res: qk21(f, a, b) }];

    loop {
        let value: f64 = panels.iter().map(|p| p.res.value).sum();
        let error: f64 = panels.iter().map(|p| p.res.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target || panels.len() >= max_panels {
            let passenger = panels.iter().map(|p| p.res.passenger).sum();
            return AdaptiveOutcome { value, passenger, error };
        }
        // split the panel with the largest error; index scan keeps the
        // order deterministic
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            if p.res.error > panels[worst].res.error {
                worst = i;
            }
        }
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval exhausted at machine precision
            let passenger = panels.iter().map(|p| p.res.passenger).sum();
            return AdaptiveOutcome { value, passenger, error };
        }
        let left = qk21(f, pa, mid);
        let right = qk21(f, mid, pb);
        panels[worst] = Panel { a: pa, b: mid, res: left };
        panels.push(Panel { a: mid, b: pb, res: right });
    }
}
