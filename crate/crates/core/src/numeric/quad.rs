//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature with a few
//! change-of-variable helpers for the improper and endpoint-singular
//! integrals that show up throughout the crate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

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

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    if !res_k.is_finite() || !fc.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let round_off = 50.0 * f64::EPSILON * res_abs;
    if round_off > err {
        err = round_off;
    }
    Ok((value, err))
}

/// Adaptive quadrature of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("infinite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let (value, error) = kronrod21(&f, a, b)?;
    let mut evals = 21;
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });

    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                a,
                b,
                value: total,
                error: total_err,
                evals,
            });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // interval exhausted at machine precision
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod21(&f, seg.a, mid)?;
        let (v2, e2) = kronrod21(&f, mid, seg.b)?;
        evals += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated update round-off
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error,
        evals,
    })
}

/// `∫_a^∞ f(x) dx` for an integrand decaying like `x^(-decay)` (`decay > 1`).
///
/// Maps `x = a·t^(-1/(decay-1))`, under which the pulled-back integrand is
/// bounded and smooth near `t = 0`.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    decay: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if !(a > 0.0) || !(decay > 1.0) {
        return Err(Error::Domain(format!(
            "tail integral needs a > 0 and decay > 1 (a = {a}, decay = {decay})"
        )));
    }
    let alpha = 1.0 / (decay - 1.0);
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = a * t.powf(-alpha);
        if !x.is_finite() {
            return 0.0;
        }
        f(x) * alpha * x / t
    };
    integrate(g, 0.0, 1.0, opts)
}

/// `∫_a^b f(x) dx` where `f` has an algebraic endpoint singularity at `a`.
///
/// Substitutes `x = a + (b - a)·s^m`; choose `m` so that `(x - a)^β·s^(m-1)`
/// is smooth, e.g. `m = 2` for square-root behaviour.
pub fn integrate_power_left<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    m: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let len = b - a;
    let g = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let x = a + len * s.powf(m);
        f(x) * len * m * s.powf(m - 1.0)
    };
    integrate(g, 0.0, 1.0, opts)
}

/// Like [`integrate_power_left`] with the singular endpoint at `b`.
pub fn integrate_power_right<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    m: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let len = b - a;
    let g = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let x = b - len * s.powf(m);
        f(x) * len * m * s.powf(m - 1.0)
    };
    integrate(g, 0.0, 1.0, opts)
}
