//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub epsabs: f64,
    pub epsrel: f64,
    pub max_intervals: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        Self { epsabs: 0.0, epsrel: 1e-10, max_intervals: 4000 }
    }
}

impl QuadOpts {
    pub fn rel(epsrel: f64) -> Self {
        Self { epsrel, ..Self::default() }
    }
    pub fn abs_rel(epsabs: f64, epsrel: f64) -> Self {
        Self { epsabs, epsrel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Clone, Copy)]
struct Seg {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Seg {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let val = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Seg { a, b, val, err }
}

/// Integrate `f` over `[a, b]`, splitting at every supplied breakpoint.
pub fn integrate_points<F: Fn(f64) -> f64>(f: F, pts: &[f64], opts: QuadOpts) -> Result<QuadResult> {
    let mut segs: Vec<Seg> = Vec::new();
    for w in pts.windows(2) {
        if w[1] != w[0] {
            segs.push(gk15(&f, w[0], w[1]));
        }
    }
    let mut evals = 15 * segs.len();
    if segs.is_empty() {
        return Ok(QuadResult { value: 0.0, error: 0.0, evals: 0 });
    }
    loop {
        let total: f64 = segs.iter().map(|s| s.val).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let tol = opts.epsabs.max(opts.epsrel * total.abs());
        if !total.is_finite() {
            return Err(Error::Quadrature { what: "non-finite integrand".into(), err });
        }
        if err <= tol {
            return Ok(QuadResult { value: total, error: err, evals });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Quadrature { what: "interval budget exhausted".into(), err });
        }
        let (k, _) = segs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.err > acc.1 { (i, s.err) } else { acc });
        let s = segs.swap_remove(k);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a.min(s.b) || m >= s.a.max(s.b) {
            return Err(Error::Quadrature { what: "interval collapsed".into(), err });
        }
        segs.push(gk15(&f, s.a, m));
        segs.push(gk15(&f, m, s.b));
        evals += 30;
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOpts) -> Result<QuadResult> {
    integrate_points(f, &[a, b], opts)
}

/// Integral over `[a, ∞)` via the map `x = a + (1 - u)/u`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOpts) -> Result<QuadResult> {
    let g = |u: f64| {
        let x = a + (1.0 - u) / u;
        f(x) / (u * u)
    };
    integrate(g, 0.0, 1.0, opts)
}

/// Value-only convenience wrapper.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOpts) -> Result<f64> {
    integrate(f, a, b, opts).map(|r| r.value)
}
