//! Dormand–Prince 5(4) with step-size control, plus a refined-grid defect check.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOpts {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14, h0: 1e-3, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct State<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn comb<const N: usize>(y: &[f64; N], h: f64, ks: &[[f64; N]], a: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (k, &c) in ks.iter().zip(a) {
        if c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` (t1 > t0). `on_step` sees every accepted
/// state including the initial one and may return `false` to stop early.
pub fn dopri45<const N: usize, F, G>(f: F, t0: f64, y0: [f64; N], t1: f64, opts: OdeOpts, mut on_step: G) -> Result<State<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: FnMut(&State<N>) -> bool,
{
    let mut st = State { t: t0, y: y0, dy: f(t0, &y0) };
    if !on_step(&st) {
        return Ok(st);
    }
    let mut h = opts.h0.min(t1 - t0).min(opts.h_max);
    let mut steps = 0usize;
    while st.t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::StepFailure { last_t: st.t, what: "step budget exhausted".into() });
        }
        steps += 1;
        let last = t1 - st.t <= h * (1.0 + 1e-12);
        if last {
            h = t1 - st.t;
        }
        let t = st.t;
        let y = st.y;
        let k1 = st.dy;
        let k2 = f(t + C[1] * h, &comb(&y, h, &[k1], &A2));
        let k3 = f(t + C[2] * h, &comb(&y, h, &[k1, k2], &A3));
        let k4 = f(t + C[3] * h, &comb(&y, h, &[k1, k2, k3], &A4));
        let k5 = f(t + C[4] * h, &comb(&y, h, &[k1, k2, k3, k4], &A5));
        let k6 = f(t + h, &comb(&y, h, &[k1, k2, k3, k4, k5], &A6));
        let yn = comb(&y, h, &[k1, k2, k3, k4, k5, k6], &B);
        let k7 = f(t + h, &yn);
        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let mut errsq = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (k, c) in ks.iter().zip(E) {
                e += c * k[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(yn[i].abs());
            errsq += (h * e / sc).powi(2);
        }
        let err = (errsq / N as f64).sqrt();
        if !err.is_finite() || yn.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepFailure { last_t: t, what: "non-finite state".into() });
            }
            continue;
        }
        if err <= 1.0 {
            st = State { t: if last { t1 } else { t + h }, y: yn, dy: k7 };
            if !on_step(&st) {
                return Ok(st);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.h_max);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepFailure { last_t: t, what: "step size underflow".into() });
            }
        }
    }
    Ok(st)
}

/// Classical RK4 re-integration of one interval on `m` equal substeps.
pub fn rk4_reference<const N: usize, F>(f: &F, ta: f64, ya: [f64; N], tb: f64, m: usize) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = (tb - ta) / m as f64;
    let mut y = ya;
    for j in 0..m {
        let t = ta + j as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &comb(&y, h, &[k1], &[0.5]));
        let k3 = f(t + 0.5 * h, &comb(&y, h, &[k2], &[0.5]));
        let k4 = f(t + h, &comb(&y, h, &[k3], &[1.0]));
        y = comb(&y, h, &[k1, k2, k3, k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
    }
    y
}

/// Largest one-interval defect of stored samples `(t_i, y_i)` against a refined RK4
/// re-integration from each left endpoint, componentwise max-norm divided by `scale`.
pub fn max_local_defect<const N: usize, F>(f: &F, ts: &[f64], ys: &[[f64; N]], m: usize, scale: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut worst = 0.0f64;
    for i in 0..ts.len().saturating_sub(1) {
        let yr = rk4_reference(f, ts[i], ys[i], ts[i + 1], m);
        for k in 0..N {
            worst = worst.max((yr[k] - ys[i + 1][k]).abs() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let end = dopri45(f, 0.0, [1.0, 0.0], 10.0, OdeOpts::default(), |_| true).unwrap();
        assert!((end.y[0] - 10f64.cos()).abs() < 1e-8);
        assert_eq!(end.t, 10.0);
    }

    #[test]
    fn early_stop() {
        let f = |_t: f64, _y: &[f64; 1]| [1.0];
        let end = dopri45(f, 0.0, [0.0], 10.0, OdeOpts::default(), |s| s.y[0] < 1.0).unwrap();
        assert!(end.y[0] >= 1.0 && end.t < 10.0);
    }
}
