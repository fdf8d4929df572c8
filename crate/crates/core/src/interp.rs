//! Small interpolation and grid helpers shared by the modules.

/// Index `i` with `xs[i] <= x < xs[i+1]`, clamped to a valid interval.
pub fn locate(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    debug_assert!(n >= 2);
    let p = xs.partition_point(|&v| v <= x);
    p.saturating_sub(1).min(n - 2)
}

/// Cubic Hermite value and slope on `[x0, x1]` from endpoint values and slopes.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let d = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (v, d)
}

/// Piecewise cubic Hermite interpolation through samples with known slopes.
pub fn hermite_eval(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> (f64, f64) {
    let i = locate(xs, x);
    hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], ds[i], ds[i + 1], x)
}

/// Four-point Lagrange interpolation centred on the bracketing interval.
pub fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n < 4 {
        let i = locate(xs, x);
        let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] * (1.0 - w) + ys[i + 1] * w;
    }
    let i = locate(xs, x);
    let s = i.saturating_sub(1).min(n - 4);
    let mut acc = 0.0;
    for j in s..s + 4 {
        let mut l = 1.0;
        for k in s..s + 4 {
            if k != j {
                l *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += l * ys[j];
    }
    acc
}

/// Cumulative integral of samples by integrating the local four-point cubic exactly
/// over each interval (two-point Gauss on the interpolant).
pub fn cumulative_cubic(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let g = 0.5 / 3f64.sqrt();
    for i in 0..n - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let m = 0.5 * (a + b);
        let h = b - a;
        let q = if n < 4 {
            0.5 * h * (ys[i] + ys[i + 1])
        } else {
            let s = i.saturating_sub(1).min(n - 4);
            let f = |x: f64| {
                let mut acc = 0.0;
                for j in s..s + 4 {
                    let mut l = 1.0;
                    for k in s..s + 4 {
                        if k != j {
                            l *= (x - xs[k]) / (xs[j] - xs[k]);
                        }
                    }
                    acc += l * ys[j];
                }
                acc
            };
            0.5 * h * (f(m - g * h) + f(m + g * h))
        };
        out[i + 1] = out[i] + q;
    }
    out
}

/// `n` points spaced uniformly in `ln x` over `[a, b]` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Least-squares slope and its standard error.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - my - slope * (x - mx);
        ss += r * r;
    }
    let se = if xs.len() > 2 { (ss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, se)
}
