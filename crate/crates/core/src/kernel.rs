//! Duhamel convolution with the 6-D heat kernel for radial sources, and
//! quadrature checks of the two convolution estimates.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::log_grid;
use crate::quad::{integrate, integrate_points, QuadOpts};
use crate::report::{BoundReport, BoundSample};

/// Ĩ(z) = e^{-z}I₂(z)/z², finite at z = 0 (value 1/8).
pub fn bessel_tilde(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z <= 25.0 {
        let q = 0.25 * z * z;
        let mut term = 1.0 / 2.0;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + 2.0));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        0.25 * sum * (-z).exp()
    } else {
        let mu = 16.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            let next = -term * (mu - odd * odd) / (kf * 8.0 * z);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / ((2.0 * std::f64::consts::PI * z).sqrt() * z * z)
    }
}

/// Radially reduced heat kernel: ∫_{R⁶}(4πτ)⁻³e^{-|x-y|²/4τ}f(|y|)dy = ∫₀^∞ K(|x|,ρ,τ)f(ρ)ρ⁵dρ.
pub fn radial_kernel(r: f64, rho: f64, tau: f64) -> f64 {
    let d = r - rho;
    (-d * d / (4.0 * tau)).exp() * bessel_tilde(r * rho / (2.0 * tau)) / (8.0 * tau * tau * tau)
}

/// A radial source f(ρ, s) with known spatial support.
pub trait Source: Sync {
    fn value(&self, rho: f64, s: f64) -> f64;
    /// Support radii at time s; the upper end may be infinite.
    fn support(&self, s: f64) -> (f64, f64);
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceShape {
    /// v(s)ρ^{-b} on l₁(s) ≤ ρ ≤ l₂(s).
    Band,
    /// v(s)ρ^{-b} on ρ ≥ √s.
    Exterior,
}

#[derive(Clone)]
pub struct SourceSpec {
    pub v: ScalarFn,
    pub b: i32,
    pub l1: ScalarFn,
    pub l2: ScalarFn,
    pub t0: f64,
    pub shape: SourceShape,
}

impl SourceSpec {
    pub fn band(v: ScalarFn, b: i32, l1: ScalarFn, l2: ScalarFn, t0: f64) -> Result<Self> {
        if b != 0 && b != 4 {
            return Err(Error::Domain(format!("b must be 0 or 4, got {b}")));
        }
        Ok(Self { v, b, l1, l2, t0, shape: SourceShape::Band })
    }

    pub fn exterior(v: ScalarFn, b: i32, t0: f64) -> Result<Self> {
        if b != 0 && b != 4 {
            return Err(Error::Domain(format!("b must be 0 or 4, got {b}")));
        }
        Ok(Self {
            v,
            b,
            l1: Arc::new(f64::sqrt),
            l2: Arc::new(|_| f64::INFINITY),
            t0,
            shape: SourceShape::Exterior,
        })
    }

    /// Spatially constant v(s).
    pub fn constant(v: ScalarFn, t0: f64) -> Self {
        Self { v, b: 0, l1: Arc::new(|_| 0.0), l2: Arc::new(|_| f64::INFINITY), t0, shape: SourceShape::Band }
    }
}

impl Source for SourceSpec {
    fn value(&self, rho: f64, s: f64) -> f64 {
        let (lo, hi) = self.support(s);
        if rho < lo || rho > hi {
            return 0.0;
        }
        let v = (self.v)(s);
        if self.b == 0 {
            v
        } else {
            v * rho.powi(-self.b)
        }
    }
    fn support(&self, s: f64) -> (f64, f64) {
        ((self.l1)(s), (self.l2)(s))
    }
}

/// Gaussian average ∫K(r,ρ,τ)f(ρ,s)ρ⁵dρ over a ±20√τ window.
pub fn inner_convolution(source: &dyn Source, r: f64, s: f64, tau: f64) -> Result<f64> {
    let w = 20.0 * tau.sqrt();
    let (slo, shi) = source.support(s);
    let lo = (r - w).max(0.0).max(slo);
    let hi = (r + w).min(shi);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mut pts = vec![lo];
    if r > lo && r < hi {
        pts.push(r);
    }
    pts.push(hi);
    let f = |rho: f64| radial_kernel(r, rho, tau) * source.value(rho, s) * rho.powi(5);
    integrate_points(f, &pts, QuadOpts::abs_rel(1e-300, 1e-10))
        .map(|q| q.value)
        .map_err(|e| Error::Quadrature { what: format!("inner kernel integral at r={r}, s={s}: {e}"), err: f64::NAN })
}

/// 𝒯_out[f](x,t) = ∫_{t₀}^t ∫ G(x−y, t−s) f(y,s) dy ds, with s = t − e^{-q}.
pub fn duhamel(source: &dyn Source, x: f64, t: f64, t0: f64) -> Result<f64> {
    if !(t > t0) {
        return Err(Error::Domain(format!("duhamel needs t > t0, got t={t}, t0={t0}")));
    }
    let tau_min = (1e-8 * t).min(0.5 * (t - t0));
    let qa = -(t - t0).ln();
    let qb = -tau_min.ln();
    let failed = std::cell::Cell::new(None);
    let g = |q: f64| {
        let tau = (-q).exp();
        match inner_convolution(source, x, t - tau, tau) {
            Ok(v) => tau * v,
            Err(e) => {
                failed.set(Some(e.to_string()));
                0.0
            }
        }
    };
    let outer = integrate(g, qa, qb, QuadOpts::abs_rel(1e-300, 1e-8)).map_err(|e| Error::Quadrature {
        what: format!("outer time integral at x={x}, t={t}: {e}"),
        err: f64::NAN,
    })?;
    if let Some(msg) = failed.take() {
        return Err(Error::Quadrature { what: msg, err: f64::NAN });
    }
    Ok(outer.value + tau_min * source.value(x, t))
}

fn sup_on(v: &ScalarFn, a: f64, b: f64) -> f64 {
    if b <= a {
        return v(b);
    }
    log_grid(a, b, 65).into_iter().map(|s| v(s)).fold(0.0, f64::max)
}

fn int_on(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    Ok(integrate(f, a, b, QuadOpts::abs_rel(1e-300, 1e-10))?.value)
}

/// Right-hand side of the band estimate (k = 0).
pub fn band_rhs(src: &SourceSpec, x: f64, t: f64) -> Result<f64> {
    let b = src.b;
    let e = (-x * x / (16.0 * t)).exp();
    let early = int_on(|s| (src.v)(s) * (src.l2)(s).powi(6 - b), src.t0, 0.5 * t)?;
    let sup = sup_on(&src.v, src.t0.max(0.5 * t), t);
    let (l1, l2) = ((src.l1)(t), (src.l2)(t));
    let branch = if x > l2 {
        x.powi(-4) * e * l2.powi(6 - b)
    } else if b == 0 {
        l2 * l2
    } else if x <= l1 {
        l1.powi(-2)
    } else {
        x.powi(-2)
    };
    Ok(t.powi(-3) * e * early + sup * branch)
}

/// Right-hand side of the exterior estimate (k = 0).
pub fn exterior_rhs(src: &SourceSpec, x: f64, t: f64) -> Result<f64> {
    let b = src.b as f64;
    let early = int_on(|s| (src.v)(s), src.t0, 0.5 * t)?;
    let sup = sup_on(&src.v, src.t0.max(0.5 * t), t);
    Ok(if x * x <= t {
        t.powf(-0.5 * b) * early + t.powf(1.0 - 0.5 * b) * sup
    } else {
        x.powf(-b) * (early + t * sup)
    })
}

/// Sample radii: `per_branch` points in each regime of the estimate.
pub fn branch_points(src: &SourceSpec, t: f64, per_branch: usize) -> Vec<f64> {
    let sq = t.sqrt();
    let mut xs = Vec::new();
    let mut push_range = |a: f64, b: f64, n: usize| {
        for i in 0..n {
            xs.push(a + (b - a) * (i as f64 + 0.5) / n as f64);
        }
    };
    match src.shape {
        SourceShape::Band => {
            let (l1, l2) = ((src.l1)(t), (src.l2)(t));
            if l1 > 0.0 {
                push_range(0.0, l1, per_branch);
            }
            push_range(l1, l2, per_branch);
            push_range(l2, l2 + 4.0 * sq, per_branch);
        }
        SourceShape::Exterior => {
            push_range(0.0, sq, per_branch);
            push_range(sq, 6.0 * sq, per_branch);
        }
    }
    xs
}

/// LHS by quadrature against the estimate's RHS at every (t, x) sample.
pub fn verify_kernel_lemma(name: &str, src: &SourceSpec, times: &[f64], per_branch: usize) -> Result<BoundReport> {
    let jobs: Vec<(f64, f64)> =
        times.iter().flat_map(|&t| branch_points(src, t, per_branch).into_iter().map(move |x| (t, x))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(t, x)| {
            let lhs = duhamel(src, x, t, src.t0)?;
            let rhs = match src.shape {
                SourceShape::Band => band_rhs(src, x, t)?,
                SourceShape::Exterior => exterior_rhs(src, x, t)?,
            };
            Ok(BoundSample { t, r: x, lhs, rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport::from_samples(name, samples))
}

/// t₀·10^{k/2}, k = 1..=n.
pub fn lemma_times(t0: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t0 * 10f64.powf(k as f64 / 2.0)).collect()
}
