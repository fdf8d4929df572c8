//! Aubin–Talenti bubble in six dimensions, its scaling kernel, the orthogonality ratio
//! and the positive eigenpair of Δ + 2U.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dopri45, rk4_reference, OdeOpts};
use crate::quad::{integrate, integrate_to_inf, QuadOpts};

pub const PI3: f64 = std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;
/// ‖U‖²_{L²(R⁶)} = 24³π³/6.
pub const U_L2SQ: f64 = 13824.0 * PI3 / 6.0;
/// ‖Z‖²_{L²(R⁶)} = 4·24³π³/15.
pub const Z_L2SQ: f64 = 4.0 * 13824.0 * PI3 / 15.0;
pub const RATIO_LEADING: f64 = 1.25;
pub const RATIO_SECOND: f64 = 45.0 / 16.0;

pub fn bubble_u(y: f64) -> f64 {
    let s = y * y / 24.0;
    1.0 / ((1.0 + s) * (1.0 + s))
}

/// U'(r) = −(r/6)(1 + r²/24)^{-3}.
pub fn bubble_du(y: f64) -> f64 {
    let s = y * y / 24.0;
    -(y / 6.0) / ((1.0 + s) * (1.0 + s) * (1.0 + s))
}

/// Z = 2U + rU' = 2(1 − s)(1 + s)^{-3}, s = r²/24.
pub fn kernel_z(y: f64) -> f64 {
    let s = y * y / 24.0;
    2.0 * (1.0 - s) / ((1.0 + s) * (1.0 + s) * (1.0 + s))
}

/// Z'(r), differentiated from Z = 2(1 − s)(1 + s)^{-3}.
pub fn kernel_dz(y: f64) -> f64 {
    let s = y * y / 24.0;
    let ds = y / 12.0;
    let p = 1.0 + s;
    2.0 * ds * (-(p) - 3.0 * (1.0 - s)) / (p * p * p * p)
}

/// ∫_{r_lo ≤ |y| ≤ r_hi} f(|y|) dy = π³ ∫ f(r) r⁵ dr; `r_hi` may be infinite.
pub fn radial_integral<F: Fn(f64) -> f64>(f: F, r_lo: f64, r_hi: f64, tol: f64) -> Result<f64> {
    if r_hi == r_lo {
        return Ok(0.0);
    }
    let g = |r: f64| f(r) * r.powi(5);
    let opts = QuadOpts::abs_rel(0.0, tol);
    let q = if r_hi.is_infinite() { integrate_to_inf(g, r_lo, opts)? } else { integrate(g, r_lo, r_hi, opts)? };
    Ok(PI3 * q.value)
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RatioExpansion {
    #[serde(rename = "R")]
    pub r_cut: f64,
    pub ratio: f64,
    pub leading: f64,
    pub second: f64,
    pub omega: f64,
}

/// −2∫_{B_{4R}} UZ / ∫_{B_{4R}} Z². The excess over 5/4 is formed from the exterior
/// tails and the exact whole-space constants, which avoids cancellation at large R.
pub fn ortho_ratio(r_cut: f64) -> Result<RatioExpansion> {
    if !(r_cut >= 1.0) {
        return Err(Error::Domain(format!("ortho_ratio needs R >= 1, got {r_cut}")));
    }
    let rho = 4.0 * r_cut;
    let t_uz = radial_integral(|r| bubble_u(r) * kernel_z(r), rho, f64::INFINITY, 1e-13)?;
    let t_zz = radial_integral(|r| kernel_z(r).powi(2), rho, f64::INFINITY, 1e-13)?;
    let excess = (2.0 * t_uz + RATIO_LEADING * t_zz) / (Z_L2SQ - t_zz);
    let r2 = r_cut * r_cut;
    Ok(RatioExpansion {
        r_cut,
        ratio: RATIO_LEADING + excess,
        leading: RATIO_LEADING,
        second: excess * r2,
        omega: excess - RATIO_SECOND / r2,
    })
}

/// The same ratio from the two ball integrals directly.
pub fn ortho_ratio_direct(r_cut: f64) -> Result<f64> {
    let rho = 4.0 * r_cut;
    let uz = radial_integral(|r| bubble_u(r) * kernel_z(r), 0.0, rho, 1e-13)?;
    let zz = radial_integral(|r| kernel_z(r).powi(2), 0.0, rho, 1e-13)?;
    Ok(-2.0 * uz / zz)
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub gamma0: f64,
    pub r: Vec<f64>,
    pub z0: Vec<f64>,
    pub dz0: Vec<f64>,
    pub decay_check: f64,
    /// Radius where the residual growing mode takes over (Z₀' turns positive).
    pub r_resolved: f64,
    pub tol: f64,
}

fn eig_rhs(gamma: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |r, y| [y[1], (gamma - 2.0 * bubble_u(r)) * y[0] - 5.0 * y[1] / r]
}

const EIG_R0: f64 = 1e-3;

fn eig_start(gamma: f64) -> [f64; 2] {
    let c = (gamma - 2.0) / 12.0;
    [1.0 + c * EIG_R0 * EIG_R0, 2.0 * c * EIG_R0]
}

enum Shot {
    Low,
    High,
    Undecided,
}

fn shoot(gamma: f64, r_max: f64, opts: OdeOpts) -> Result<Shot> {
    let mut verdict = Shot::Undecided;
    dopri45(eig_rhs(gamma), EIG_R0, eig_start(gamma), r_max, opts, |s| {
        if s.y[0] < 0.0 {
            verdict = Shot::Low;
            return false;
        }
        if s.y[1] > 0.0 && gamma > 2.0 * bubble_u(s.t) {
            verdict = Shot::High;
            return false;
        }
        true
    })?;
    Ok(verdict)
}

/// Shooting for the unique positive eigenvalue γ₀ of Δ + 2U on radial functions.
pub fn solve_eigenpair(r_max: f64, tol: f64) -> Result<EigenPair> {
    if !(r_max >= 30.0) {
        return Err(Error::Domain(format!("eigenpair needs r_max >= 30, got {r_max}")));
    }
    let opts = OdeOpts { rtol: tol, atol: tol * 1e-6, h0: EIG_R0, ..OdeOpts::default() };
    let (mut lo, mut hi) = (1e-4, 4.0);
    if !matches!(shoot(lo, r_max, opts)?, Shot::Low) || !matches!(shoot(hi, r_max, opts)?, Shot::High) {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        match shoot(m, r_max, opts)? {
            Shot::Low => lo = m,
            Shot::High => hi = m,
            Shot::Undecided => break,
        }
    }
    let gamma0 = hi;
    let mut r = vec![0.0];
    let mut z0 = vec![1.0];
    let mut dz0 = vec![0.0];
    dopri45(eig_rhs(gamma0), EIG_R0, eig_start(gamma0), r_max, opts, |s| {
        r.push(s.t);
        z0.push(s.y[0]);
        dz0.push(s.y[1]);
        true
    })?;
    let turn = (1..r.len()).find(|&i| dz0[i] > 0.0 && gamma0 > 2.0 * bubble_u(r[i])).unwrap_or(r.len() - 1);
    let k = gamma0.sqrt() / 2.0;
    let decay_check = r[..=turn].iter().zip(&z0).map(|(&x, &z)| z.abs() * (k * x).exp()).fold(0.0, f64::max);
    Ok(EigenPair { gamma0, r_resolved: r[turn], r, z0, dz0, decay_check, tol })
}

impl EigenPair {
    /// Largest refined-grid one-step defect of the stored (Z₀, Z₀') samples, measured
    /// against max(1, |Z₀|) so the growing tail beyond `r_resolved` is judged relatively.
    pub fn ode_defect(&self) -> f64 {
        let f = eig_rhs(self.gamma0);
        let mut worst = 0.0f64;
        for i in 1..self.r.len() - 1 {
            let ya = [self.z0[i], self.dz0[i]];
            let yr = rk4_reference(&f, self.r[i], ya, self.r[i + 1], 16);
            let sc = self.z0[i + 1].abs().max(1.0);
            worst = worst.max((yr[0] - self.z0[i + 1]).abs() / sc).max((yr[1] - self.dz0[i + 1]).abs() / sc);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_derivative_matches_difference() {
        for &y in &[0.3, 2.0, 7.5, 30.0] {
            let h = 1e-5 * y;
            let fd = (kernel_z(y + h) - kernel_z(y - h)) / (2.0 * h);
            assert!((fd - kernel_dz(y)).abs() < 1e-8 * (1.0 + fd.abs()));
            let fdu = (bubble_u(y + h) - bubble_u(y - h)) / (2.0 * h);
            assert!((fdu - bubble_du(y)).abs() < 1e-9);
        }
    }

    #[test]
    fn ratio_domain() {
        assert!(ortho_ratio(0.5).is_err());
    }
}
