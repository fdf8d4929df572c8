//! Forward self-similar profiles Θ_A, the Kummer comparison profile Θ̃ and the tail
//! coefficient ℓ_A.

use std::io::Write;

use crate::error::{Error, Result};
use crate::interp::{hermite_eval, log_grid};
use crate::ode::{dopri45, max_local_defect, OdeOpts};
use crate::quad::{integrate, QuadOpts};
use crate::report::fmt17;

/// Amplitudes must satisfy |A| < A_MAX.
pub const A_MAX: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub a: f64,
    pub r_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub series_cutoff: f64,
}

impl ProfileParams {
    pub fn new(a: f64) -> Self {
        Self { a, r_max: 400.0, abs_tol: 1e-16, rel_tol: 1e-10, series_cutoff: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.abs() < A_MAX) {
            return Err(Error::Domain(format!("|A| = {} must be below {A_MAX}", self.a.abs())));
        }
        if !(self.r_max >= 50.0) {
            return Err(Error::Domain(format!("r_max = {} must be at least 50", self.r_max)));
        }
        for (name, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v > 0.0 && v <= 1e-6) {
                return Err(Error::Domain(format!("{name} = {v} must lie in (0, 1e-6]")));
            }
        }
        if !(self.series_cutoff > 0.0 && self.series_cutoff < 0.1) {
            return Err(Error::Domain(format!("series_cutoff = {} out of range", self.series_cutoff)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub params: ProfileParams,
    pub grid: Vec<f64>,
    pub theta: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub ell: f64,
    pub ell_uncertainty: f64,
}

/// Right-hand side of the first-order system for (Θ, Θ').
pub fn profile_rhs(r: f64, y: &[f64; 2]) -> [f64; 2] {
    [y[1], -(5.0 / r + 0.5 * r) * y[1] - y[0] - y[0].abs() * y[0]]
}

/// Coefficient c in Θ_A ≈ A + c r².
pub fn series_coefficient(a: f64) -> f64 {
    -(a + a * a.abs()) / 12.0
}

pub fn solve_theta(params: ProfileParams) -> Result<ProfileSolution> {
    params.validate()?;
    if params.a < 0.0 {
        let pos = solve_theta(ProfileParams { a: -params.a, ..params })?;
        return Ok(ProfileSolution {
            params,
            grid: pos.grid,
            theta: pos.theta.iter().map(|v| -v).collect(),
            dtheta: pos.dtheta.iter().map(|v| -v).collect(),
            ell: -pos.ell,
            ell_uncertainty: pos.ell_uncertainty,
        });
    }
    let a = params.a;
    let rc = params.series_cutoff;
    let c = series_coefficient(a);
    let mut grid = vec![0.0, rc];
    let mut theta = vec![a, a + c * rc * rc];
    let mut dtheta = vec![0.0, 2.0 * c * rc];
    let opts = OdeOpts { rtol: params.rel_tol, atol: params.abs_tol, h0: rc, ..OdeOpts::default() };
    let marks = [params.r_max / 4.0, params.r_max / 2.0, params.r_max];
    let mut start = rc;
    let mut y = [theta[1], dtheta[1]];
    let mut at_marks = [0.0; 3];
    for (k, &end) in marks.iter().enumerate() {
        let last = dopri45(profile_rhs, start, y, end, opts, |s| {
            if s.t > start {
                grid.push(s.t);
                theta.push(s.y[0]);
                dtheta.push(s.y[1]);
            }
            true
        })
        .map_err(|e| match e {
            Error::StepFailure { last_t, what } => Error::Diverged { last_r: last_t, what },
            other => other,
        })?;
        y = last.y;
        at_marks[k] = end * end * y[0];
        start = end;
    }
    let g12 = (4.0 * at_marks[1] - at_marks[0]) / 3.0;
    let g23 = (4.0 * at_marks[2] - at_marks[1]) / 3.0;
    let ell = (16.0 * g23 - g12) / 15.0;
    Ok(ProfileSolution { params, grid, theta, dtheta, ell, ell_uncertainty: (ell - g23).abs() })
}

impl ProfileSolution {
    pub fn a(&self) -> f64 {
        self.params.a
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// (Θ_A(r), Θ_A'(r)); cubic Hermite inside the grid, ℓ/r² beyond it.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let rm = self.r_max();
        if r >= rm {
            return (self.ell / (r * r), -2.0 * self.ell / (r * r * r));
        }
        hermite_eval(&self.grid, &self.theta, &self.dtheta, r)
    }

    /// Θ_A(r) − A without cancellation near the origin.
    pub fn theta_minus_a(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.grid[1] {
            return series_coefficient(self.a()) * r * r;
        }
        self.eval(r).0 - self.a()
    }

    /// Largest refined-grid one-step defect, relative to |A|.
    pub fn ode_defect(&self) -> f64 {
        let a = self.a().abs();
        if a == 0.0 {
            return 0.0;
        }
        let ys: Vec<[f64; 2]> = self.theta.iter().zip(&self.dtheta).map(|(&t, &d)| [t, d]).collect();
        max_local_defect(&profile_rhs, &self.grid[1..], &ys[1..], 16, a)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.theta.windows(2).all(|w| w[1] < w[0])
    }

    /// Smallest C with Θ_A ≥ (1 − C·A)·A·Θ̃ on the grid (A > 0).
    pub fn lower_bound_constant(&self) -> f64 {
        let a = self.a();
        self.grid
            .iter()
            .zip(&self.theta)
            .map(|(&r, &th)| (1.0 - th / (a * tilde_theta_unchecked(r))) / a)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest violation of Θ_A ≤ A·Θ̃ on the grid (A > 0); nonpositive when it holds.
    pub fn upper_bound_violation(&self) -> f64 {
        let a = self.a();
        self.grid
            .iter()
            .zip(&self.theta)
            .map(|(&r, &th)| th - a * tilde_theta_unchecked(r))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max |Θ_A'| / |A| on the grid.
    pub fn derivative_constant(&self) -> f64 {
        self.dtheta.iter().map(|d| d.abs()).fold(0.0, f64::max) / self.a().abs()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# A = {}", fmt17(self.a()))?;
        writeln!(w, "# ell = {}", fmt17(self.ell))?;
        writeln!(w, "# ell_uncertainty = {}", fmt17(self.ell_uncertainty))?;
        writeln!(w, "r,theta,dtheta")?;
        for i in 0..self.grid.len() {
            writeln!(w, "{},{},{}", fmt17(self.grid[i]), fmt17(self.theta[i]), fmt17(self.dtheta[i]))?;
        }
        Ok(())
    }
}

/// Θ̃(r) = e^{-z} M(2,3;z) = 2((z−1) + e^{−z})/z² with z = r²/4.
pub fn tilde_theta(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("tilde_theta needs r >= 0, got {r}")));
    }
    Ok(tilde_theta_unchecked(r))
}

pub(crate) fn tilde_theta_unchecked(r: f64) -> f64 {
    let z = 0.25 * r * r;
    if z < 1e-2 {
        // 2 Σ (−z)^k/(k+2)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..9 {
            term *= -z / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        2.0 * (z + (-z).exp_m1()) / (z * z)
    }
}

#[derive(Debug, Clone)]
pub struct HRatio {
    /// Radii where both forms are compared.
    pub r: Vec<f64>,
    pub h_ratio: Vec<f64>,
    pub h_formula: Vec<f64>,
    pub max_discrepancy: f64,
    /// Θ_A/Θ̃ on the full solution grid.
    pub h_grid: Vec<f64>,
}

/// Compare h = Θ_A/Θ̃ with the double-integral representation
/// h(r) = A − ∫₀^r J(ρ)/(ρ⁵Θ̃(ρ)²) dρ, J(ρ) = ∫₀^ρ s⁵ e^{(s²−ρ²)/4} Θ̃ Θ_A² ds.
pub fn h_ratio(sol: &ProfileSolution) -> Result<HRatio> {
    let a = sol.a();
    if !(a > 0.0) {
        return Err(Error::Domain("h_ratio needs A > 0 (use the odd reduction for A < 0)".into()));
    }
    let h_grid: Vec<f64> = sol.grid.iter().zip(&sol.theta).map(|(&r, &t)| t / tilde_theta_unchecked(r)).collect();

    let n = sol.grid.len();
    let mut idx: Vec<usize> = vec![0];
    for target in log_grid(1e-2, sol.r_max(), 400) {
        let i = sol.grid.partition_point(|&g| g < target).min(n - 1);
        if i > *idx.last().unwrap() {
            idx.push(i);
        }
    }
    let j_of = |rho: f64| -> Result<f64> {
        let lo = (rho * rho - 160.0).max(0.0).sqrt();
        let f = |s: f64| {
            let th = sol.eval(s).0;
            s.powi(5) * (0.25 * (s * s - rho * rho)).exp() * tilde_theta_unchecked(s) * th * th
        };
        integrate(f, lo, rho, QuadOpts::abs_rel(1e-300, 1e-12)).map(|q| q.value)
    };
    let outer = |rho: f64| -> f64 {
        let tt = tilde_theta_unchecked(rho);
        match j_of(rho) {
            Ok(j) => j / (rho.powi(5) * tt * tt),
            Err(_) => f64::NAN,
        }
    };
    let mut r = vec![0.0];
    let mut hf = vec![a];
    let mut hr = vec![h_grid[0]];
    let mut acc = 0.0;
    for w in idx.windows(2) {
        let (ra, rb) = (sol.grid[w[0]], sol.grid[w[1]]);
        let q = integrate(outer, ra, rb, QuadOpts::abs_rel(1e-16, 1e-11))
            .map_err(|e| Error::Quadrature { what: format!("h formula on [{ra}, {rb}]: {e}"), err: f64::NAN })?;
        acc += q.value;
        r.push(rb);
        hf.push(a - acc);
        hr.push(h_grid[w[1]]);
    }
    let max_discrepancy = hr.iter().zip(&hf).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(HRatio { r, h_ratio: hr, h_formula: hf, max_discrepancy, h_grid })
}

/// θ_A(x,t) = (t+1)^{-1} Θ_A(|x|/√(t+1)).
pub fn theta_space_time(sol: &ProfileSolution, x_norm: f64, t: f64) -> f64 {
    let s = t + 1.0;
    sol.eval(x_norm / s.sqrt()).0 / s
}

/// Radial derivative ∂_r θ_A(x,t) = (t+1)^{-3/2} Θ_A'(|x|/√(t+1)).
pub fn theta_space_time_dr(sol: &ProfileSolution, x_norm: f64, t: f64) -> f64 {
    let s = t + 1.0;
    sol.eval(x_norm / s.sqrt()).1 / (s * s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_large_amplitude() {
        assert!(matches!(solve_theta(ProfileParams::new(0.4)), Err(Error::Domain(_))));
        assert!(matches!(tilde_theta(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn series_branch_matches_closed_form_at_switch() {
        let r = 2.0 * 1e-2f64.sqrt();
        let z = 1e-2f64;
        let closed = 2.0 * (z + (-z).exp_m1()) / (z * z);
        assert!((tilde_theta_unchecked(r * (1.0 - 1e-12)) - closed).abs() < 1e-13);
    }
}
