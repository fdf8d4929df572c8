//! Rate functions, the λ₀ ODE, σ, ρ and the μ fixed-point iteration.

pub mod rate;

use std::io::Write;

use rayon::prelude::*;

pub use rate::{check_rate_admissible, Admissibility, RateFunction, RateKind};

use crate::bubble::{bubble_u, kernel_z, ortho_ratio, RatioExpansion, RATIO_LEADING, RATIO_SECOND};
use crate::error::{Error, Result};
use crate::field::{OuterField, ScaleState};
use crate::interp::{cumulative_cubic, hermite, lagrange4, locate, log_grid};
use crate::profile::{theta_space_time, ProfileSolution};
use crate::quad::{integrate, integrate_points, QuadOpts};
use crate::report::fmt17;

/// ω(R) = ratio − 5/4 − (45/16)R⁻², tabulated as ω·R⁴ against log R.
#[derive(Debug, Clone)]
pub struct OmegaSweep {
    ln_r: Vec<f64>,
    omega_r4: Vec<f64>,
    pub expansions: Vec<RatioExpansion>,
}

impl OmegaSweep {
    /// Nodes on [1, r_max], 32 per decade.
    pub fn new(r_max: f64) -> Result<Self> {
        if !(r_max > 10.0) {
            return Err(Error::Domain(format!("omega sweep needs r_max > 10, got {r_max}")));
        }
        let n = (32.0 * r_max.log10()).ceil() as usize + 1;
        let expansions = log_grid(1.0, r_max, n).into_iter().map(ortho_ratio).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ln_r: expansions.iter().map(|e| e.r_cut.ln()).collect(),
            omega_r4: expansions.iter().map(|e| e.omega * e.r_cut.powi(4)).collect(),
            expansions,
        })
    }

    pub fn standard() -> Result<Self> {
        Self::new(1e4)
    }

    /// Cubic in log R inside the sweep; ωR⁴ held at its last value beyond it.
    pub fn omega(&self, r_cut: f64) -> f64 {
        let r = r_cut.max(1.0);
        let l = r.ln();
        let last = *self.ln_r.last().unwrap();
        let w = if l >= last { *self.omega_r4.last().unwrap() } else { lagrange4(&self.ln_r, &self.omega_r4, l) };
        w / r.powi(4)
    }

    pub fn ratio(&self, r_cut: f64) -> f64 {
        RATIO_LEADING + RATIO_SECOND / (r_cut * r_cut) + self.omega(r_cut)
    }
}

/// ∫_{t_a}^{t_b} s⁻¹[(45A/16)R⁻² + Aω(R)] ds, integrated in ln s.
fn log_rho_increment(a: f64, rate: &RateFunction, sweep: &OmegaSweep, t_a: f64, t_b: f64) -> Result<f64> {
    if a == 0.0 || t_b <= t_a {
        return Ok(0.0);
    }
    let f = |u: f64| {
        let r = rate.value(u.exp());
        a * (RATIO_SECOND / (r * r) + sweep.omega(r))
    };
    let (ua, ub) = (t_a.ln(), t_b.ln());
    let mut pts = vec![ua];
    let uf = rate.t_floor.ln();
    if uf > ua && uf < ub {
        pts.push(uf);
    }
    pts.push(ub);
    Ok(integrate_points(f, &pts, QuadOpts::abs_rel(1e-300, 1e-13))?.value)
}

/// ρ_{A,R}(t) = exp((45A/16)∫₁ᵗ s⁻¹R⁻² ds + A∫₁ᵗ s⁻¹ω ds).
pub fn rho_eval(a: f64, rate: &RateFunction, t: f64, sweep: &OmegaSweep) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("rho needs t >= 1, got {t}")));
    }
    Ok(log_rho_increment(a, rate, sweep, 1.0, t)?.exp())
}

/// d log ρ / d log log t.
pub fn rho_loglog_slope(a: f64, rate: &RateFunction, t: f64, sweep: &OmegaSweep) -> f64 {
    let r = rate.value(t);
    t.ln() * a * (RATIO_SECOND / (r * r) + sweep.omega(r))
}

#[derive(Debug, Clone, Copy)]
pub struct ModulationOpts {
    pub lambda_init: f64,
    pub points_per_decade: usize,
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Default for ModulationOpts {
    fn default() -> Self {
        Self { lambda_init: 1.0, points_per_decade: 64, a: 0.9, a1: 0.5, a2: 0.25 }
    }
}

impl ModulationOpts {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.a2 && self.a2 < self.a1 && self.a1 < self.a && self.a < 1.0) {
            return Err(Error::Domain(format!(
                "need 0 < a2 < a1 < a < 1, got a={}, a1={}, a2={}",
                self.a, self.a1, self.a2
            )));
        }
        if !(self.lambda_init > 0.0) || self.points_per_decade < 4 {
            return Err(Error::Domain("lambda_init must be positive and points_per_decade >= 4".into()));
        }
        Ok(())
    }
}

/// λ₀(t₀) = √t₀/(36R(t₀)): half the largest value allowed by 18λR ≤ √t.
pub fn separated_lambda_init(rate: &RateFunction, t0: f64) -> f64 {
    t0.sqrt() / (36.0 * rate.value(t0))
}

#[derive(Debug, Clone)]
pub struct ModulationTrajectory {
    pub amplitude: f64,
    pub rate: RateFunction,
    pub opts: ModulationOpts,
    pub t_grid: Vec<f64>,
    pub r_cut: Vec<f64>,
    /// Exact ball ratio −2∫UZ/∫Z² at each node.
    pub ratio: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub dlambda0: Vec<f64>,
    pub mu: Vec<f64>,
    pub dmu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub dlambda: Vec<f64>,
    pub sigma: Vec<f64>,
    pub rho: Vec<f64>,
    /// Successive ‖μ_{k+1} − μ_k‖_sc.
    pub iterate_steps: Vec<f64>,
    pub contraction: Vec<f64>,
    pub fixed_point_step: Option<f64>,
    /// |analytic tail beyond T| / |whole integral| for the A < 0 branch.
    pub tail_fraction: Option<f64>,
}

pub fn solve_lambda0(
    a: f64,
    rate: &RateFunction,
    t0: f64,
    t_end: f64,
    opts: ModulationOpts,
    sweep: &OmegaSweep,
) -> Result<ModulationTrajectory> {
    opts.validate()?;
    if !(t0 >= 1e3 && t_end > t0) {
        return Err(Error::Domain(format!("need T > t0 >= 1e3, got t0={t0}, T={t_end}")));
    }
    if !(a.abs() <= 0.1) {
        return Err(Error::Domain(format!("|A| must be at most 0.1, got {a}")));
    }
    let decades = (t_end / t0).log10();
    let n = ((decades * opts.points_per_decade as f64).ceil() as usize).max(4) + 1;
    let t_grid = log_grid(t0, t_end, n);
    let r_cut: Vec<f64> = t_grid.iter().map(|&t| rate.value(t)).collect();
    let ratio = r_cut.iter().map(|&r| ortho_ratio(r).map(|e| e.ratio)).collect::<Result<Vec<_>>>()?;

    let mut lambda0 = vec![opts.lambda_init; n];
    let mut rho = vec![0.0; n];
    let mut log_rho = log_rho_increment(a, rate, sweep, 1.0, t0)?;
    rho[0] = log_rho.exp();
    if a != 0.0 {
        let coeff = |s: f64| a * sweep.ratio(rate.value(s)) / (s + 1.0);
        let mut log_l = opts.lambda_init.ln();
        for i in 0..n - 1 {
            let (ta, tb) = (t_grid[i], t_grid[i + 1]);
            let q = integrate(coeff, ta, tb, QuadOpts::abs_rel(1e-300, 1e-13)).map_err(|e| Error::StepFailure {
                last_t: ta,
                what: format!("lambda0 step: {e}"),
            })?;
            log_l += q.value;
            lambda0[i + 1] = log_l.exp();
            log_rho += log_rho_increment(a, rate, sweep, ta, tb)?;
            rho[i + 1] = log_rho.exp();
        }
    } else {
        rho.iter_mut().for_each(|v| *v = 1.0);
    }
    let dlambda0: Vec<f64> = (0..n).map(|i| a * ratio[i] / (t_grid[i] + 1.0) * lambda0[i]).collect();
    let sigma = sigma_from(&t_grid, &lambda0, &dlambda0);
    Ok(ModulationTrajectory {
        amplitude: a,
        rate: rate.clone(),
        opts,
        mu: vec![0.0; n],
        dmu: vec![0.0; n],
        lambda: lambda0.clone(),
        dlambda: dlambda0.clone(),
        t_grid,
        r_cut,
        ratio,
        lambda0,
        dlambda0,
        sigma,
        rho,
        iterate_steps: Vec::new(),
        contraction: Vec::new(),
        fixed_point_step: None,
        tail_fraction: None,
    })
}

/// σ(t) = t₀/λ(t₀)² + ∫_{t₀}^t λ⁻², by the cubic Hermite rule on each interval.
fn sigma_from(t: &[f64], lambda: &[f64], dlambda: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = lambda.iter().map(|l| l.powi(-2)).collect();
    let dg: Vec<f64> = lambda.iter().zip(dlambda).map(|(l, d)| -2.0 * d / l.powi(3)).collect();
    let mut s = vec![t[0] * g[0]; t.len()];
    for i in 0..t.len() - 1 {
        let h = t[i + 1] - t[i];
        s[i + 1] = s[i] + 0.5 * h * (g[i] + g[i + 1]) + h * h / 12.0 * (dg[i] - dg[i + 1]);
    }
    s
}

/// How θ_A enters F̃.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    Full,
    /// θ_A(λy, t) replaced by θ_A(0, t).
    Frozen,
}

#[derive(Debug, Clone, Copy)]
pub struct MuOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub theta: ThetaMode,
}

impl Default for MuOpts {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 60, theta: ThetaMode::Full }
    }
}

fn ball_z2(r_cut: f64) -> Result<f64> {
    Ok(integrate(|y| kernel_z(y).powi(2) * y.powi(5), 0.0, 4.0 * r_cut, QuadOpts::abs_rel(0.0, 1e-13))?.value)
}

impl ModulationTrajectory {
    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    /// ‖f‖_sc = sup λ₀⁻¹R^{a₂}|f|.
    pub fn sc_norm(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.lambda0)
            .zip(&self.r_cut)
            .map(|((v, l), r)| v.abs() / l * r.powf(self.opts.a2))
            .fold(0.0, f64::max)
    }

    pub fn beta(&self, i: usize) -> f64 {
        self.amplitude * self.ratio[i] / (self.t_grid[i] + 1.0)
    }

    /// β(t)·t at every node.
    pub fn beta_t(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.beta(i) * self.t_grid[i]).collect()
    }

    /// Scale parameters at an arbitrary time in the grid range.
    pub fn state_at(&self, t: f64) -> Result<ScaleState> {
        let (t_lo, t_hi) = (self.t_grid[0], *self.t_grid.last().unwrap());
        if !(t >= t_lo * (1.0 - 1e-12) && t <= t_hi * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("t = {t} outside trajectory range [{t_lo}, {t_hi}]")));
        }
        let t = t.clamp(t_lo, t_hi);
        let i = locate(&self.t_grid, t);
        let (ta, tb) = (self.t_grid[i], self.t_grid[i + 1]);
        let (lambda, dlambda) = hermite(ta, tb, self.lambda[i], self.lambda[i + 1], self.dlambda[i], self.dlambda[i + 1], t);
        let (lambda0, _) =
            hermite(ta, tb, self.lambda0[i], self.lambda0[i + 1], self.dlambda0[i], self.dlambda0[i + 1], t);
        let (sigma, _) = hermite(
            ta,
            tb,
            self.sigma[i],
            self.sigma[i + 1],
            self.lambda[i].powi(-2),
            self.lambda[i + 1].powi(-2),
            t,
        );
        Ok(ScaleState {
            t,
            lambda,
            dlambda,
            lambda0,
            r_cut: self.rate.value(t),
            dr_cut: self.rate.derivative(t),
            sigma,
        })
    }

    pub fn state_at_node(&self, i: usize) -> ScaleState {
        let t = self.t_grid[i];
        ScaleState {
            t,
            lambda: self.lambda[i],
            dlambda: self.dlambda[i],
            lambda0: self.lambda0[i],
            r_cut: self.r_cut[i],
            dr_cut: self.rate.derivative(t),
            sigma: self.sigma[i],
        }
    }

    /// max 18λR/√t over the grid; scale separation holds when ≤ 1.
    pub fn separation_margin(&self) -> f64 {
        (0..self.len()).map(|i| 18.0 * self.lambda[i] * self.r_cut[i] / self.t_grid[i].sqrt()).fold(0.0, f64::max)
    }

    /// d log λ₀ / d log t at the node nearest t.
    pub fn lambda0_exponent(&self, t: f64) -> f64 {
        let i = self.nearest(t);
        self.dlambda0[i] * self.t_grid[i] / self.lambda0[i]
    }

    /// d log σ / d log t at the node nearest t.
    pub fn sigma_exponent(&self, t: f64) -> f64 {
        let i = self.nearest(t);
        self.t_grid[i] / (self.lambda[i] * self.lambda[i] * self.sigma[i])
    }

    fn nearest(&self, t: f64) -> usize {
        let l = t.ln();
        (0..self.len())
            .min_by(|&a, &b| (self.t_grid[a].ln() - l).abs().total_cmp(&(self.t_grid[b].ln() - l).abs()))
            .unwrap()
    }

    /// max/min of σ(t)·t^{-(1−5A/2)} over the grid.
    pub fn sigma_sandwich(&self) -> f64 {
        let p = 1.0 - 2.5 * self.amplitude;
        let v: Vec<f64> = self.t_grid.iter().zip(&self.sigma).map(|(t, s)| s * t.powf(-p)).collect();
        v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, ortho: Option<&[f64]>) -> std::io::Result<()> {
        writeln!(w, "t,lambda0,mu,lambda,sigma,rho,beta_t,ortho_residual")?;
        let bt = self.beta_t();
        for i in 0..self.len() {
            let o = ortho.map(|o| fmt17(o[i])).unwrap_or_else(|| "nan".into());
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt17(self.t_grid[i]),
                fmt17(self.lambda0[i]),
                fmt17(self.mu[i]),
                fmt17(self.lambda[i]),
                fmt17(self.sigma[i]),
                fmt17(self.rho[i]),
                fmt17(bt[i]),
                o
            )?;
        }
        Ok(())
    }
}

fn check_profile(a: f64, profile: &ProfileSolution) -> Result<()> {
    if (profile.a() - a).abs() > 1e-14 * a.abs().max(1.0) {
        return Err(Error::Domain(format!("profile amplitude {} does not match A = {a}", profile.a())));
    }
    Ok(())
}

/// F̃[μ] = −2λ∫_{B_{4R}}(θ_A(λy) − θ_A(0) + ψ(λy))UZ / ∫_{B_{4R}}Z² at every node.
fn forcing(
    traj: &ModulationTrajectory,
    mu: &[f64],
    profile: &ProfileSolution,
    psi: &dyn OuterField,
    mode: ThetaMode,
    z2: &[f64],
) -> Result<Vec<f64>> {
    (0..traj.len())
        .into_par_iter()
        .map(|i| {
            let t = traj.t_grid[i];
            let lambda = traj.lambda0[i] + mu[i];
            if !(lambda > 0.0) {
                return Err(Error::Domain(format!("lambda = {lambda} not positive at t = {t}")));
            }
            let st = ScaleState { lambda, ..traj.state_at_node(i) };
            let s = t + 1.0;
            let sq = s.sqrt();
            let f = |y: f64| {
                let x = lambda * y;
                let th = match mode {
                    ThetaMode::Full => profile.theta_minus_a(x / sq) / s,
                    ThetaMode::Frozen => 0.0,
                };
                (th + psi.value(x, &st)) * bubble_u(y) * kernel_z(y) * y.powi(5)
            };
            if mode == ThetaMode::Frozen && psi.is_zero() {
                return Ok(0.0);
            }
            // ∫|UZ|y⁵ over the ball is below 3·10³; the floor sits 13 digits under the integrand scale.
            let floor = 3e-10 * (traj.amplitude.abs() / s + psi.value(0.0, &st).abs());
            let q = integrate(f, 0.0, 4.0 * traj.r_cut[i], QuadOpts::abs_rel(floor, 1e-12))?;
            Ok(-2.0 * lambda * q.value / z2[i])
        })
        .collect()
}

/// μ = 𝒮[F]: λ₀∫_{t₀}^t F/λ₀ for A > 0, −λ₀∫_t^∞ F/λ₀ for A < 0.
fn s_map(traj: &ModulationTrajectory, f: &[f64]) -> Result<(Vec<f64>, Option<f64>)> {
    let n = traj.len();
    let g: Vec<f64> = f.iter().zip(&traj.lambda0).map(|(f, l)| f / l).collect();
    let cum = cumulative_cubic(&traj.t_grid, &g);
    if traj.amplitude >= 0.0 {
        return Ok(((0..n).map(|i| traj.lambda0[i] * cum[i]).collect(), None));
    }
    let (tn, tm) = (traj.t_grid[n - 1], traj.t_grid[n - 2]);
    let tail = if g[n - 1] == 0.0 {
        0.0
    } else {
        let p = (g[n - 1] / g[n - 2]).ln() / (tn / tm).ln();
        if !(g[n - 1] * g[n - 2] > 0.0) || !(p < -1.0) {
            return Err(Error::Quadrature { what: "A < 0 tail of the modulation integral".into(), err: p });
        }
        g[n - 1] * tn / (-p - 1.0)
    };
    let total = cum[n - 1] + tail;
    let frac = if total == 0.0 { 0.0 } else { (tail / total).abs() };
    Ok(((0..n).map(|i| -traj.lambda0[i] * (total - cum[i])).collect(), Some(frac)))
}

/// Fixed-point iteration μ ← 𝒮[μ] from μ ≡ 0.
pub fn solve_mu(
    traj: &ModulationTrajectory,
    profile: &ProfileSolution,
    psi: &dyn OuterField,
    opts: MuOpts,
) -> Result<ModulationTrajectory> {
    check_profile(traj.amplitude, profile)?;
    let mut out = traj.clone();
    let n = traj.len();
    out.iterate_steps.clear();
    out.contraction.clear();
    if traj.amplitude == 0.0 && psi.is_zero() {
        out.mu = vec![0.0; n];
        out.dmu = vec![0.0; n];
        out.fixed_point_step = Some(0.0);
        out.lambda = out.lambda0.clone();
        out.dlambda = out.dlambda0.clone();
        out.sigma = sigma_from(&out.t_grid, &out.lambda, &out.dlambda);
        return Ok(out);
    }
    let z2 = traj.r_cut.par_iter().map(|&r| ball_z2(r)).collect::<Result<Vec<_>>>()?;
    let mut mu = vec![0.0; n];
    let mut f_used;
    let mut tail;
    let mut bad_run = 0;
    loop {
        f_used = forcing(traj, &mu, profile, psi, opts.theta, &z2)?;
        let (next, tl) = s_map(traj, &f_used)?;
        tail = tl;
        let diff: Vec<f64> = next.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let step = traj.sc_norm(&diff);
        if let Some(&prev) = out.iterate_steps.last() {
            let q = if prev == 0.0 { 0.0 } else { step / prev };
            out.contraction.push(q);
            bad_run = if q >= 1.0 { bad_run + 1 } else { 0 };
            if bad_run >= 2 {
                return Err(Error::NoContraction(out.contraction.clone()));
            }
        }
        out.iterate_steps.push(step);
        mu = next;
        if step < opts.tol {
            break;
        }
        if out.iterate_steps.len() >= opts.max_iter {
            return Err(Error::NoContraction(out.contraction.clone()));
        }
    }
    let f_last = forcing(traj, &mu, profile, psi, opts.theta, &z2)?;
    let (extra, _) = s_map(traj, &f_last)?;
    let d: Vec<f64> = extra.iter().zip(&mu).map(|(a, b)| a - b).collect();
    out.fixed_point_step = Some(traj.sc_norm(&d));
    out.tail_fraction = tail;
    out.dmu = (0..n).map(|i| traj.beta(i) * mu[i] + f_used[i]).collect();
    out.lambda = (0..n).map(|i| traj.lambda0[i] + mu[i]).collect();
    out.dlambda = (0..n).map(|i| traj.dlambda0[i] + out.dmu[i]).collect();
    out.mu = mu;
    if let Some(i) = out.lambda.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::Domain(format!("lambda not positive at t = {}", out.t_grid[i])));
    }
    out.sigma = sigma_from(&out.t_grid, &out.lambda, &out.dlambda);
    Ok(out)
}

/// ∫_{B_{4R}}𝒢Z / (λ|λ̇|∫_{B_{4R}}Z²) at every node, by direct quadrature of
/// 𝒢 = λλ̇Z + 2λ²U(θ_A(λy) + ψ(λy)).
pub fn orthogonality_residual(
    traj: &ModulationTrajectory,
    profile: &ProfileSolution,
    psi: &dyn OuterField,
) -> Result<Vec<f64>> {
    check_profile(traj.amplitude, profile)?;
    (0..traj.len())
        .into_par_iter()
        .map(|i| {
            let st = traj.state_at_node(i);
            let (l, dl, t) = (st.lambda, st.dlambda, st.t);
            if traj.amplitude == 0.0 && psi.is_zero() && dl == 0.0 {
                return Ok(0.0);
            }
            let g = |y: f64| {
                let x = l * y;
                let gy = l * dl * kernel_z(y) + 2.0 * l * l * bubble_u(y) * (theta_space_time(profile, x, t) + psi.value(x, &st));
                gy * kernel_z(y) * y.powi(5)
            };
            let rho = 4.0 * st.r_cut;
            let mut pts = vec![0.0];
            for p in [1.0, 24f64.sqrt(), 10.0] {
                if p < rho {
                    pts.push(p);
                }
            }
            pts.push(rho);
            let den = integrate_points(|y| kernel_z(y).powi(2) * y.powi(5), &pts, QuadOpts::abs_rel(0.0, 1e-13))?.value;
            let scale = l * dl.abs() * den;
            let floor = 1e-12 * scale.max(l * l * den * (traj.amplitude.abs() / (t + 1.0) + psi.value(0.0, &st).abs()));
            let num = integrate_points(g, &pts, QuadOpts::abs_rel(floor, 1e-13))?.value;
            Ok(if scale == 0.0 { if num == 0.0 { 0.0 } else { f64::INFINITY } } else { num.abs() / scale })
        })
        .collect()
}
