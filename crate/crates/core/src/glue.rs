//! Glued ansatz u = λ⁻²Uη(ỹ) + θ_A + λ⁻²φη_R + ψ and its error terms.

use rayon::prelude::*;
use serde::Serialize;

use crate::bubble::{bubble_du, bubble_u, kernel_z};
use crate::error::{Error, Result};
use crate::field::{InnerField, OuterField, RadialField, ScaleState};
use crate::interp::log_grid;
use crate::modulation::ModulationTrajectory;
use crate::profile::{theta_space_time, theta_space_time_dr, ProfileSolution};
use crate::report::{BoundReport, BoundSample};

fn mollifier(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let g = (-1.0 / s).exp();
    let s2 = s * s;
    (g, g / s2, g * (1.0 - 2.0 * s) / (s2 * s2))
}

/// Cutoff profile and its first two radial derivatives: 1 on [0,1], 0 on [2,∞),
/// the e^{-1/s} smooth step in between.
pub fn eta_derivs(r: f64) -> (f64, f64, f64) {
    if r <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if r >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let (a, ga1, ga2) = mollifier(2.0 - r);
    let (b, gb1, gb2) = mollifier(r - 1.0);
    let (da, db) = (-ga1, gb1);
    let (dda, ddb) = (ga2, gb2);
    let s = a + b;
    let n = da * b - a * db;
    let dn = dda * b - a * ddb;
    let ds = da + db;
    (a / s, n / (s * s), (dn * s - 2.0 * n * ds) / (s * s * s))
}

pub fn eta(r: f64) -> f64 {
    eta_derivs(r).0
}

/// Radial Laplacian in R⁶ of η(|x|).
pub fn eta_laplacian(r: f64) -> f64 {
    if r <= 1.0 || r >= 2.0 {
        return 0.0;
    }
    let (_, d1, d2) = eta_derivs(r);
    d2 + 5.0 * d1 / r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    In,
    Mid,
    Out,
}

/// Pointwise building blocks of the ansatz at one (r, t).
#[derive(Debug, Clone, Copy)]
pub struct Pieces {
    pub y: f64,
    pub y_tilde: f64,
    pub eta_t: f64,
    pub eta_r: f64,
    pub bubble: f64,
    pub theta: f64,
    pub inner: f64,
    pub psi: f64,
}

impl Pieces {
    pub fn u(&self) -> f64 {
        self.bubble + self.theta + self.inner + self.psi
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PointTerms {
    pub n: f64,
    pub n_definitional: f64,
    /// Mean-value form without the |θ|θ subtraction; meaningful where φη_R = 0.
    pub n_mean_value: f64,
    pub e: [f64; 5],
    pub etilde: [f64; 6],
}

impl PointTerms {
    pub fn e_sum(&self) -> f64 {
        self.e.iter().sum()
    }
    pub fn etilde_sum(&self) -> f64 {
        self.etilde.iter().sum()
    }
    pub fn h(&self) -> f64 {
        self.n + self.e_sum() + self.etilde_sum()
    }
}

/// ∫₀¹|a + αb| dα.
fn abs_line_mean(a: f64, b: f64) -> f64 {
    if a * (a + b) >= 0.0 {
        (a + 0.5 * b).abs()
    } else {
        (a * a + (a + b) * (a + b)) / (2.0 * b.abs())
    }
}

/// Everything needed to evaluate the construction at any time in the trajectory.
pub struct Glue<'a> {
    pub traj: &'a ModulationTrajectory,
    pub profile: &'a ProfileSolution,
    pub phi: &'a dyn InnerField,
    pub psi: &'a dyn OuterField,
}

impl<'a> Glue<'a> {
    pub fn new(
        traj: &'a ModulationTrajectory,
        profile: &'a ProfileSolution,
        phi: &'a dyn InnerField,
        psi: &'a dyn OuterField,
    ) -> Result<Self> {
        if (profile.a() - traj.amplitude).abs() > 1e-14 {
            return Err(Error::Domain(format!(
                "profile amplitude {} does not match trajectory amplitude {}",
                profile.a(),
                traj.amplitude
            )));
        }
        Ok(Self { traj, profile, phi, psi })
    }

    /// Scale state at t, refusing when 18λR > √t.
    pub fn state(&self, t: f64) -> Result<ScaleState> {
        let st = self.traj.state_at(t)?;
        let lhs = 18.0 * st.lambda * st.r_cut;
        if lhs > t.sqrt() {
            return Err(Error::ScaleCollapse { t, lhs, rhs: t.sqrt() });
        }
        Ok(st)
    }

    pub fn pieces(&self, r: f64, st: &ScaleState) -> Pieces {
        let l = st.lambda;
        let y = r / l;
        let y_tilde = r / st.t.sqrt();
        let eta_t = eta(y_tilde);
        let eta_r = eta(y / st.r_cut);
        let inner = if eta_r == 0.0 || self.phi.is_zero() { 0.0 } else { self.phi.value(y, st) * eta_r / (l * l) };
        Pieces {
            y,
            y_tilde,
            eta_t,
            eta_r,
            bubble: bubble_u(y) * eta_t / (l * l),
            theta: theta_space_time(self.profile, r, st.t),
            inner,
            psi: self.psi.value(r, st),
        }
    }

    pub fn u(&self, r: f64, st: &ScaleState) -> f64 {
        self.pieces(r, st).u()
    }

    /// ∂_r u, or `None` when φ or ψ carry no derivative.
    pub fn u_r(&self, r: f64, st: &ScaleState) -> Option<f64> {
        let l = st.lambda;
        let sq = st.t.sqrt();
        let p = self.pieces(r, st);
        let (_, de_t, _) = eta_derivs(p.y_tilde);
        let (_, de_r, _) = eta_derivs(p.y / st.r_cut);
        let mut d = bubble_du(p.y) * p.eta_t / (l * l * l)
            + bubble_u(p.y) * de_t / (l * l * sq)
            + theta_space_time_dr(self.profile, r, st.t)
            + self.psi.radial_derivative(r, st)?;
        if !self.phi.is_zero() && (p.eta_r != 0.0 || de_r != 0.0) {
            let ph = self.phi.value(p.y, st);
            let dph = self.phi.radial_derivative(p.y, st)?;
            d += (dph * p.eta_r + ph * de_r / st.r_cut) / (l * l * l);
        }
        Some(d)
    }

    pub fn region(&self, r: f64, st: &ScaleState) -> Region {
        let r_in = st.lambda.sqrt() * st.t.powf(0.25);
        if r < r_in {
            Region::In
        } else if r < r_in * st.r_cut.sqrt() {
            Region::Mid
        } else {
            Region::Out
        }
    }

    pub fn terms(&self, r: f64, st: &ScaleState) -> Result<PointTerms> {
        let l = st.lambda;
        let (t, rc) = (st.t, st.r_cut);
        let p = self.pieces(r, st);
        let b = p.bubble;
        let w = p.theta + p.inner + p.psi;
        let u = b + w;
        let abs_th = p.theta.abs() * p.theta;

        let n_definitional = u.abs() * u - b * b - abs_th - 2.0 * b * w;
        let n = if u >= 0.0 { w * w - abs_th } else { -2.0 * b * b - 4.0 * b * w - w * w - abs_th };
        let bp = b + p.psi;
        let n_mean_value = 2.0 * bp * abs_line_mean(p.theta, bp) - b * b - 2.0 * b * (p.theta + p.psi);

        let mut e = [0.0; 5];
        let s = p.y / rc;
        let (_, de_r, _) = eta_derivs(s);
        let needs_phi = !self.phi.is_zero() && (p.eta_r != 0.0 || de_r != 0.0);
        if needs_phi {
            let ph = self.phi.value(p.y, st);
            let dph = self
                .phi
                .radial_derivative(p.y, st)
                .ok_or_else(|| Error::Incomplete("inner field has no radial derivative".into()))?;
            let l4 = l.powi(4);
            e[0] = ph * eta_laplacian(s) / (l4 * rc * rc);
            e[1] = 2.0 * dph * de_r / (l4 * rc);
            e[2] = ph * de_r * s * (st.dlambda / l + st.dr_cut / rc) / (l * l);
            e[3] = st.dlambda * (2.0 * ph + p.y * dph) * p.eta_r / (l * l * l);
        }
        e[4] = 2.0 * bubble_u(p.y) * p.psi * p.eta_t * (1.0 - p.eta_r) / (l * l);

        let uy = bubble_u(p.y);
        let (_, de_t, _) = eta_derivs(p.y_tilde);
        let mut et = [0.0; 6];
        et[0] = st.dlambda * kernel_z(p.y) * p.eta_t * (1.0 - p.eta_r) / (l * l * l);
        et[1] = uy * uy * (p.eta_t * p.eta_t - p.eta_t) / l.powi(4);
        et[2] = 2.0 * uy * p.theta * p.eta_t * (1.0 - p.eta_r) / (l * l);
        et[3] = 0.5 * uy * p.y_tilde * de_t / (t * l * l);
        et[4] = 2.0 * bubble_du(p.y) * de_t / (l * l * l * t.sqrt());
        et[5] = uy * eta_laplacian(p.y_tilde) / (t * l * l);
        Ok(PointTerms { n, n_definitional, n_mean_value, e, etilde: et })
    }

    /// Union of log grids on the bubble, cutoff and self-similar scales, plus a sparse
    /// global grid and the origin.
    pub fn union_grid(&self, st: &ScaleState) -> Vec<f64> {
        let l = st.lambda;
        let lr = l * st.r_cut;
        let sq = st.t.sqrt();
        let mut g = vec![0.0];
        g.extend(log_grid(l * 1e-2, l * 1e2, 200));
        g.extend(log_grid(lr / 4.0, lr * 4.0, 200));
        g.extend(log_grid(sq / 8.0, sq * 16.0, 200));
        g.extend(log_grid(l * 1e-3, sq * 100.0, 100));
        let r_in = l.sqrt() * st.t.powf(0.25);
        g.extend([r_in, r_in * st.r_cut.sqrt(), lr, 2.0 * lr, sq, 2.0 * sq, 3.0 * sq]);
        g.sort_by(f64::total_cmp);
        g.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        g
    }
}

/// u(·, t) on the union grid, with slopes when the perturbations provide them.
pub fn assemble_ansatz(glue: &Glue, t: f64) -> Result<RadialField> {
    let st = glue.state(t)?;
    let r = glue.union_grid(&st);
    let values = r.iter().map(|&x| glue.u(x, &st)).collect();
    let gradient: Option<Vec<f64>> = r.iter().map(|&x| glue.u_r(x, &st)).collect();
    Ok(RadialField::new(t, r, values, gradient))
}

#[derive(Debug, Clone)]
pub struct ErrorTerms {
    pub state: ScaleState,
    pub r: Vec<f64>,
    pub region: Vec<Region>,
    pub terms: Vec<PointTerms>,
}

impl ErrorTerms {
    fn field(&self, f: impl Fn(&PointTerms) -> f64) -> RadialField {
        RadialField::new(self.state.t, self.r.clone(), self.terms.iter().map(f).collect(), None)
    }
    pub fn n(&self) -> RadialField {
        self.field(|p| p.n)
    }
    pub fn e(&self) -> RadialField {
        self.field(PointTerms::e_sum)
    }
    pub fn etilde(&self) -> RadialField {
        self.field(PointTerms::etilde_sum)
    }
    pub fn h(&self) -> RadialField {
        self.field(PointTerms::h)
    }
}

pub fn error_terms(glue: &Glue, t: f64) -> Result<ErrorTerms> {
    let st = glue.state(t)?;
    let r = glue.union_grid(&st);
    let terms = r.iter().map(|&x| glue.terms(x, &st)).collect::<Result<Vec<_>>>()?;
    let region = r.iter().map(|&x| glue.region(x, &st)).collect();
    Ok(ErrorTerms { state: st, r, region, terms })
}

#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    pub epsilon: f64,
    pub c_values: [f64; 3],
}

impl Default for BoundParams {
    fn default() -> Self {
        Self { epsilon: 0.1, c_values: [2.0, 4.0, 8.0] }
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// One BoundReport per inequality over the time sweep. The scale t^{5A/4} of the
/// support indicators is taken as λ(t).
pub fn verify_pointwise_bounds(glue: &Glue, times: &[f64], params: BoundParams) -> Result<Vec<BoundReport>> {
    let (t_min, t_max) = times.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if !(t_max / t_min >= 999.999) {
        return Err(Error::Domain("bound verification needs a sweep spanning at least 3 decades".into()));
    }
    let fields = times.par_iter().map(|&t| error_terms(glue, t)).collect::<Result<Vec<_>>>()?;
    let tr = glue.traj;
    let (a_amp, a, a1) = (tr.amplitude, tr.opts.a, tr.opts.a1);
    let a2 = a_amp * a_amp;
    let mut names: Vec<String> = vec!["contraction1".into(), "Ninpw".into(), "Nmidpw".into()];
    for c in params.c_values {
        names.push(format!("cTcEout[C={c}]"));
    }
    for c in params.c_values {
        names.push(format!("tilcEpw[C={c}]"));
    }
    names.push("H_combined".into());
    let mut samples: Vec<Vec<BoundSample>> = vec![Vec::new(); names.len()];
    let nc = params.c_values.len();
    for f in &fields {
        let st = &f.state;
        let (t, l, rc) = (st.t, st.lambda, st.r_cut);
        let sq = t.sqrt();
        let p_minus = t.powf(-1.0 - 2.5 * a_amp);
        let p_plus = t.powf(-1.0 + 2.5 * a_amp);
        for ((&r, reg), pt) in f.r.iter().zip(&f.region).zip(&f.terms) {
            let r4 = if r > 0.0 { r.powi(-4) } else { f64::INFINITY };
            let mut push = |k: usize, lhs: f64, rhs: f64| samples[k].push(BoundSample { t, r, lhs: lhs.abs(), rhs });
            match reg {
                Region::Out => {
                    let rhs = a2 * rc.powf(-a1) * (ind(r <= 2.0 * sq) / (t * t) + ind(r >= sq) * r4);
                    push(0, pt.n, rhs);
                }
                Region::In => {
                    let rhs = a2 * t.powf(-2.0 + params.epsilon) * ind(r < 2.0 * l.sqrt() * t.powf(0.25));
                    push(1, pt.n, rhs);
                }
                Region::Mid => push(2, pt.n, 1.0 / (t * t)),
            }
            for (j, &c) in params.c_values.iter().enumerate() {
                let lo = l * rc / c;
                let rhs_e = p_minus * rc.powf(-2.0 - a) * ind(r <= c * l * rc)
                    + a_amp.abs() * p_plus * rc.powf(-a1) * r4 * ind(r >= lo && r <= 2.0 * sq);
                push(3 + j, pt.e_sum(), rhs_e);
                let rhs_t = p_plus * r4 * ind(r >= lo && r <= 2.0 * sq);
                push(3 + nc + j, pt.etilde_sum(), rhs_t);
            }
            push(3 + 2 * nc, pt.h(), p_minus * rc.powf(-2.0 - a));
        }
    }
    Ok(names.into_iter().zip(samples).map(|(n, s)| BoundReport::from_samples(n, s)).collect())
}

/// 𝒢 = λλ̇Z + 2λ²U(θ_A(λy) + ψ(λy)) on [0, 4R].
pub fn inner_inhomogeneity(glue: &Glue, t: f64, n: usize) -> Result<RadialField> {
    let st = glue.traj.state_at(t)?;
    let l = st.lambda;
    let y: Vec<f64> = (0..n).map(|i| 4.0 * st.r_cut * i as f64 / (n - 1) as f64).collect();
    let v = y
        .iter()
        .map(|&yy| {
            let x = l * yy;
            l * st.dlambda * kernel_z(yy)
                + 2.0 * l * l * bubble_u(yy) * (theta_space_time(glue.profile, x, t) + glue.psi.value(x, &st))
        })
        .collect();
    Ok(RadialField::new(t, y, v, None))
}

/// max σ⟨y⟩^{2+a}|𝒢| over the sampled ball.
pub fn inner_weighted_size(glue: &Glue, g: &RadialField) -> Result<f64> {
    let st = glue.traj.state_at(g.t)?;
    let a = glue.traj.opts.a;
    Ok(g.r_grid
        .iter()
        .zip(&g.values)
        .map(|(&y, v)| st.sigma * (1.0 + y * y).powf(0.5 * (2.0 + a)) * v.abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct SignVerdict {
    pub t: f64,
    pub inner_radius: f64,
    pub inner_min: f64,
    pub inner_positive: bool,
    pub at_origin: f64,
    pub at_three_sqrt_t: f64,
    /// max of u on [2√t, 10√t]; only scanned for A < 0.
    pub band_max: Option<f64>,
    pub band_negative: Option<bool>,
}

pub fn sign_scan(glue: &Glue, t: f64) -> Result<SignVerdict> {
    let st = glue.state(t)?;
    let r_in = st.lambda.sqrt() * t.powf(0.25);
    let mut pts = vec![0.0];
    pts.extend(log_grid(st.lambda * 1e-3, r_in, 400));
    pts.pop();
    pts.push(r_in * (1.0 - 1e-12));
    let inner_min = pts.iter().map(|&r| glue.u(r, &st)).fold(f64::INFINITY, f64::min);
    let sq = t.sqrt();
    let (band_max, band_negative) = if glue.traj.amplitude < 0.0 {
        let m = log_grid(2.0 * sq, 10.0 * sq, 200).into_iter().map(|r| glue.u(r, &st)).fold(f64::NEG_INFINITY, f64::max);
        (Some(m), Some(m < 0.0))
    } else {
        (None, None)
    };
    Ok(SignVerdict {
        t,
        inner_radius: r_in,
        inner_min,
        inner_positive: inner_min > 0.0,
        at_origin: glue.u(0.0, &st),
        at_three_sqrt_t: glue.u(3.0 * sq, &st),
        band_max,
        band_negative,
    })
}
