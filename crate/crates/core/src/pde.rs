//! Radial finite-volume simulation of u_t = u_rr + (5/r)u_r + |u|u.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::interp::{log_grid, ls_slope};
use crate::report::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FarField {
    /// u(r_max) = ℓ/r_max².
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub r_max: f64,
    pub n_cells: usize,
    pub t0: f64,
    pub t_end: f64,
    pub far_field: FarField,
    pub ell: f64,
    pub cfl_safety: f64,
    /// Width of the region near r = 0 to be resolved by at least 30 cells.
    pub core_width: f64,
    pub n_records: usize,
    pub snapshot_times: Vec<f64>,
    pub max_steps: Option<u64>,
}

impl SimConfig {
    pub fn new(r_max: f64, n_cells: usize, t0: f64, t_end: f64) -> Self {
        Self {
            r_max,
            n_cells,
            t0,
            t_end,
            far_field: FarField::Dirichlet,
            ell: 0.0,
            cfl_safety: 0.9,
            core_width: 1.0,
            n_records: 61,
            snapshot_times: Vec::new(),
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t0 && self.t0 >= 0.0) {
            return Err(Error::Domain(format!("need t_end > t0 >= 0, got [{}, {}]", self.t0, self.t_end)));
        }
        if !(self.r_max >= 20.0 * self.t_end.sqrt()) {
            return Err(Error::Domain(format!(
                "r_max = {} must be at least 20√t_end = {}",
                self.r_max,
                20.0 * self.t_end.sqrt()
            )));
        }
        if self.n_cells < 2000 {
            return Err(Error::Domain(format!("n_cells = {} below 2000", self.n_cells)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 0.9) {
            return Err(Error::Domain(format!("cfl_safety = {} outside (0, 0.9]", self.cfl_safety)));
        }
        if !(self.core_width > 0.0) || self.n_records < 2 {
            return Err(Error::Domain("core_width must be positive and n_records >= 2".into()));
        }
        Ok(())
    }
}

/// Cell faces graded geometrically from core_width/30 near the origin up to a uniform
/// outer width chosen so that exactly n_cells cells fill [0, r_max].
#[derive(Debug, Clone)]
pub struct Mesh {
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    pub volumes: Vec<f64>,
}

const GROWTH: f64 = 1.03;

fn faces_for(h_min: f64, h_max: f64, r_max: f64) -> Vec<f64> {
    let mut f = vec![0.0];
    let mut h = h_min.min(h_max);
    let mut r = 0.0;
    while r + h < r_max {
        r += h;
        f.push(r);
        h = (h * GROWTH).min(h_max);
    }
    if r_max - r < 0.5 * h && f.len() > 1 {
        f.pop();
    }
    f.push(r_max);
    f
}

impl Mesh {
    pub fn graded(r_max: f64, n_cells: usize, core_width: f64) -> Result<Self> {
        let h_min = core_width / 30.0;
        let uniform = r_max / n_cells as f64;
        let faces = if h_min >= uniform {
            (0..=n_cells).map(|i| r_max * i as f64 / n_cells as f64).collect()
        } else {
            let (mut lo, mut hi) = (uniform, r_max);
            if faces_for(h_min, lo, r_max).len() - 1 < n_cells {
                return Err(Error::Domain("mesh cannot reach n_cells".into()));
            }
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if faces_for(h_min, m, r_max).len() - 1 > n_cells {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let mut f = vec![0.0];
            let mut h = h_min;
            while h < hi && f.len() <= n_cells / 2 {
                f.push(f.last().unwrap() + h);
                h *= GROWTH;
            }
            let start = *f.last().unwrap();
            let rest = n_cells + 1 - f.len();
            f.extend((1..=rest).map(|i| start + (r_max - start) * i as f64 / rest as f64));
            f
        };
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes = faces.windows(2).map(|w| (w[1].powi(6) - w[0].powi(6)) / 6.0).collect();
        Ok(Self { faces, centers, volumes })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn min_width(&self) -> f64 {
        self.faces.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SimStatus {
    Completed,
    BlowUp { t: f64 },
    Unstable { t: f64 },
    StepBudget { t: f64 },
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub sup_norm: Vec<f64>,
    pub sup_location: Vec<f64>,
    pub local_exponent: Vec<f64>,
    pub snapshots: Vec<RadialField>,
    pub status: SimStatus,
    pub steps: u64,
    pub mesh_min_width: f64,
}

struct Operator {
    coeff_lo: Vec<f64>,
    coeff_hi: Vec<f64>,
    boundary: f64,
    dirichlet: bool,
    dt_diff: f64,
}

impl Operator {
    fn new(mesh: &Mesh, far: FarField, ell: f64) -> Self {
        let n = mesh.len();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            if i > 0 {
                lo[i] = mesh.faces[i].powi(5) / (mesh.centers[i] - mesh.centers[i - 1]) / mesh.volumes[i];
            }
            if i + 1 < n {
                hi[i] = mesh.faces[i + 1].powi(5) / (mesh.centers[i + 1] - mesh.centers[i]) / mesh.volumes[i];
            }
        }
        let dirichlet = far == FarField::Dirichlet;
        if dirichlet {
            hi[n - 1] = mesh.faces[n].powi(5) / (mesh.faces[n] - mesh.centers[n - 1]) / mesh.volumes[n - 1];
        }
        let dt_diff = (0..n).map(|i| 1.0 / (lo[i] + hi[i])).fold(f64::INFINITY, f64::min);
        let r_max = mesh.faces[n];
        Self { coeff_lo: lo, coeff_hi: hi, boundary: ell / (r_max * r_max), dirichlet, dt_diff }
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for i in 0..n {
            let left = if i > 0 { self.coeff_lo[i] * (u[i - 1] - u[i]) } else { 0.0 };
            let right = if i + 1 < n {
                self.coeff_hi[i] * (u[i + 1] - u[i])
            } else if self.dirichlet {
                self.coeff_hi[i] * (self.boundary - u[i])
            } else {
                0.0
            };
            out[i] = left + right + u[i].abs() * u[i];
        }
    }
}

fn sup_of(u: &[f64], centers: &[f64]) -> (f64, f64) {
    let mut best = (0.0, centers[0]);
    for (v, c) in u.iter().zip(centers) {
        if v.abs() > best.0 || v.is_nan() {
            best = (v.abs(), *c);
        }
    }
    best
}

pub fn simulate(config: &SimConfig, initial: &RadialField) -> Result<SimTrace> {
    config.validate()?;
    let mesh = Mesh::graded(config.r_max, config.n_cells, config.core_width)?;
    let op = Operator::new(&mesh, config.far_field, config.ell);
    let mut u: Vec<f64> = mesh.centers.iter().map(|&r| initial.eval(r)).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial data not finite on the mesh".into()));
    }
    let n = u.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut marks: Vec<(f64, bool)> = log_grid(config.t0.max(1e-12), config.t_end, config.n_records)
        .into_iter()
        .map(|t| (t, false))
        .chain(config.snapshot_times.iter().filter(|&&t| t > config.t0 && t <= config.t_end).map(|&t| (t, true)))
        .collect();
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut trace = SimTrace {
        times: Vec::new(),
        sup_norm: Vec::new(),
        sup_location: Vec::new(),
        local_exponent: Vec::new(),
        snapshots: Vec::new(),
        status: SimStatus::Completed,
        steps: 0,
        mesh_min_width: mesh.min_width(),
    };
    let mut t = config.t0;
    let record = |trace: &mut SimTrace, t: f64, u: &[f64], snap: bool| {
        let (s, loc) = sup_of(u, &mesh.centers);
        if trace.times.last() != Some(&t) {
            trace.times.push(t);
            trace.sup_norm.push(s);
            trace.sup_location.push(loc);
        }
        if snap {
            trace.snapshots.push(RadialField::new(t, mesh.centers.clone(), u.to_vec(), None));
        }
    };
    record(&mut trace, t, &u, config.snapshot_times.contains(&config.t0));
    let mut next = 0;
    while next < marks.len() && marks[next].0 <= t {
        next += 1;
    }
    while next < marks.len() {
        let target = marks[next].0;
        let (sup, _) = sup_of(&u, &mesh.centers);
        if !sup.is_finite() {
            trace.status = SimStatus::Unstable { t };
            break;
        }
        if sup > 1e12 {
            trace.status = SimStatus::BlowUp { t };
            break;
        }
        if config.max_steps.is_some_and(|m| trace.steps >= m) {
            trace.status = SimStatus::StepBudget { t };
            break;
        }
        let mut dt = config.cfl_safety * op.dt_diff.min(0.1 / sup.max(1e-300));
        if t + dt >= target {
            dt = target - t;
        }
        op.apply(&u, &mut k1);
        for i in 0..n {
            stage[i] = u[i] + dt * k1[i];
        }
        op.apply(&stage, &mut k2);
        for i in 0..n {
            u[i] = 0.5 * (u[i] + stage[i] + dt * k2[i]);
        }
        trace.steps += 1;
        t = if t + dt >= target { target } else { t + dt };
        while next < marks.len() && marks[next].0 <= t {
            record(&mut trace, t, &u, marks[next].1);
            next += 1;
        }
    }
    if matches!(trace.status, SimStatus::Completed) && u.iter().any(|v| !v.is_finite()) {
        trace.status = SimStatus::Unstable { t };
    }
    trace.local_exponent = local_exponents(&trace.times, &trace.sup_norm, 3);
    Ok(trace)
}

fn local_exponents(times: &[f64], sup: &[f64], half: usize) -> Vec<f64> {
    (0..times.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(times.len());
            let pts: Vec<(f64, f64)> = (lo..hi)
                .filter(|&j| times[j] > 0.0 && sup[j] > 0.0 && sup[j].is_finite())
                .map(|j| (times[j].ln(), sup[j].ln()))
                .collect();
            if pts.len() < 2 {
                return f64::NAN;
            }
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            ls_slope(&x, &y).0
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// Two standard errors of the least-squares slope.
    pub width: f64,
    pub points: usize,
}

/// Slope of log sup_norm against log t over [t_a, t_b].
pub fn fit_exponent(trace: &SimTrace, t_a: f64, t_b: f64) -> Result<ExponentFit> {
    if !(t_a > 0.0 && t_b / t_a >= 10f64.sqrt() * (1.0 - 1e-12)) {
        return Err(Error::Fit(format!("window [{t_a}, {t_b}] spans less than half a decade")));
    }
    let sel: Vec<usize> =
        (0..trace.times.len()).filter(|&i| trace.times[i] >= t_a * (1.0 - 1e-12) && trace.times[i] <= t_b * (1.0 + 1e-12)).collect();
    if sel.len() < 3 {
        return Err(Error::Fit(format!("only {} trace points inside the window", sel.len())));
    }
    if sel.iter().any(|&i| !(trace.sup_norm[i] > 0.0 && trace.sup_norm[i].is_finite())) {
        return Err(Error::Fit("sup norm vanishes or is not finite; exponent undefined".into()));
    }
    let x: Vec<f64> = sel.iter().map(|&i| trace.times[i].ln()).collect();
    let y: Vec<f64> = sel.iter().map(|&i| trace.sup_norm[i].ln()).collect();
    let (s, se) = ls_slope(&x, &y);
    Ok(ExponentFit { exponent: s, width: 2.0 * se, points: sel.len() })
}

impl SimTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,sup_norm,sup_location,local_exponent")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt17(self.times[i]),
                fmt17(self.sup_norm[i]),
                fmt17(self.sup_location[i]),
                fmt17(self.local_exponent[i])
            )?;
        }
        Ok(())
    }
}

pub fn write_snapshot_csv<W: Write>(snap: &RadialField, mut w: W) -> std::io::Result<()> {
    writeln!(w, "r,u")?;
    for (r, u) in snap.r_grid.iter().zip(&snap.values) {
        writeln!(w, "{},{}", fmt17(*r), fmt17(*u))?;
    }
    Ok(())
}
