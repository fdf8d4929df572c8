//! Slowly growing cutoff scales R(t).

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::log_grid;

#[derive(Debug, Clone, PartialEq)]
pub enum RateKind {
    Log,
    SqrtLog,
    SqrtLogLogLog,
    /// R = c + k·log t.
    Blend { c: f64, k: f64 },
    /// Log–log interpolation of user samples, extrapolated with the last slope.
    Table { t: Vec<f64>, r: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    pub kind: RateKind,
    /// Below this time the function is frozen at its value there.
    pub t_floor: f64,
}

impl RateFunction {
    pub fn log() -> Self {
        Self { kind: RateKind::Log, t_floor: std::f64::consts::E }
    }

    pub fn sqrt_log() -> Self {
        Self { kind: RateKind::SqrtLog, t_floor: std::f64::consts::E }
    }

    pub fn sqrt_log_loglog() -> Self {
        Self { kind: RateKind::SqrtLogLogLog, t_floor: std::f64::consts::E.exp() }
    }

    pub fn blend(c: f64, k: f64) -> Result<Self> {
        if !(c >= 1.0 && k >= 0.0) {
            return Err(Error::Domain(format!("blend needs c >= 1 and k >= 0, got c={c}, k={k}")));
        }
        Ok(Self { kind: RateKind::Blend { c, k }, t_floor: 1.0 })
    }

    pub fn table(t: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != r.len() {
            return Err(Error::Config("rate table needs at least two (t, R) rows".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || t[0] <= 0.0 {
            return Err(Error::Config("rate table times must be positive and increasing".into()));
        }
        if r.iter().any(|&v| !(v >= 1.0)) {
            return Err(Error::Config("rate table values must be at least 1".into()));
        }
        Ok(Self { t_floor: t[0], kind: RateKind::Table { t, r } })
    }

    /// Rows `t R` or `t,R`; `#` starts a comment.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut t = Vec::new();
        let mut r = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!("bad rate table row: {line}")));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number in rate table: {s}")));
            t.push(parse(cols[0])?);
            r.push(parse(cols[1])?);
        }
        Self::table(t, r)
    }

    /// `log`, `sqrtlog`, `sqrtlogloglog`, `blend:c:k` or `table:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "log" => Ok(Self::log()),
            "sqrtlog" => Ok(Self::sqrt_log()),
            "sqrtlogloglog" => Ok(Self::sqrt_log_loglog()),
            _ => {
                if let Some(p) = spec.strip_prefix("table:") {
                    Self::from_table_file(Path::new(p))
                } else if let Some(rest) = spec.strip_prefix("blend:") {
                    let v: Vec<f64> = rest.split(':').filter_map(|s| s.parse().ok()).collect();
                    if v.len() != 2 {
                        return Err(Error::Config(format!("blend needs blend:c:k, got {spec}")));
                    }
                    Self::blend(v[0], v[1])
                } else {
                    Err(Error::Config(format!("unknown rate function {spec}")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            RateKind::Log => "log".into(),
            RateKind::SqrtLog => "sqrtlog".into(),
            RateKind::SqrtLogLogLog => "sqrtlogloglog".into(),
            RateKind::Blend { c, k } => format!("blend:{c}:{k}"),
            RateKind::Table { .. } => "table".into(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let t = t.max(self.t_floor);
        match &self.kind {
            RateKind::Log => t.ln(),
            RateKind::SqrtLog => t.ln().sqrt(),
            RateKind::SqrtLogLogLog => {
                let l = t.ln();
                (l * l.ln()).sqrt()
            }
            RateKind::Blend { c, k } => c + k * t.ln(),
            RateKind::Table { t: ts, r } => {
                let (i, s) = table_segment(ts, r, t);
                (r[i].ln() + s * (t.ln() - ts[i].ln())).exp()
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t < self.t_floor {
            return 0.0;
        }
        match &self.kind {
            RateKind::Log => 1.0 / t,
            RateKind::SqrtLog => 0.5 / (t * t.ln().sqrt()),
            RateKind::SqrtLogLogLog => {
                let l = t.ln();
                (l.ln() + 1.0) / (2.0 * t * (l * l.ln()).sqrt())
            }
            RateKind::Blend { k, .. } => k / t,
            RateKind::Table { t: ts, r } => {
                let (_, s) = table_segment(ts, r, t);
                s * self.value(t) / t
            }
        }
    }

    /// Whether R(t) → ∞.
    pub fn diverges(&self) -> bool {
        match &self.kind {
            RateKind::Blend { k, .. } => *k > 0.0,
            RateKind::Table { t, r } => {
                let n = t.len();
                (r[n - 1].ln() - r[n - 2].ln()) / (t[n - 1].ln() - t[n - 2].ln()) > 0.0
            }
            _ => true,
        }
    }
}

fn table_segment(ts: &[f64], r: &[f64], t: f64) -> (usize, f64) {
    let n = ts.len();
    let i = ts.partition_point(|&v| v <= t).saturating_sub(1).min(n - 2);
    let s = (r[i + 1].ln() - r[i].ln()) / (ts[i + 1].ln() - ts[i].ln());
    (i, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct Admissibility {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Smallest C̄ with R'/R ≤ C̄/(t log t) on the scan grid.
    pub c_bar: f64,
    pub nonneg_derivative: bool,
    pub diverges: bool,
    /// R(t) ≤ R(t_lo)(log t)^C̄ on the scan grid.
    pub subpolynomial: bool,
    pub admissible: bool,
}

pub fn check_rate_admissible(rate: &RateFunction, t_lo: f64, t_hi: f64) -> Result<Admissibility> {
    if !(t_lo > std::f64::consts::E) || !(t_hi > t_lo) {
        return Err(Error::Domain(format!("admissibility scan needs e < t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    let grid = log_grid(t_lo, t_hi, 2001);
    let mut c_bar = 0.0f64;
    let mut nonneg = true;
    for &t in &grid {
        let d = rate.derivative(t);
        if d < 0.0 {
            nonneg = false;
        }
        c_bar = c_bar.max(t * t.ln() * d / rate.value(t));
    }
    let r_lo = rate.value(t_lo);
    let subpolynomial = grid.iter().all(|&t| rate.value(t) <= r_lo * t.ln().powf(c_bar) * (1.0 + 1e-12));
    let diverges = rate.diverges();
    Ok(Admissibility {
        t_lo,
        t_hi,
        c_bar,
        nonneg_derivative: nonneg,
        diverges,
        subpolynomial,
        admissible: nonneg && diverges && subpolynomial && c_bar.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let kinds = [
            RateFunction::log(),
            RateFunction::sqrt_log(),
            RateFunction::sqrt_log_loglog(),
            RateFunction::blend(2.0, 0.5).unwrap(),
            RateFunction::table(vec![10.0, 1e3, 1e6], vec![1.0, 2.0, 5.0]).unwrap(),
        ];
        for r in &kinds {
            for &t in &[50.0, 3.3e4, 2e7] {
                let h = 1e-6 * t;
                let fd = (r.value(t + h) - r.value(t - h)) / (2.0 * h);
                assert!((fd - r.derivative(t)).abs() <= 1e-6 * fd.abs(), "{}", r.name());
            }
        }
    }

    #[test]
    fn frozen_below_floor() {
        let r = RateFunction::log();
        assert_eq!(r.value(1.0), 1.0);
        assert_eq!(r.derivative(2.0), 0.0);
    }
}
