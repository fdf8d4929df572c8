//! Bound reports and deterministic CSV/JSON output.

use std::io::Write;

use serde::Serialize;

/// Round-trip float formatting with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub const UNIFORMITY_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundSample {
    pub t: f64,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundSample {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else if self.rhs == 0.0 {
            f64::INFINITY
        } else {
            self.lhs.abs() / self.rhs
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub name: String,
    #[serde(skip)]
    pub samples: Vec<BoundSample>,
    pub fitted_c: f64,
    /// Largest per-decade constant divided by the first decade's constant.
    pub uniformity: f64,
    pub decade_constants: Vec<f64>,
    pub pass: bool,
}

impl BoundReport {
    /// Decades are counted from the earliest sample time.
    pub fn from_samples(name: impl Into<String>, samples: Vec<BoundSample>) -> Self {
        let t_first = samples.iter().map(|s| s.t).fold(f64::INFINITY, f64::min);
        let mut decades: Vec<f64> = Vec::new();
        let mut fitted = 0.0f64;
        for s in &samples {
            let k = ((s.t / t_first).log10() + 1e-9).floor().max(0.0) as usize;
            if decades.len() <= k {
                decades.resize(k + 1, 0.0);
            }
            let q = s.ratio();
            decades[k] = decades[k].max(q);
            fitted = fitted.max(q);
        }
        let first = decades.first().copied().unwrap_or(0.0);
        let later = decades.iter().copied().fold(0.0, f64::max);
        let uniformity = if later == 0.0 {
            1.0
        } else if first == 0.0 {
            f64::INFINITY
        } else {
            later / first
        };
        let pass = !samples.is_empty() && fitted.is_finite() && uniformity < UNIFORMITY_LIMIT;
        Self { name: name.into(), samples, fitted_c: fitted, uniformity, decade_constants: decades, pass }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,r,lhs,rhs,ratio")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{}", fmt17(s.t), fmt17(s.r), fmt17(s.lhs), fmt17(s.rhs), fmt17(s.ratio()))?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "fitted_C": json_num(self.fitted_c),
            "uniformity": json_num(self.uniformity),
            "pass": self.pass,
        })
    }
}

/// Non-finite values become strings so the JSON stays valid.
pub fn json_num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(format!("{x}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: f64, lhs: f64, rhs: f64) -> BoundSample {
        BoundSample { t, r: 1.0, lhs, rhs }
    }

    #[test]
    fn uniformity_relative_to_first_decade() {
        let r = BoundReport::from_samples("x", vec![s(1e3, 1.0, 1.0), s(2e4, 2.0, 1.0), s(5e5, 0.5, 1.0)]);
        assert_eq!(r.decade_constants, vec![1.0, 2.0, 0.5]);
        assert_eq!(r.uniformity, 2.0);
        assert!(r.pass);
    }

    #[test]
    fn all_zero_passes_and_uncovered_fails() {
        assert!(BoundReport::from_samples("z", vec![s(1e3, 0.0, 0.0)]).pass);
        let bad = BoundReport::from_samples("b", vec![s(1e3, 1.0, 0.0)]);
        assert!(!bad.pass && bad.fitted_c.is_infinite());
    }

    #[test]
    fn float_format_round_trips() {
        let x = 0.1 + 0.2;
        assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }
}
