//! Radial fields: sampled snapshots, the zero field, and model perturbations
//! sized by the inner and outer weights.

use crate::interp::{hermite_eval, locate};
use crate::modulation::RateFunction;

/// Scale parameters of the construction at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleState {
    pub t: f64,
    pub lambda: f64,
    pub dlambda: f64,
    pub lambda0: f64,
    pub r_cut: f64,
    pub dr_cut: f64,
    pub sigma: f64,
}

/// An outer perturbation ψ(x, t), radial in x.
pub trait OuterField: Sync {
    fn value(&self, x: f64, st: &ScaleState) -> f64;
    /// Radial derivative, if the field carries one.
    fn radial_derivative(&self, x: f64, st: &ScaleState) -> Option<f64>;
    fn is_zero(&self) -> bool {
        false
    }
}

/// An inner perturbation φ(y, t), radial in y.
pub trait InnerField: Sync {
    fn value(&self, y: f64, st: &ScaleState) -> f64;
    fn radial_derivative(&self, y: f64, st: &ScaleState) -> Option<f64>;
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl OuterField for ZeroField {
    fn value(&self, _: f64, _: &ScaleState) -> f64 {
        0.0
    }
    fn radial_derivative(&self, _: f64, _: &ScaleState) -> Option<f64> {
        Some(0.0)
    }
    fn is_zero(&self) -> bool {
        true
    }
}

impl InnerField for ZeroField {
    fn value(&self, _: f64, _: &ScaleState) -> f64 {
        0.0
    }
    fn radial_derivative(&self, _: f64, _: &ScaleState) -> Option<f64> {
        Some(0.0)
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Samples of a radial function at a single time.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub t: f64,
    pub r_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

impl RadialField {
    pub fn new(t: f64, r_grid: Vec<f64>, values: Vec<f64>, gradient: Option<Vec<f64>>) -> Self {
        debug_assert!(r_grid.windows(2).all(|w| w[1] > w[0]));
        debug_assert_eq!(r_grid.len(), values.len());
        Self { t, r_grid, values, gradient }
    }

    /// Hermite when slopes are stored, linear otherwise; zero outside the grid.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.r_grid.len();
        if n == 0 || r < self.r_grid[0] || r > self.r_grid[n - 1] {
            return 0.0;
        }
        if n == 1 {
            return self.values[0];
        }
        match &self.gradient {
            Some(d) => hermite_eval(&self.r_grid, &self.values, d, r).0,
            None => {
                let i = locate(&self.r_grid, r);
                let w = (r - self.r_grid[i]) / (self.r_grid[i + 1] - self.r_grid[i]);
                self.values[i] * (1.0 - w) + self.values[i + 1] * w
            }
        }
    }

    pub fn eval_derivative(&self, r: f64) -> Option<f64> {
        let d = self.gradient.as_ref()?;
        let n = self.r_grid.len();
        if n < 2 || r < self.r_grid[0] || r > self.r_grid[n - 1] {
            return Some(0.0);
        }
        Some(hermite_eval(&self.r_grid, &self.values, d, r).1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl OuterField for RadialField {
    fn value(&self, x: f64, _: &ScaleState) -> f64 {
        self.eval(x)
    }
    fn radial_derivative(&self, x: f64, _: &ScaleState) -> Option<f64> {
        self.eval_derivative(x)
    }
}

impl InnerField for RadialField {
    fn value(&self, y: f64, _: &ScaleState) -> f64 {
        self.eval(y)
    }
    fn radial_derivative(&self, y: f64, _: &ScaleState) -> Option<f64> {
        self.eval_derivative(y)
    }
}

/// w_out(x,t) = t⁻¹R^{-a₁}[1_{|x|≤√t} + t|x|⁻²1_{|x|≥√t}].
pub fn w_out(x: f64, t: f64, r_cut: f64, a1: f64) -> f64 {
    let base = r_cut.powf(-a1) / t;
    if x * x <= t {
        base
    } else {
        base * t / (x * x)
    }
}

/// w_in(y,t) = σ⁻¹R^{7-a}⟨y⟩⁻⁷.
pub fn w_in(y: f64, sigma: f64, r_cut: f64, a: f64) -> f64 {
    r_cut.powf(7.0 - a) / sigma * (1.0 + y * y).powf(-3.5)
}

/// ψ = c|A|t⁻¹R^{-a₁}(1 + |x|²/t)⁻¹, which lies under |A|w_out for |c| ≤ 1.
#[derive(Debug, Clone)]
pub struct ModelOuter {
    pub coeff: f64,
    pub amplitude: f64,
    pub a1: f64,
    pub rate: RateFunction,
}

impl OuterField for ModelOuter {
    fn value(&self, x: f64, st: &ScaleState) -> f64 {
        let t = st.t;
        self.coeff * self.amplitude.abs() * self.rate.value(t).powf(-self.a1) / (t + x * x)
    }
    fn radial_derivative(&self, x: f64, st: &ScaleState) -> Option<f64> {
        let t = st.t;
        let d = t + x * x;
        Some(-2.0 * x * self.coeff * self.amplitude.abs() * self.rate.value(t).powf(-self.a1) / (d * d))
    }
    fn is_zero(&self) -> bool {
        self.coeff == 0.0 || self.amplitude == 0.0
    }
}

/// φ = c·w_in; inside the unit ball of the inner norm when |c| ≤ 1/8.
#[derive(Debug, Clone, Copy)]
pub struct ModelInner {
    pub coeff: f64,
    pub a: f64,
}

impl InnerField for ModelInner {
    fn value(&self, y: f64, st: &ScaleState) -> f64 {
        self.coeff * w_in(y, st.sigma, st.r_cut, self.a)
    }
    fn radial_derivative(&self, y: f64, st: &ScaleState) -> Option<f64> {
        Some(-7.0 * y / (1.0 + y * y) * self.value(y, st))
    }
    fn is_zero(&self) -> bool {
        self.coeff == 0.0
    }
}
