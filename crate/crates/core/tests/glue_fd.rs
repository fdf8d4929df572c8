//! Finite-difference check of the error decomposition of the glued ansatz with φ = ψ = 0:
//! u_t − Δu − |u|u = −(λ⁻⁴(λλ̇Z + 2λ²Uθ)η(ỹ)η_R + 𝒩 + ℰ̃).

use glueheat::bubble::{bubble_u, kernel_z};
use glueheat::field::ZeroField;
use glueheat::glue::Glue;
use glueheat::modulation::{separated_lambda_init, solve_lambda0, solve_mu, ModulationOpts, MuOpts, OmegaSweep, RateFunction};
use glueheat::profile::{solve_theta, ProfileParams};

fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

fn check(a: f64) {
    let rate = RateFunction::log();
    let sweep = OmegaSweep::standard().unwrap();
    let prof = solve_theta(ProfileParams::new(a)).unwrap();
    let opts = ModulationOpts { lambda_init: separated_lambda_init(&rate, 1e3), ..Default::default() };
    let tr = solve_lambda0(a, &rate, 1e3, 1e6, opts, &sweep).unwrap();
    let tr = solve_mu(&tr, &prof, &ZeroField, MuOpts::default()).unwrap();
    let g = Glue::new(&tr, &prof, &ZeroField, &ZeroField).unwrap();
    for &t in &[3.7e3, 4.1e4] {
        let st = g.state(t).unwrap();
        let l = st.lambda;
        let sq = t.sqrt();
        let mut radii: Vec<f64> = [0.3, 1.0, 3.0, 10.0, 40.0].iter().map(|k| k * l).collect();
        radii.extend([1.5 * l * st.r_cut, 0.5 * sq, 1.2 * sq, 1.7 * sq, 3.0 * sq]);
        for r in radii {
            let ht = 2e-3 * t;
            let hr = 1e-2 * l * (1.0 + r / l).min(50.0);
            let ur = |x: f64| g.u(x.abs(), &st);
            let ut = d1(|s: f64| g.u(r, &g.state(s).unwrap()), t, ht);
            let lap = d2(ur, r, hr) + 5.0 / r * d1(ur, r, hr);
            let u = g.u(r, &st);
            let res = ut - lap - u.abs() * u;
            let p = g.pieces(r, &st);
            let pt = g.terms(r, &st).unwrap();
            let inhom = l * st.dlambda * kernel_z(p.y) + 2.0 * l * l * bubble_u(p.y) * p.theta;
            let pred = -(inhom * p.eta_t * p.eta_r / l.powi(4) + pt.n + pt.etilde_sum());
            let scale = ut.abs() + lap.abs() + u * u;
            assert!((res - pred).abs() <= 1e-5 * scale, "A={a} t={t} r={r}: residual {res:e} vs {pred:e} (scale {scale:e})");
        }
    }
}

#[test]
fn error_decomposition_matches_finite_differences_positive_amplitude() {
    check(0.05);
}

#[test]
fn error_decomposition_matches_finite_differences_negative_amplitude() {
    check(-0.05);
}
