use std::sync::{Arc, OnceLock};

use glueheat::bubble::ortho_ratio;
use glueheat::field::{w_out, ZeroField};
use glueheat::glue::{eta, Glue};
use glueheat::kernel::{duhamel, SourceSpec};
use glueheat::modulation::{
    check_rate_admissible, separated_lambda_init, solve_lambda0, solve_mu, ModulationOpts, ModulationTrajectory,
    MuOpts, OmegaSweep, RateFunction,
};
use glueheat::profile::{solve_theta, tilde_theta, ProfileParams, ProfileSolution};
use proptest::prelude::*;

fn sweep() -> &'static OmegaSweep {
    static S: OnceLock<OmegaSweep> = OnceLock::new();
    S.get_or_init(|| OmegaSweep::standard().unwrap())
}

/// A = ±0.05 trajectories on [1e3, 1e6] with separated initial scale.
fn context(positive: bool) -> &'static (ModulationTrajectory, ProfileSolution) {
    static P: OnceLock<(ModulationTrajectory, ProfileSolution)> = OnceLock::new();
    static N: OnceLock<(ModulationTrajectory, ProfileSolution)> = OnceLock::new();
    let cell = if positive { &P } else { &N };
    cell.get_or_init(|| {
        let a = if positive { 0.05 } else { -0.05 };
        let rate = RateFunction::log();
        let prof = solve_theta(ProfileParams::new(a)).unwrap();
        let opts = ModulationOpts { lambda_init: separated_lambda_init(&rate, 1e3), ..Default::default() };
        let tr = solve_lambda0(a, &rate, 1e3, 1e6, opts, sweep()).unwrap();
        (solve_mu(&tr, &prof, &ZeroField, MuOpts::default()).unwrap(), prof)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eta_is_a_monotone_unit_step(r in 0.0f64..3.0, dr in 0.0f64..0.5) {
        let (a, b) = (eta(r), eta(r + dr));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a);
        if r <= 1.0 { prop_assert_eq!(a, 1.0); }
        if r >= 2.0 { prop_assert_eq!(a, 0.0); }
    }

    #[test]
    fn w_out_is_continuous_at_the_parabolic_radius(t in 1e3f64..1e8, rc in 2.0f64..30.0, a1 in 0.1f64..0.9) {
        let sq = t.sqrt();
        let lo = w_out(sq * (1.0 - 1e-12), t, rc, a1);
        let hi = w_out(sq * (1.0 + 1e-12), t, rc, a1);
        prop_assert!((lo - hi).abs() <= 1e-10 * lo);
        prop_assert!(w_out(3.0 * sq, t, rc, a1) < lo);
    }

    #[test]
    fn inner_cutoff_lies_inside_bubble_cutoff(logt in 3.0f64..6.0, s in 0.0f64..3.0, positive in any::<bool>()) {
        let (tr, prof) = context(positive);
        let g = Glue::new(tr, prof, &ZeroField, &ZeroField).unwrap();
        let st = g.state(10f64.powf(logt)).unwrap();
        let p = g.pieces(s * st.lambda * st.r_cut, &st);
        prop_assert_eq!(p.eta_t * p.eta_r, p.eta_r);
    }

    #[test]
    fn nonlinear_remainder_identities(logt in 3.0f64..6.0, logr in -3.0f64..3.5, positive in any::<bool>()) {
        let (tr, prof) = context(positive);
        let g = Glue::new(tr, prof, &ZeroField, &ZeroField).unwrap();
        let t = 10f64.powf(logt);
        let st = g.state(t).unwrap();
        let r = st.lambda * 10f64.powf(logr);
        let pt = g.terms(r, &st).unwrap();
        let p = g.pieces(r, &st);
        let scale = p.u().powi(2) + p.bubble.powi(2) + p.theta.powi(2);
        prop_assert!((pt.n - pt.n_definitional).abs() <= 1e-12 * scale);
        // φ = 0 here, so the mean-value form applies everywhere
        prop_assert!((pt.n - pt.n_mean_value).abs() <= 1e-9 * scale);
    }

    #[test]
    fn profile_stays_under_comparison(a in 0.005f64..0.1, r in 0.0f64..300.0) {
        let sol = solve_theta(ProfileParams::new(a)).unwrap();
        let (th, _) = sol.eval(r);
        prop_assert!(th <= a * tilde_theta(r).unwrap() + 1e-12);
        prop_assert!(th >= 0.5 * a * tilde_theta(r).unwrap());
    }

    #[test]
    fn ratio_excess_positive_and_decreasing(r in 2.0f64..900.0, f in 1.01f64..2.0) {
        let a = ortho_ratio(r).unwrap();
        let b = ortho_ratio(r * f).unwrap();
        prop_assert!(a.ratio > 1.25 && b.ratio < a.ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn blended_rates_are_admissible(c in 1.0f64..4.0, k in 0.05f64..1.0) {
        let rate = RateFunction::blend(c, k).unwrap();
        let adm = check_rate_admissible(&rate, 1e3, 1e9).unwrap();
        prop_assert!(adm.admissible, "{:?}", adm);
    }

    #[test]
    fn sigma_increases_and_beta_t_tends_to_linear_rate(a in -0.05f64..0.05) {
        let rate = RateFunction::log();
        let tr = solve_lambda0(a, &rate, 1e3, 1e9, ModulationOpts::default(), sweep()).unwrap();
        prop_assert!(tr.sigma.windows(2).all(|w| w[1] > w[0]));
        let bt = tr.beta_t();
        let last = *bt.last().unwrap();
        prop_assert!((last - 1.25 * a).abs() <= 0.02 * a.abs() + 1e-12, "{} vs {}", last, 1.25 * a);
    }

    #[test]
    fn duhamel_is_monotone_in_the_source(c1 in 0.0f64..1.0, dc in 0.0f64..1.0, x in 0.0f64..200.0, ft in 1.2f64..20.0) {
        let t0 = 1e3;
        let small = SourceSpec::band(Arc::new(move |s: f64| c1 / s), 4, Arc::new(|s: f64| 0.2 * s.sqrt()), Arc::new(|s: f64| s.sqrt()), t0).unwrap();
        let c2 = c1 + dc;
        let big = SourceSpec::band(Arc::new(move |s: f64| c2 / s), 4, Arc::new(|s: f64| 0.1 * s.sqrt()), Arc::new(|s: f64| 2.0 * s.sqrt()), t0).unwrap();
        let t = ft * t0;
        let (a, b) = (duhamel(&small, x, t, t0).unwrap(), duhamel(&big, x, t, t0).unwrap());
        prop_assert!(a >= 0.0);
        prop_assert!(a <= b * (1.0 + 1e-8) + 1e-300);
    }
}
