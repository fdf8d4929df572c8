//! Independent reference computations, with frozen values.

use approx::assert_relative_eq;
use glueheat::bubble::{bubble_u, kernel_z, ortho_ratio, ortho_ratio_direct, radial_integral, solve_eigenpair};
use glueheat::kernel::bessel_tilde;
use glueheat::profile::{solve_theta, tilde_theta, ProfileParams};

const PI3: f64 = std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

/// e^{-z}I₂(z)/z² from I₂(z) = π⁻¹∫₀^π e^{z cos θ}cos 2θ dθ; the periodic
/// trapezoid rule converges geometrically.
fn bessel_tilde_oracle(z: f64) -> f64 {
    let n = 4000;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.0;
    for k in 0..=n {
        let th = k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        s += w * (z * (th.cos() - 1.0)).exp() * (2.0 * th).cos();
    }
    s * h / std::f64::consts::PI / (z * z)
}

/// e^{-z}M(2,3;z) summed from the Kummer series, z = r²/4.
fn kummer_oracle(r: f64) -> f64 {
    let z = r * r / 4.0;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..400 {
        let kf = k as f64;
        if k > 0 {
            term *= z / kf;
        }
        sum += 2.0 / (kf + 2.0) * term;
        if term < 1e-18 * sum && k > 5 {
            break;
        }
    }
    (-z).exp() * sum
}

#[test]
fn bessel_tilde_matches_integral_representation() {
    for &z in &[0.5, 1.0, 3.0, 10.0, 24.9, 25.1, 40.0, 120.0] {
        assert_relative_eq!(bessel_tilde(z), bessel_tilde_oracle(z), max_relative = 1e-11);
    }
    // frozen oracle values
    assert_relative_eq!(bessel_tilde_oracle(1.0), 0.049_938_776_894_223_54, max_relative = 1e-12);
    assert_relative_eq!(bessel_tilde_oracle(10.0), 0.001_035_808_008_865_376, max_relative = 1e-12);
}

#[test]
fn tilde_theta_matches_kummer_series() {
    for &r in &[0.3, 1.0, 2.5, 6.0, 12.0] {
        assert_relative_eq!(tilde_theta(r).unwrap(), kummer_oracle(r), max_relative = 1e-12);
    }
    assert_relative_eq!(kummer_oracle(2.0), 0.735_758_882_342_884_7, max_relative = 1e-13);
    assert!(tilde_theta(-1.0).is_err());
}

#[test]
fn tilde_theta_tail_coefficient_is_eight() {
    for &r in &[1e3, 1e4] {
        assert_relative_eq!(r * r * tilde_theta(r).unwrap(), 8.0, max_relative = 1e-5);
    }
}

#[test]
fn ell_over_a_approaches_tilde_tail() {
    let frozen = [(0.1, 7.146), (0.05, 7.551), (0.02, 7.815), (0.01, 7.906)];
    let mut prev = 0.0;
    for (a, want) in frozen {
        let sol = solve_theta(ProfileParams::new(a)).unwrap();
        let q = sol.ell / a;
        assert!((q - want).abs() < 2e-3, "A={a}: {q}");
        assert!(q > prev);
        prev = q;
    }
    assert!((prev / 8.0 - 1.0).abs() < 0.05);
}

#[test]
fn bubble_norms_close_form() {
    let u = radial_integral(|r| bubble_u(r).powi(2), 0.0, f64::INFINITY, 1e-13).unwrap();
    let z = radial_integral(|r| kernel_z(r).powi(2), 0.0, f64::INFINITY, 1e-13).unwrap();
    assert_relative_eq!(u, 13824.0 * PI3 / 6.0, max_relative = 1e-10);
    assert_relative_eq!(z, 4.0 * 13824.0 * PI3 / 15.0, max_relative = 1e-10);
}

#[test]
fn ratio_tail_form_matches_direct_quotient() {
    for &r in &[2.0, 5.0, 20.0, 50.0] {
        assert_relative_eq!(ortho_ratio(r).unwrap().ratio, ortho_ratio_direct(r).unwrap(), max_relative = 1e-9);
    }
    assert!((ortho_ratio(1.0).unwrap().ratio + 2.174).abs() < 1e-3);
    assert!((ortho_ratio(2.0).unwrap().ratio - 1.038).abs() < 1e-3);
}

/// Ground state of Δ + 2U: bisection on the far-field sign of a fixed-step RK4 shot.
fn gamma0_oracle() -> f64 {
    let shoot = |g: f64| -> f64 {
        let f = |r: f64, p: f64, q: f64| (q, -5.0 / r * q - 2.0 * bubble_u(r) * p + g * p);
        let (mut r, mut p, mut q) = (1e-4, 1.0, 0.0);
        let h = 2e-3;
        while r < 40.0 {
            let (a1, b1) = f(r, p, q);
            let (a2, b2) = f(r + h / 2.0, p + h / 2.0 * a1, q + h / 2.0 * b1);
            let (a3, b3) = f(r + h / 2.0, p + h / 2.0 * a2, q + h / 2.0 * b2);
            let (a4, b4) = f(r + h, p + h * a3, q + h * b3);
            p += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            q += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            r += h;
            if p.abs() > 1e8 {
                break;
            }
        }
        p
    };
    let (mut lo, mut hi) = (0.05, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        // too large a γ: growing mode without a node
        if shoot(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn unstable_eigenvalue_matches_shooting_oracle() {
    let oracle = gamma0_oracle();
    assert!((oracle - 0.281_748_473).abs() < 1e-6, "oracle {oracle}");
    let eig = solve_eigenpair(60.0, 1e-10).unwrap();
    assert!((eig.gamma0 - oracle).abs() < 1e-6);
    assert!((eig.gamma0 - 0.281_748_473_0).abs() < 1e-9);
}
