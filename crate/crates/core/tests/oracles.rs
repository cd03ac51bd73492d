//! Reference values computed independently of the library code paths.

use qhd_lab_core::energy_estimates::{energy_report, evaluate_f1_f2};
use qhd_lab_core::essential_spectrum::{
    border_for_coefficients, essential_stability_verdict, fredholm_borders, xi_grid, Side,
};
use qhd_lab_core::point_spectrum::{
    assemble_frozen_periodic, assemble_integrated, assemble_original, eigen_solve, zero_mode_residual, Closure,
    EigenOptions,
};
use qhd_lab_core::profile::{
    decay_rates, default_half_length, linear_rates, reduced_coefficient, reduced_tanh, solve_profile,
    solve_profile_with, SolverOptions,
};
use qhd_lab_core::shock_data::{critical_point_p0, flux_constant_a, lax_end_states};
use qhd_lab_core::{Complex64, Error, ShockParams};

fn benchmark() -> ShockParams {
    ShockParams::from_right_state(1.5, 0.1, 0.5, 0.519, 0.2, -0.418).unwrap()
}

fn small(eps: f64) -> ShockParams {
    ShockParams::new(1.5, 0.5, 0.25, 2.0, eps, 1.45).unwrap()
}

#[test]
fn benchmark_flux_constant_and_speed() {
    // A² = P⁻P⁺ (P⁻^γ − P⁺^γ)/ε evaluated by hand: 0.719 · 0.519 · (0.609680… − 0.373895…)/0.2
    let (pm, pp) = (0.719f64, 0.519f64);
    let a = (pm * pp * (pm.powf(1.5) - pp.powf(1.5)) / 0.2).sqrt();
    assert!((a - 0.66325).abs() < 5e-6, "A = {a}");
    assert!((flux_constant_a(pm, 0.2, 1.5).unwrap() - a).abs() < 1e-15);
    let p = benchmark();
    assert!((p.s - (-0.418 + a) / pp).abs() < 1e-14);
    let es = lax_end_states(&p).unwrap();
    assert!((es.j_plus + 0.418).abs() < 1e-14);
    assert!(es.lax2 && es.subsonic_minus);
}

#[test]
fn p0_is_the_minimum_of_f() {
    let p = benchmark();
    let es = lax_end_states(&p).unwrap();
    let p0 = critical_point_p0(&es);
    // golden-section search on f between the roots
    let (mut lo, mut hi) = (es.p_plus, es.p_minus);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (x1, x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if es.f_ab(x1) < es.f_ab(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    assert!((0.5 * (lo + hi) - p0).abs() < 1e-7, "{} vs {p0}", 0.5 * (lo + hi));
}

#[test]
fn supersonic_state_is_flagged_unstable() {
    let p = benchmark();
    let xi = xi_grid(5.0, 401);
    let bad = border_for_coefficients(0.5, 0.2, &p, &xi, Side::Plus);
    let v = essential_stability_verdict(&[bad.clone(), bad]);
    assert!(!v.pass);
    assert!(v.max_re > 0.0);
    // the growth is a small-ξ effect
    assert!(v.argmax_xi.abs() < 2.0, "argmax ξ = {}", v.argmax_xi);
}

#[test]
fn no_spectral_gap_at_the_origin() {
    let p = benchmark();
    let es = lax_end_states(&p).unwrap();
    let v = essential_stability_verdict(&fredholm_borders(&es, &p, 20.0, 4001));
    assert!(v.pass);
    let sups: Vec<f64> = v.gap_probe.iter().map(|g| g.sup_re).collect();
    assert!(sups.windows(2).all(|w| w[1] >= w[0]), "{sups:?}");
    assert!(sups.iter().all(|s| *s < 0.0));
    assert!(sups.last().unwrap().abs() < 1e-6);
}

#[test]
fn reduced_riccati_profile_is_the_small_amplitude_limit() {
    // max |(P − mid)/ε − R(εy)| should shrink roughly in proportion to ε
    let mut dev = Vec::new();
    for (eps, n) in [(0.02, 8001), (0.04, 4001)] {
        let p = small(eps);
        let es = lax_end_states(&p).unwrap();
        let prof = solve_profile(&p, &es, default_half_length(eps), n, 1e-10).unwrap();
        let mid = 0.5 * (es.p_plus + es.p_minus);
        let c = reduced_coefficient(&p);
        let d = prof
            .grid
            .iter()
            .zip(&prof.p)
            .map(|(y, v)| ((v - mid) / eps - reduced_tanh(c, eps * y)).abs())
            .fold(0.0, f64::max);
        dev.push(d);
    }
    let ratio = dev[1] / dev[0];
    assert!(dev[0] < 0.05, "{dev:?}");
    assert!((1.5..3.0).contains(&ratio), "ratio {ratio}, {dev:?}");
}

#[test]
fn decay_rate_halves_with_amplitude() {
    let theta: Vec<f64> = [0.1, 0.2]
        .iter()
        .map(|&eps| {
            let p = small(eps);
            let es = lax_end_states(&p).unwrap();
            let prof = solve_profile(&p, &es, default_half_length(eps), 4001, 1e-10).unwrap();
            let d = decay_rates(&prof, &p, &es);
            // fitted tail agrees with the linearization at P⁺
            assert!((d.plus.theta - d.linear.theta_plus()).abs() < 0.05 * d.linear.theta_plus(), "{d:?}");
            d.plus.theta
        })
        .collect();
    let ratio = theta[0] / theta[1];
    assert!((ratio - 0.5).abs() <= 0.1, "ratio {ratio}");
}

#[test]
fn profile_derivative_bounds_on_a_monotone_case() {
    let p = small(0.1);
    let es = lax_end_states(&p).unwrap();
    let prof = solve_profile(&p, &es, 400.0, 4001, 1e-10).unwrap();
    assert!(prof.monotonicity().strictly_decreasing);
    assert!(prof.within_end_states(&es, 1e-10));
    assert!(prof.flux_identity_defect(&es) < 1e-13);
    assert!(prof.bc_mismatch < 1e-10);
    // ODE rescaled by ε²: |P'| ≲ ε², |P''| ≲ ε|P'|
    assert!(prof.max_abs_dp() < 1.0 * 0.01);
    assert!(prof.max_abs_d2p() < 1.0 * 0.1 * prof.max_abs_dp());
}

#[test]
fn newton_failure_is_reported() {
    let p = small(0.1);
    let es = lax_end_states(&p).unwrap();
    let err = solve_profile_with(&p, &es, 400.0, 2001, SolverOptions { tol: 1e-14, max_iter: 1 }).unwrap_err();
    assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }), "{err}");
}

#[test]
fn flux_forms_and_g_agree_on_a_profile() {
    let p = small(0.1);
    let es = lax_end_states(&p).unwrap();
    let prof = solve_profile(&p, &es, 400.0, 4001, 1e-10).unwrap();
    let flux = evaluate_f1_f2(&prof, &es, &p);
    assert!(flux.max_form_defect() <= 1e-12);
    // f1 = u² − c_s², f2 = s − 2u with u = J/P
    for i in (0..prof.len()).step_by(97) {
        let u = prof.j[i] / prof.p[i];
        let f1 = u * u - 1.5 * prof.p[i].sqrt();
        assert!((flux.f1[i] - f1).abs() < 1e-13, "{} vs {f1}", flux.f1[i]);
        assert!((flux.f2[i] - (p.s - 2.0 * u)).abs() < 1e-13);
    }
    let r = energy_report(&prof, &es, &p).unwrap();
    assert!(r.g_expanded_defect <= 1e-10);
    assert!(r.pass, "{:?}", r.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    // the finite-difference g is a consistent discretization
    assert!(r.g_stencil_deviation < 1e-4, "{}", r.g_stencil_deviation);
}

fn symbol(xi: f64, alpha: f64, beta: f64, p: &ShockParams) -> [Complex64; 2] {
    // characteristic polynomial of [[iξs, −iξ], [iξα − iξ³k²/2, iξβ − μξ²]]
    let i = Complex64::i();
    let tr = i * xi * (p.s + beta) - p.mu * xi * xi;
    let det = -(xi * xi) * (p.s * beta + alpha) - i * p.mu * p.s * xi.powi(3) + 0.5 * p.k * p.k * xi.powi(4);
    let d = (tr * tr - 4.0 * det).sqrt();
    [(tr + d) / 2.0, (tr - d) / 2.0]
}

#[test]
fn frozen_operator_at_right_state_matches_dispersion() {
    let p = benchmark();
    let es = lax_end_states(&p).unwrap();
    let (half_l, n) = (16.0, 160usize);
    let op = assemble_frozen_periodic(&p, es.p_plus, es.j_plus, half_l, n).unwrap();
    let rep = eigen_solve(&op, &EigenOptions::default()).unwrap();
    assert_eq!(rep.matrix_dim, 2 * n);
    let u = es.j_plus / es.p_plus;
    let (alpha, beta) = (u * u - 1.5 * es.p_plus.sqrt(), p.s - 2.0 * u);
    for j in -3i32..=3 {
        let xi = std::f64::consts::PI * j as f64 / half_l;
        for t in symbol(xi, alpha, beta, &p) {
            let d = rep.eigenvalues.iter().map(|z| (z - t).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-3 * (1.0 + t.norm()), "ξ = {xi}: {t} off by {d:e}");
        }
    }
}

#[test]
fn integrated_operator_small_grid() {
    let p = benchmark().with_epsilon(0.05).unwrap();
    let es = lax_end_states(&p).unwrap();
    let le = 10.0 / linear_rates(&p, &es).slowest();
    let mut zero = Vec::new();
    for n in [300, 600] {
        let prof = solve_profile(&p, &es, le, n, 1e-10).unwrap();
        let op = assemble_integrated(&prof, &p, &es, Closure::Dirichlet).unwrap();
        let rep = eigen_solve(&op, &EigenOptions::default()).unwrap();
        assert_eq!(rep.eigenvalues.len(), 2 * (n - 2));
        assert!(rep.max_residual <= 1e-8, "{}", rep.max_residual);
        assert!(rep.conjugate_defect <= 1e-8);
        assert!(rep.max_re_point < 0.0);
        let orig = assemble_original(&prof, &p, &es, Closure::Dirichlet).unwrap();
        zero.push(zero_mode_residual(&orig, &prof, &p).unwrap());
        // the zero-mode check is only defined on the original operator
        assert!(zero_mode_residual(&op, &prof, &p).is_err());
    }
    let order = (zero[0] / zero[1]).log2();
    assert!(order > 3.0, "{zero:?}");
}

#[test]
fn dense_size_cap_is_enforced() {
    let p = benchmark().with_epsilon(0.05).unwrap();
    let es = lax_end_states(&p).unwrap();
    let prof = solve_profile(&p, &es, 50.0, 101, 1e-10).unwrap();
    let op = assemble_integrated(&prof, &p, &es, Closure::Dirichlet).unwrap();
    let err = eigen_solve(&op, &EigenOptions { max_dense: 100, ..Default::default() }).unwrap_err();
    assert!(matches!(err, Error::TooLarge { size: 198, max: 100 }));
    assert!(assemble_integrated(&prof, &p, &es, Closure::Periodic).is_err());
}
