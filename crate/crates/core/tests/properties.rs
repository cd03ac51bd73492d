use faer::Mat;
use proptest::prelude::*;
use qhd_lab_core::banded::BandedMatrix;
use qhd_lab_core::essential_spectrum::{fredholm_borders, quadratic_roots};
use qhd_lab_core::shock_data::{check_subsonicity_conditions, critical_point_p0, f_of_p, lax_end_states, sound_speed};
use qhd_lab_core::stencil::fornberg;
use qhd_lab_core::{Complex64, ShockParams};

fn params() -> impl Strategy<Value = ShockParams> {
    (1.0f64..3.0, 0.05f64..2.0, 0.05f64..2.0, 0.2f64..5.0, 0.01f64..0.9, 0.05f64..5.0).prop_map(
        |(gamma, mu, k, pm, frac, s)| ShockParams::new(gamma, mu, k, pm, frac * pm, s).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rankine_hugoniot_holds(p in params()) {
        let es = lax_end_states(&p).unwrap();
        let (mass, mom) = es.rh_residuals();
        prop_assert!(mass <= 1e-12, "mass {mass:e}");
        prop_assert!(mom <= 1e-12, "momentum {mom:e}");
    }

    #[test]
    fn flux_constant_positive_and_p0_inside(p in params()) {
        let es = lax_end_states(&p).unwrap();
        prop_assert!(es.a > 0.0);
        let p0 = critical_point_p0(&es);
        prop_assert!(es.p_plus < p0 && p0 < es.p_minus, "P0 = {p0} not in ({}, {})", es.p_plus, es.p_minus);
        // P0 is where f' vanishes
        let scale = p.gamma * p0.powf(p.gamma - 1.0);
        prop_assert!(es.f_prime(p0).abs() <= 1e-12 * scale);
    }

    #[test]
    fn two_forms_of_f_agree(p in params(), t in 0.0f64..1.0) {
        let es = lax_end_states(&p).unwrap();
        let x = 0.5 * es.p_plus + t * (2.0 * es.p_minus - 0.5 * es.p_plus);
        let roots = f_of_p(x, &es).unwrap();
        let ab = es.f_ab(x);
        let scale = x.powf(p.gamma) + (es.a * p.s + es.b).abs() + es.a * es.a / x;
        prop_assert!((roots - ab).abs() <= 1e-12 * scale, "{roots} vs {ab}");
    }

    #[test]
    fn quadratic_roots_satisfy_vieta(br in -10.0f64..10.0, bi in -10.0f64..10.0, cr in -10.0f64..10.0, ci in -10.0f64..10.0) {
        let (b, c) = (Complex64::new(br, bi), Complex64::new(cr, ci));
        let [l1, l2] = quadratic_roots(b, c);
        for l in [l1, l2] {
            prop_assert!((l * l + b * l + c).norm() <= 1e-12 * (1.0 + l.norm_sqr()));
        }
        prop_assert!((l1 + l2 + b).norm() <= 1e-12 * (1.0 + b.norm()));
        prop_assert!((l1 * l2 - c).norm() <= 1e-12 * (1.0 + c.norm()));
    }

    #[test]
    fn tiny_constant_term_keeps_relative_accuracy(scale in -14.0f64..-6.0) {
        // λ² + λ + c with |c| ≪ 1: small root −2c / (1 + √(1 − 4c)), no cancellation
        let c = Complex64::new(10f64.powf(scale), 0.0);
        let [_, small] = quadratic_roots(Complex64::new(1.0, 0.0), c);
        let exact = -2.0 * c.re / (1.0 + (1.0 - 4.0 * c.re).sqrt());
        prop_assert!(((small.re - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn borders_are_conjugate_symmetric(p in params()) {
        let es = lax_end_states(&p).unwrap();
        for c in fredholm_borders(&es, &p, 5.0, 201) {
            let n = c.xi_grid.len();
            for q in 0..n {
                let r = n - 1 - q;
                prop_assert_eq!(c.xi_grid[q], -c.xi_grid[r]);
                let mine = [c.lambda_plus[q], c.lambda_minus[q]];
                let mirror = [c.lambda_plus[r].conj(), c.lambda_minus[r].conj()];
                let d = mine.iter().map(|a| mirror.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
                let s = 1.0 + mine[0].norm() + mine[1].norm();
                prop_assert!(d <= 1e-10 * s, "ξ = {}: {d:e}", c.xi_grid[q]);
            }
        }
    }

    #[test]
    fn gamma_three_subsonic_implies_velocity_condition(pm in 0.2f64..5.0, frac in 0.01f64..0.9, s in 0.05f64..5.0) {
        let p = ShockParams::new(3.0, 0.1, 0.5, pm, frac * pm, s).unwrap();
        let es = lax_end_states(&p).unwrap();
        let r = check_subsonicity_conditions(&es, &p);
        if r.left_subsonic {
            prop_assert_eq!(r.velocity_condition, Some(true));
        }
        prop_assert!(r.first_implication_holds && r.second_implication_holds);
    }

    #[test]
    fn isothermal_sound_speed_is_one(rho in 1e-3f64..1e3) {
        prop_assert_eq!(sound_speed(rho, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn fornberg_differentiates_quartics_exactly(
        coef in prop::collection::vec(-2.0f64..2.0, 5),
        z in -1.0f64..1.0,
        h in 0.01f64..0.5,
        shift in 0usize..5,
    ) {
        let x: Vec<f64> = (0..5).map(|i| z + (i as f64 - shift as f64) * h).collect();
        let w = fornberg(z, &x, 2);
        let f = |t: f64| coef.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let df = |t: f64| coef.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c * t.powi(k as i32 - 1)).sum::<f64>();
        let d2f = |t: f64| coef.iter().enumerate().skip(2).map(|(k, c)| (k * (k - 1)) as f64 * c * t.powi(k as i32 - 2)).sum::<f64>();
        let apply = |d: usize| x.iter().zip(&w[d]).map(|(xi, wi)| wi * f(*xi)).sum::<f64>();
        prop_assert!((apply(1) - df(z)).abs() <= 1e-8 * (1.0 + df(z).abs()) / h);
        prop_assert!((apply(2) - d2f(z)).abs() <= 1e-7 * (1.0 + d2f(z).abs()) / (h * h));
    }

    #[test]
    fn banded_solve_matches_dense(
        n in 5usize..40,
        kl in 0usize..4,
        ku in 0usize..4,
        seed in prop::collection::vec(-1.0f64..1.0, 40 * 9 + 40),
    ) {
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = Mat::<f64>::zeros(n, n);
        let mut it = seed.iter().cycle();
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v = *it.next().unwrap() + if i == j { 0.2 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = rhs.clone();
        if band.solve(&mut x).is_err() {
            return Ok(()); // exactly singular draws are legitimate
        }
        let r: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[(i, j)] * x[j]).sum::<f64>() - rhs[i]).collect();
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let an = (0..n).map(|i| (0..n).map(|j| dense[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // backward-stable LU: residual ≲ n·eps·‖A‖‖x‖ (generous growth factor)
        prop_assert!(rn <= 1e-10 * an * xn + 1e-300, "residual {rn:e}");
    }
}
