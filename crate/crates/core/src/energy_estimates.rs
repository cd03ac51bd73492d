//! Pointwise ingredients of the energy estimate on a computed profile:
//! f1 = (s − A/P)² − γP^(γ−1), f2 = −s + 2A/P, their y-derivatives, and
//! g = −½ [f2/f1 − μ(1/f1)']', with the constants c1…c4 and C̄.
//!
//! y-derivatives of f_i and g use the chain rule with exact P-derivatives
//! and the profile's P', P''. Ratios against |P'| are only taken where
//! |P'| ≥ [`TAIL_FLOOR`]·max|P'|.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::CsvTable;
use crate::point_spectrum::FluxCoefficients;
use crate::profile::WaveProfile;
use crate::shock_data::{EndStates, ShockParams};
use crate::stencil::profile_derivative;

/// Relative |P'| below which tail points are excluded from ratio estimates.
pub const TAIL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct FluxFunctions {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// f1 from the momentum form J²/P² − γP^(γ−1)
    pub f1_momentum: Vec<f64>,
    /// f2 from the momentum form s − 2J/P
    pub f2_momentum: Vec<f64>,
    pub df1: Vec<f64>,
    pub df2: Vec<f64>,
    pub d2f1: Vec<f64>,
    pub d2f2: Vec<f64>,
}

impl FluxFunctions {
    /// Largest relative disagreement between the two algebraic forms.
    pub fn max_form_defect(&self) -> f64 {
        let rel = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        rel(&self.f1, &self.f1_momentum).max(rel(&self.f2, &self.f2_momentum))
    }
}

pub fn evaluate_f1_f2(profile: &WaveProfile, es: &EndStates, params: &ShockParams) -> FluxFunctions {
    let fc = FluxCoefficients::new(params, es);
    let g = params.gamma;
    let n = profile.len();
    let mut out = FluxFunctions {
        f1: Vec::with_capacity(n),
        f2: Vec::with_capacity(n),
        f1_momentum: Vec::with_capacity(n),
        f2_momentum: Vec::with_capacity(n),
        df1: Vec::with_capacity(n),
        df2: Vec::with_capacity(n),
        d2f1: Vec::with_capacity(n),
        d2f2: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (p, j, d1, d2) = (profile.p[i], profile.j[i], profile.dp[i], profile.d2p[i]);
        out.f1.push(fc.f1(p));
        out.f2.push(fc.f2(p));
        out.f1_momentum.push((j / p).powi(2) - g * p.powf(g - 1.0));
        out.f2_momentum.push(params.s - 2.0 * j / p);
        out.df1.push(fc.f1_p(p) * d1);
        out.df2.push(fc.f2_p(p) * d1);
        out.d2f1.push(fc.f1_pp(p) * d1 * d1 + fc.f1_p(p) * d2);
        out.d2f2.push(fc.f2_pp(p) * d1 * d1 + fc.f2_p(p) * d2);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GFunction {
    /// g from its definition (chain rule through P)
    pub g: Vec<f64>,
    /// the expanded expression −(f2'f1² − f1f1'f2 + μf1f1'' − 2μf1'²)/(2f1³)
    pub g_expanded: Vec<f64>,
    /// g with 4th-order stencils applied to f2/f1 − μ(1/f1)'
    pub g_stencil: Vec<f64>,
}

impl GFunction {
    /// max|g − g_expanded| / max|g_expanded|.
    pub fn expanded_defect(&self) -> f64 {
        rel_sup(&self.g, &self.g_expanded)
    }

    /// max|g − g_stencil| / max|g| (discretization-limited).
    pub fn stencil_deviation(&self) -> f64 {
        rel_sup(&self.g_stencil, &self.g)
    }
}

fn rel_sup(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale.max(f64::MIN_POSITIVE)
}

pub fn evaluate_g(profile: &WaveProfile, params: &ShockParams, es: &EndStates, flux: &FluxFunctions) -> Result<GFunction> {
    let small = 10.0 * f64::EPSILON;
    if let Some(i) = flux.f1.iter().position(|v| v.abs() < small) {
        return Err(Error::Domain(format!(
            "|f1| = {:.3e} below {small:.1e} at y = {}; the estimate is invalid",
            flux.f1[i].abs(),
            profile.grid[i]
        )));
    }
    let fc = FluxCoefficients::new(params, es);
    let mu = params.mu;
    let n = profile.len();
    let mut g = Vec::with_capacity(n);
    let mut g_expanded = Vec::with_capacity(n);
    for i in 0..n {
        let (p, d1, d2) = (profile.p[i], profile.dp[i], profile.d2p[i]);
        let (f1, f2) = (fc.f1(p), fc.f2(p));
        let (f1p, f2p, f1pp) = (fc.f1_p(p), fc.f2_p(p), fc.f1_pp(p));
        // h1 = F2/F1, h2 = 1/F1 as functions of P
        let h1p = (f2p * f1 - f2 * f1p) / (f1 * f1);
        let h2p = -f1p / (f1 * f1);
        let h2pp = -(f1pp * f1 * f1 - 2.0 * f1 * f1p * f1p) / f1.powi(4);
        g.push(-0.5 * (h1p * d1 - mu * (h2pp * d1 * d1 + h2p * d2)));

        let (df1, df2, d2f1) = (flux.df1[i], flux.df2[i], flux.d2f1[i]);
        g_expanded.push(-(df2 * f1 * f1 - f1 * df1 * f2 + mu * f1 * d2f1 - 2.0 * mu * df1 * df1) / (2.0 * f1.powi(3)));
    }
    let h = profile.spacing();
    let inv_f1: Vec<f64> = flux.f1.iter().map(|v| 1.0 / v).collect();
    let d_inv = profile_derivative(&inv_f1, h, 1);
    let q: Vec<f64> = (0..n).map(|i| flux.f2[i] / flux.f1[i] - mu * d_inv[i]).collect();
    let g_stencil = profile_derivative(&q, h, 1).into_iter().map(|v| -0.5 * v).collect();
    Ok(GFunction { g, g_expanded, g_stencil })
}

/// One certified inequality with its extremal grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub worst_index: usize,
    pub worst_y: f64,
    /// signed slack of the inequality at the worst point (> 0 when it holds)
    pub margin: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub checks: Vec<Check>,
    pub tail_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GLowerBound {
    pub c_bar: f64,
    pub c_bar_max: f64,
    /// g/|P'| at the first and last points above the tail floor
    pub tail_ratios: [f64; 2],
    pub checks: Vec<Check>,
}

fn tail_mask(profile: &WaveProfile) -> Vec<bool> {
    let floor = TAIL_FLOOR * profile.max_abs_dp();
    profile.dp.iter().map(|d| d.abs() >= floor).collect()
}

fn extremum<F: Fn(usize) -> f64>(mask: &[bool], f: F, want_max: bool) -> (usize, f64) {
    let mut best = (0usize, if want_max { f64::NEG_INFINITY } else { f64::INFINITY });
    for (i, m) in mask.iter().enumerate() {
        if !m {
            continue;
        }
        let v = f(i);
        // NaN never wins a comparison, so flag it explicitly
        if v.is_nan() {
            return (i, f64::NAN);
        }
        if (want_max && v > best.1) || (!want_max && v < best.1) {
            best = (i, v);
        }
    }
    best
}

fn check(name: &str, profile: &WaveProfile, (i, value): (usize, f64), margin: f64, pass: bool) -> Check {
    Check {
        name: name.to_string(),
        pass: pass && margin.is_finite() && value.is_finite(),
        worst_index: i,
        worst_y: profile.grid[i],
        margin,
        value,
    }
}

/// Strict sign condition: holds when the margin is positive.
fn sign_check(name: &str, profile: &WaveProfile, at: (usize, f64), margin: f64) -> Check {
    check(name, profile, at, margin, margin > 0.0)
}

/// Estimates c1…c4 and checks each flux-function inequality on the grid.
pub fn certify_lemma_f(profile: &WaveProfile, flux: &FluxFunctions, epsilon: f64) -> FluxBounds {
    let all = vec![true; profile.len()];
    let mask = tail_mask(profile);
    let ad: Vec<f64> = profile.dp.iter().map(|d| d.abs()).collect();

    let f1_max = extremum(&all, |i| flux.f1[i], true);
    let f1_min = extremum(&all, |i| flux.f1[i], false);
    let f2_max = extremum(&all, |i| flux.f2[i], true);
    let f2_min = extremum(&all, |i| flux.f2[i], false);
    let c1 = (-f1_max.1).min(1.0 / (-f1_min.1));
    let c2 = f2_max.1.max(1.0 / f2_min.1);

    let r1_min = extremum(&mask, |i| flux.df1[i] / ad[i], false);
    let r1_max = extremum(&mask, |i| flux.df1[i] / ad[i], true);
    let r2_min = extremum(&mask, |i| flux.df2[i] / ad[i], false);
    let r2_max = extremum(&mask, |i| flux.df2[i] / ad[i], true);
    let c3 = [1.0 / r1_min.1, r1_max.1, 1.0 / r2_min.1, r2_max.1].into_iter().fold(0.0, f64::max);

    let s1 = extremum(&mask, |i| flux.d2f1[i].abs() / (epsilon * ad[i]), true);
    let s2 = extremum(&mask, |i| flux.d2f2[i].abs() / (epsilon * ad[i]), true);
    let c4 = s1.1.max(s2.1);

    // Bounds whose constant is fitted to the data are tight at the extremal
    // point (zero slack); they hold iff the constant is admissible.
    let checks = vec![
        sign_check("f1_negative", profile, f1_max, -f1_max.1),
        check("f1_lower_bound", profile, f1_min, f1_min.1 + 1.0 / c1, c1 > 0.0 && c1 < 1.0),
        sign_check("f2_positive", profile, f2_min, f2_min.1),
        check("f2_upper_bound", profile, f2_max, c2 - f2_max.1, c2 > 1.0),
        sign_check("f1_prime_lower", profile, r1_min, r1_min.1),
        sign_check("f2_prime_lower", profile, r2_min, r2_min.1),
        check("f1_prime_upper", profile, r1_max, c3 - r1_max.1, c3 > 0.0 && c3.is_finite()),
        check("f2_prime_upper", profile, r2_max, c3 - r2_max.1, c3 > 0.0 && c3.is_finite()),
        check("f1_second_order", profile, s1, c4 - s1.1, c4 >= 0.0 && c4.is_finite()),
        check("f2_second_order", profile, s2, c4 - s2.1, c4 >= 0.0 && c4.is_finite()),
    ];
    FluxBounds { c1, c2, c3, c4, checks, tail_points: mask.iter().filter(|m| !**m).count() }
}

pub fn certify_corollary_g(profile: &WaveProfile, g: &GFunction) -> GLowerBound {
    let mask = tail_mask(profile);
    let ratio = |i: usize| g.g[i] / profile.dp[i].abs();
    let lo = extremum(&mask, ratio, false);
    let hi = extremum(&mask, ratio, true);
    let first = mask.iter().position(|m| *m).unwrap_or(0);
    let last = mask.iter().rposition(|m| *m).unwrap_or(0);
    let tail_ratios = [ratio(first), ratio(last)];
    let checks = vec![
        sign_check("g_lower_bound", profile, lo, lo.1),
        Check {
            name: "g_tail_ratios_finite_positive".into(),
            pass: tail_ratios.iter().all(|r| r.is_finite() && *r > 0.0),
            worst_index: if tail_ratios[0] <= tail_ratios[1] { first } else { last },
            worst_y: profile.grid[if tail_ratios[0] <= tail_ratios[1] { first } else { last }],
            margin: tail_ratios[0].min(tail_ratios[1]),
            value: tail_ratios[0].min(tail_ratios[1]),
        },
    ];
    GLowerBound { c_bar: lo.1, c_bar_max: hi.1, tail_ratios, checks }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub epsilon: f64,
    #[serde(skip)]
    pub flux: FluxFunctions,
    #[serde(skip)]
    pub g: GFunction,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c_bar: f64,
    pub checks: Vec<Check>,
    pub tail_floor: f64,
    pub tail_points: usize,
    pub form_defect: f64,
    pub g_expanded_defect: f64,
    pub g_stencil_deviation: f64,
    pub pass: bool,
}

pub fn energy_report(profile: &WaveProfile, es: &EndStates, params: &ShockParams) -> Result<EnergyReport> {
    let flux = evaluate_f1_f2(profile, es, params);
    let g = evaluate_g(profile, params, es, &flux)?;
    let fb = certify_lemma_f(profile, &flux, params.epsilon);
    let gb = certify_corollary_g(profile, &g);
    let mut checks = fb.checks;
    checks.extend(gb.checks);
    let pass = checks.iter().all(|c| c.pass);
    Ok(EnergyReport {
        epsilon: params.epsilon,
        c1: fb.c1,
        c2: fb.c2,
        c3: fb.c3,
        c4: fb.c4,
        c_bar: gb.c_bar,
        checks,
        tail_floor: TAIL_FLOOR,
        tail_points: fb.tail_points,
        form_defect: flux.max_form_defect(),
        g_expanded_defect: g.expanded_defect(),
        g_stencil_deviation: g.stencil_deviation(),
        pass,
        flux,
        g,
    })
}

/// CSV with columns `y,f1,f2,g,abs_dP`.
pub fn energy_csv(profile: &WaveProfile, report: &EnergyReport) -> String {
    let mut t = CsvTable::new(&["y", "f1", "f2", "g", "abs_dP"]);
    for i in 0..profile.len() {
        t.numeric_row(&[profile.grid[i], report.flux.f1[i], report.flux.f2[i], report.g.g[i], profile.dp[i].abs()]);
    }
    t.finish()
}
