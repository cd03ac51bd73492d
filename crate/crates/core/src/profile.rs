//! Heteroclinic profile P(y) of
//!
//! ```text
//! P'' = (2/k²) f(P) − (2sμ/k²) P' + P'²/P,   P(−∞) = P⁻,  P(+∞) = P⁺,
//! ```
//!
//! by 4th-order finite-difference collocation and Newton's method, started
//! from the small-amplitude tanh profile.
//!
//! Truncation to [−L, L]: P⁻ is a saddle of the (P, P') system, so the left
//! end carries the projection condition P' = r_u (P − P⁻) onto its unstable
//! direction. P⁺ is a sink (f'(P⁺) < 0 and positive friction), so any
//! orbit entering its neighbourhood converges and no condition is imposed on
//! the right; translation is removed by P(0) = (P⁺ + P⁻)/2.

use num_complex::Complex64;
use serde::Serialize;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable};
use crate::shock_data::{EndStates, ShockParams};
use crate::stencil::{profile_derivative, profile_stencil, Stencil};

/// Points where |P'| falls below this fraction of max|P'| are treated as
/// converged tails (round-off level) by the monotonicity check.
pub const MONOTONE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct WaveProfile {
    pub grid: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
    pub j: Vec<f64>,
    pub half_length: f64,
    /// Sup-norm of the ODE residual evaluated with independent 6th-order stencils.
    pub residual_inf: f64,
    /// where the residual sup-norm is attained
    pub residual_y: f64,
    pub bc_mismatch: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monotonicity {
    /// max dP over points above the tail floor
    pub max_dp: f64,
    pub argmax_y: f64,
    pub strictly_decreasing: bool,
    /// points skipped because |dP| is below the tail floor
    pub tail_points: usize,
    /// sign changes of dP above the floor (oscillation indicator)
    pub sign_changes: usize,
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn max_abs_dp(&self) -> f64 {
        self.dp.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_d2p(&self) -> f64 {
        self.d2p.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn monotonicity(&self) -> Monotonicity {
        let floor = MONOTONE_FLOOR * self.max_abs_dp();
        let mut max_dp = f64::NEG_INFINITY;
        let mut argmax_y = f64::NAN;
        let mut tail_points = 0;
        let mut sign_changes = 0;
        let mut last_sign = 0.0;
        for (y, d) in self.grid.iter().zip(&self.dp) {
            if d.abs() < floor {
                tail_points += 1;
                continue;
            }
            if *d > max_dp {
                max_dp = *d;
                argmax_y = *y;
            }
            let sg = d.signum();
            if last_sign != 0.0 && sg != last_sign {
                sign_changes += 1;
            }
            last_sign = sg;
        }
        Monotonicity { max_dp, argmax_y, strictly_decreasing: max_dp < 0.0, tail_points, sign_changes }
    }

    /// max |J − (sP − A)|.
    pub fn flux_identity_defect(&self, es: &EndStates) -> f64 {
        self.p
            .iter()
            .zip(&self.j)
            .fold(0.0, |m, (p, j)| m.max((j - (es.s * p - es.a)).abs()))
    }

    /// P stays within [P⁺ − tol, P⁻ + tol].
    pub fn within_end_states(&self, es: &EndStates, tol: f64) -> bool {
        self.p.iter().all(|p| *p >= es.p_plus - tol && *p <= es.p_minus + tol)
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["y", "P", "dP", "d2P", "J"]);
        for i in 0..self.len() {
            t.numeric_row(&[self.grid[i], self.p[i], self.dp[i], self.d2p[i], self.j[i]]);
        }
        t.finish()
    }
}

/// c = γ(γ+1)(P⁻)^(γ−2) / (2sμ).
pub fn reduced_coefficient(params: &ShockParams) -> f64 {
    let g = params.gamma;
    g * (g + 1.0) * params.p_minus.powf(g - 2.0) / (2.0 * params.s * params.mu)
}

/// Decreasing solution of R_z = c(R² − 1/4) through R(0) = 0.
pub fn reduced_tanh(c: f64, z: f64) -> f64 {
    -0.5 * (0.5 * c * z).tanh()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedProfile {
    pub c: f64,
    pub z_grid: Vec<f64>,
    pub r: Vec<f64>,
}

impl ReducedProfile {
    pub fn sample(c: f64, z_grid: Vec<f64>) -> Self {
        let r = z_grid.iter().map(|z| reduced_tanh(c, *z)).collect();
        ReducedProfile { c, z_grid, r }
    }
}

pub fn default_half_length(epsilon: f64) -> f64 {
    40.0 / epsilon
}

/// Symmetric uniform grid on [−L, L]; y = 0 is a node when n is odd.
pub fn uniform_grid(half_length: f64, n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n).map(|i| half_length * (2.0 * i as f64 - m) / m).collect()
}

fn check_grid_args(half_length: f64, n: usize, min_n: usize) -> Result<()> {
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(Error::InvalidParams(format!("half-length L must be > 0, got {half_length}")));
    }
    if n < min_n {
        return Err(Error::InvalidParams(format!("need at least {min_n} grid points, got {n}")));
    }
    Ok(())
}

/// The tanh profile P = εR(εy) + (P⁺+P⁻)/2, with exact derivatives.
pub fn initial_guess(params: &ShockParams, es: &EndStates, half_length: f64, n: usize) -> Result<WaveProfile> {
    check_grid_args(half_length, n, 3)?;
    let eps = params.epsilon;
    let c = reduced_coefficient(params);
    let mid = 0.5 * (es.p_plus + es.p_minus);
    let grid = uniform_grid(half_length, n);
    let mut p = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    let mut d2p = Vec::with_capacity(n);
    for y in &grid {
        let r = reduced_tanh(c, eps * y);
        let r1 = c * (r * r - 0.25);
        p.push(eps * r + mid);
        dp.push(eps * eps * r1);
        d2p.push(eps.powi(3) * 2.0 * c * r * r1);
    }
    let residual = (0..n)
        .map(|i| (i, ode_residual(params, es, p[i], dp[i], d2p[i]).abs()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(assemble_profile(es, grid, p, dp, d2p, residual, 0))
}

fn assemble_profile(
    es: &EndStates,
    grid: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
    d2p: Vec<f64>,
    (residual_at, residual_inf): (usize, f64),
    newton_iterations: usize,
) -> WaveProfile {
    let j = p.iter().map(|p| es.s * p - es.a).collect();
    let n = grid.len();
    let bc_mismatch = (p[0] - es.p_minus).abs().max((p[n - 1] - es.p_plus).abs());
    let residual_y = grid[residual_at];
    WaveProfile {
        half_length: grid[n - 1],
        grid,
        p,
        dp,
        d2p,
        j,
        residual_inf,
        residual_y,
        bc_mismatch,
        newton_iterations,
    }
}

/// P'' − (2/k²)f(P) + (2sμ/k²)P' − P'²/P.
pub fn ode_residual(params: &ShockParams, es: &EndStates, p: f64, d1: f64, d2: f64) -> f64 {
    let k2 = params.k * params.k;
    d2 - (2.0 / k2) * es.f_ab(p) + (2.0 * params.s * params.mu / k2) * d1 - d1 * d1 / p
}

/// Sup-norm of the ODE residual with 7-point (6th-order) centered stencils,
/// on the nodes where they fit, and the node attaining it.
pub fn high_order_residual(params: &ShockParams, es: &EndStates, p: &[f64], h: f64) -> (usize, f64) {
    let n = p.len();
    if n < 7 {
        return (0, f64::NAN);
    }
    let s1 = Stencil::at(3, 0, 7, 1, h);
    let s2 = Stencil::at(3, 0, 7, 2, h);
    (3..n - 3)
        .map(|i| {
            let win = &p[i - 3..i + 4];
            let d1: f64 = s1.weights.iter().zip(win).map(|(a, b)| a * b).sum();
            let d2: f64 = s2.weights.iter().zip(win).map(|(a, b)| a * b).sum();
            (i, ode_residual(params, es, p[i], d1, d2).abs())
        })
        .fold((3, 0.0), |a, b| if b.1 > a.1 { b } else { a })
}

/// Linearized decay rates of the profile ODE at the two end states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndRates {
    /// positive eigenvalue at the saddle P⁻ (growth rate as y increases)
    pub unstable_minus: f64,
    /// both eigenvalues at P⁺ (Re < 0)
    pub plus: [Complex64; 2],
    /// true when the P⁺ eigenvalues are complex (oscillatory approach)
    pub plus_is_focus: bool,
}

impl EndRates {
    /// Slowest exponential rate among the tails.
    pub fn slowest(&self) -> f64 {
        let theta_plus = -self.plus[0].re.max(self.plus[1].re);
        self.unstable_minus.min(theta_plus)
    }

    pub fn theta_plus(&self) -> f64 {
        -self.plus[0].re.max(self.plus[1].re)
    }
}

pub fn linear_rates(params: &ShockParams, es: &EndStates) -> EndRates {
    let k2 = params.k * params.k;
    let a = 2.0 * params.s * params.mu / k2;
    let bm = (2.0 / k2) * es.f_prime(es.p_minus);
    let bp = (2.0 / k2) * es.f_prime(es.p_plus);
    let unstable_minus = 0.5 * (-a + (a * a + 4.0 * bm).sqrt());
    let disc = Complex64::new(a * a + 4.0 * bp, 0.0).sqrt();
    let plus = [0.5 * (-a + disc), 0.5 * (-a - disc)];
    EndRates { unstable_minus, plus, plus_is_focus: a * a + 4.0 * bp < 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Newton stops once the sup-norm update falls below `tol · max(1, max P)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 50 }
    }
}

pub fn solve_profile(params: &ShockParams, es: &EndStates, half_length: f64, n: usize, tol: f64) -> Result<WaveProfile> {
    solve_profile_with(params, es, half_length, n, SolverOptions { tol, ..Default::default() })
}

/// Equation layout of the collocation system: row 0 is the left projection
/// condition, the phase row sits at `phase_row`, and the ODE at interior
/// node `i` goes to row `i` (before the phase row) or `i + 1` (after it),
/// which keeps the Jacobian banded.
struct Collocation {
    n: usize,
    left: Stencil,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
    phase: Vec<(usize, f64)>,
    phase_row: usize,
    target: f64,
    kl: usize,
    ku: usize,
}

impl Collocation {
    fn new(n: usize, h: f64, target: f64) -> Self {
        let left = profile_stencil(0, n, 1, h);
        let d1: Vec<Stencil> = (1..n - 1).map(|i| profile_stencil(i, n, 1, h)).collect();
        let d2: Vec<Stencil> = (1..n - 1).map(|i| profile_stencil(i, n, 2, h)).collect();
        let (phase, phase_row) = if n % 2 == 1 {
            let m = (n - 1) / 2;
            (vec![(m, 1.0)], m)
        } else {
            let m = n / 2 - 1;
            let w = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
            ((0..4).map(|q| (m - 1 + q, w[q])).collect(), m)
        };
        let mut c = Collocation { n, left, d1, d2, phase, phase_row, target, kl: 0, ku: 0 };
        let (mut kl, mut ku) = (0usize, 0usize);
        let mut note = |row: usize, col: usize| {
            if row >= col {
                kl = kl.max(row - col);
            } else {
                ku = ku.max(col - row);
            }
        };
        for (col, _) in c.left.iter() {
            note(0, col);
        }
        for &(col, _) in &c.phase {
            note(c.phase_row, col);
        }
        for i in 1..n - 1 {
            let row = c.row_of(i);
            for (col, _) in c.d1[i - 1].iter().chain(c.d2[i - 1].iter()) {
                note(row, col);
            }
            note(row, i);
        }
        c.kl = kl;
        c.ku = ku;
        c
    }

    fn row_of(&self, node: usize) -> usize {
        if node < self.phase_row {
            node
        } else {
            node + 1
        }
    }

    fn residual(&self, params: &ShockParams, es: &EndStates, r_u: f64, p: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.n];
        f[0] = self.left.apply(p) - r_u * (p[0] - es.p_minus);
        f[self.phase_row] = self.phase.iter().map(|(j, w)| w * p[*j]).sum::<f64>() - self.target;
        for i in 1..self.n - 1 {
            let d1 = self.d1[i - 1].apply(p);
            let d2 = self.d2[i - 1].apply(p);
            f[self.row_of(i)] = ode_residual(params, es, p[i], d1, d2);
        }
        f
    }

    fn jacobian(&self, params: &ShockParams, es: &EndStates, r_u: f64, p: &[f64]) -> BandedMatrix {
        let k2 = params.k * params.k;
        let a = 2.0 * params.s * params.mu / k2;
        let mut m = BandedMatrix::zeros(self.n, self.kl, self.ku);
        for (col, w) in self.left.iter() {
            m.add(0, col, w);
        }
        m.add(0, 0, -r_u);
        for &(col, w) in &self.phase {
            m.add(self.phase_row, col, w);
        }
        for i in 1..self.n - 1 {
            let row = self.row_of(i);
            let s1 = &self.d1[i - 1];
            let d1 = s1.apply(p);
            for (col, w) in self.d2[i - 1].iter() {
                m.add(row, col, w);
            }
            let c1 = a - 2.0 * d1 / p[i];
            for (col, w) in s1.iter() {
                m.add(row, col, c1 * w);
            }
            m.add(row, i, -(2.0 / k2) * es.f_prime(p[i]) + d1 * d1 / (p[i] * p[i]));
        }
        m
    }
}

pub fn solve_profile_with(
    params: &ShockParams,
    es: &EndStates,
    half_length: f64,
    n: usize,
    opts: SolverOptions,
) -> Result<WaveProfile> {
    check_grid_args(half_length, n, 7)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let guess = initial_guess(params, es, half_length, n)?;
    let grid = guess.grid;
    let mut p = guess.p;
    let h = grid[1] - grid[0];
    let target = 0.5 * (es.p_plus + es.p_minus);
    let r_u = linear_rates(params, es).unstable_minus;
    let col = Collocation::new(n, h, target);
    let vacuum = es.p_plus / 10.0;
    let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut f = col.residual(params, es, r_u, &p);
    let mut last_update = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let jac = col.jacobian(params, es, r_u, &p);
        let mut step: Vec<f64> = f.iter().map(|v| -v).collect();
        jac.solve(&mut step)?;

        // damping: halve until the residual does not grow (accept the last try)
        let f_norm = sup(&f);
        let mut lambda = 1.0;
        let mut trial;
        let mut f_trial;
        loop {
            trial = p.iter().zip(&step).map(|(a, b)| a + lambda * b).collect::<Vec<_>>();
            let ok = trial.iter().all(|v| *v > vacuum);
            f_trial = if ok { col.residual(params, es, r_u, &trial) } else { vec![f64::INFINITY] };
            if (ok && sup(&f_trial) <= f_norm.max(1e-300) * (1.0 + 1e-12)) || lambda < 1.0 / 256.0 {
                break;
            }
            lambda *= 0.5;
        }
        if let Some((i, v)) = trial.iter().enumerate().find(|(_, v)| **v <= vacuum) {
            return Err(Error::Vacuum { density: *v, y: grid[i], floor: vacuum });
        }
        last_update = lambda * sup(&step);
        p = trial;
        f = f_trial;
        if last_update <= opts.tol * scale {
            let dp = profile_derivative(&p, h, 1);
            let d2p = profile_derivative(&p, h, 2);
            let residual = high_order_residual(params, es, &p, h);
            return Ok(assemble_profile(es, grid, p, dp, d2p, residual, it));
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, last_update, last_residual: sup(&f) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    /// fitted exponential rate (per unit y)
    pub theta: f64,
    pub y_from: f64,
    pub y_to: f64,
    pub points: usize,
    /// the outer-quarter window had too few points above round-off and was moved inward
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub minus: TailFit,
    pub plus: TailFit,
    /// leading-order prediction cε from the tanh profile
    pub predicted: f64,
    pub linear: EndRates,
    pub warnings: Vec<String>,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn fit_tail(grid: &[f64], p: &[f64], end: f64, half_length: f64, eps: f64, left: bool) -> TailFit {
    let floor = 1e3 * f64::EPSILON * end.abs().max(1.0);
    let side: Vec<usize> = (0..grid.len()).filter(|&i| if left { grid[i] < 0.0 } else { grid[i] > 0.0 }).collect();
    let dev = |i: usize| (p[i] - end).abs();
    let mut pick: Vec<usize> = side
        .iter()
        .copied()
        .filter(|&i| grid[i].abs() >= 0.75 * half_length && dev(i) > floor)
        .collect();
    let mut truncated = false;
    if pick.len() < 8 {
        truncated = true;
        pick = side
            .iter()
            .copied()
            .filter(|&i| dev(i) > 1e2 * floor && dev(i) < 1e-2 * eps)
            .collect();
    }
    if pick.len() < 3 {
        return TailFit { theta: f64::NAN, y_from: f64::NAN, y_to: f64::NAN, points: pick.len(), truncated };
    }
    let x: Vec<f64> = pick.iter().map(|&i| grid[i].abs()).collect();
    let ly: Vec<f64> = pick.iter().map(|&i| dev(i).ln()).collect();
    let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    TailFit { theta: -least_squares_slope(&x, &ly), y_from: lo, y_to: hi, points: pick.len(), truncated }
}

/// Exponential tail rates by least squares on log|P − P±| against |y|.
pub fn decay_rates(profile: &WaveProfile, params: &ShockParams, es: &EndStates) -> DecayReport {
    let eps = params.epsilon;
    let l = profile.half_length;
    let minus = fit_tail(&profile.grid, &profile.p, es.p_minus, l, eps, true);
    let plus = fit_tail(&profile.grid, &profile.p, es.p_plus, l, eps, false);
    let mut warnings = Vec::new();
    for (name, fit) in [("minus", &minus), ("plus", &plus)] {
        if fit.truncated {
            warnings.push(format!(
                "{name} tail: outer quarter of the domain is below round-off; fit window moved to |y| in [{}, {}]",
                fmt_f64(fit.y_from),
                fmt_f64(fit.y_to)
            ));
        }
        if !fit.theta.is_finite() {
            warnings.push(format!("{name} tail: too few points above round-off to fit a rate"));
        }
    }
    DecayReport { minus, plus, predicted: reduced_coefficient(params) * eps, linear: linear_rates(params, es), warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shock_data::lax_end_states;

    fn small() -> (ShockParams, EndStates) {
        let p = ShockParams::new(1.5, 0.5, 0.25, 2.0, 0.1, 1.45).unwrap();
        let es = lax_end_states(&p).unwrap();
        (p, es)
    }

    #[test]
    fn riccati_identity() {
        let c = 1.7;
        for i in 0..1000 {
            let z = -20.0 + 0.04 * i as f64;
            let r = reduced_tanh(c, z);
            let rz = -0.25 * c / (0.5 * c * z).cosh().powi(2);
            assert!((rz - c * (r * r - 0.25)).abs() < 1e-15);
        }
        assert_eq!(reduced_tanh(c, 0.0), 0.0);
    }

    #[test]
    fn guess_midpoint() {
        let (p, es) = small();
        let g = initial_guess(&p, &es, 400.0, 5).unwrap();
        assert!((g.p[2] - 0.5 * (es.p_plus + es.p_minus)).abs() < 1e-15);
    }

    #[test]
    fn banded_layout_handles_even_grids() {
        let (p, es) = small();
        for n in [601, 600] {
            let prof = solve_profile(&p, &es, 150.0, n, 1e-10).unwrap();
            let mid = 0.5 * (es.p_plus + es.p_minus);
            let p0 = if n % 2 == 1 {
                prof.p[n / 2]
            } else {
                let m = n / 2 - 1;
                (-prof.p[m - 1] + 9.0 * prof.p[m] + 9.0 * prof.p[m + 1] - prof.p[m + 2]) / 16.0
            };
            assert!((p0 - mid).abs() < 1e-12, "n={n}");
            assert!(prof.monotonicity().strictly_decreasing);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let (p, es) = small();
        assert!(solve_profile(&p, &es, -1.0, 101, 1e-10).is_err());
        assert!(solve_profile(&p, &es, 10.0, 5, 1e-10).is_err());
        assert!(solve_profile(&p, &es, 10.0, 101, 0.0).is_err());
    }
}
