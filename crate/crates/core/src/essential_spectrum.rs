//! Fredholm borders of the linearized operator from the constant-coefficient
//! dispersion relation at the end states:
//!
//! ```text
//! λ² + ξ(μξ − i(s+β))λ + ξ²(k²ξ²/2 − α − s(β + iμξ)) = 0,
//! α = (J/P)² − γP^(γ−1),  β = s − 2J/P.
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::export::CsvTable;
use crate::shock_data::{EndStates, ShockParams};

/// Stability tolerance: Re λ below this at ξ ≠ 0 counts as stable.
pub const STABLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        }
    }
}

/// (α, β) at an arbitrary state (P, J).
pub fn state_coefficients(p: f64, j: f64, s: f64, gamma: f64) -> (f64, f64) {
    let u = j / p;
    (u * u - gamma * p.powf(gamma - 1.0), s - 2.0 * u)
}

pub fn dispersion_coefficients(es: &EndStates, params: &ShockParams, side: Side) -> (f64, f64) {
    let (p, j) = match side {
        Side::Minus => (es.p_minus, es.j_minus),
        Side::Plus => (es.p_plus, es.j_plus),
    };
    state_coefficients(p, j, params.s, params.gamma)
}

/// Coefficients (b, c) of the monic quadratic λ² + bλ + c at frequency ξ.
pub fn quadratic_coefficients(xi: f64, alpha: f64, beta: f64, s: f64, mu: f64, k: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let b = xi * (mu * xi - i * (s + beta));
    let c = xi * xi * (0.5 * k * k * xi * xi - alpha - s * (beta + i * mu * xi));
    (b, c)
}

/// Roots of λ² + bλ + c: the larger-magnitude root from the formula, the
/// other from the product (no cancellation when |c| ≪ |b|²).
pub fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * c).sqrt();
    // choose the sign that avoids cancellation in −b ∓ √disc
    let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
    if q == Complex64::new(0.0, 0.0) {
        return [q, q];
    }
    [q, c / q]
}

/// Symmetric ξ-grid: linear on |ξ| ≤ ξ_lin, log-spaced beyond, ξ = 0 included.
///
/// `n_xi` is rounded up to an odd number so that the grid is symmetric.
pub fn xi_grid(xi_max: f64, n_xi: usize) -> Vec<f64> {
    let half = (n_xi.max(3) - 1).div_ceil(2);
    let xi_lin = (0.05 * xi_max).min(1.0);
    let n_lin = (half / 2).max(1);
    let n_log = half - n_lin;
    let mut pos: Vec<f64> = (1..=n_lin).map(|q| xi_lin * q as f64 / n_lin as f64).collect();
    if n_log > 0 {
        let (a, b) = (xi_lin.ln(), xi_max.ln());
        pos.extend((1..=n_log).map(|q| (a + (b - a) * q as f64 / n_log as f64).exp()));
    } else {
        // no log part: stretch the linear part to ξ_max
        pos = (1..=n_lin).map(|q| xi_max * q as f64 / n_lin as f64).collect();
    }
    if let Some(last) = pos.last_mut() {
        *last = xi_max;
    }
    let mut grid: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    grid.push(0.0);
    grid.extend(pos);
    grid
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCurve {
    pub xi_grid: Vec<f64>,
    /// first tracked root branch
    pub lambda_plus: Vec<Complex64>,
    /// second tracked root branch
    pub lambda_minus: Vec<Complex64>,
    pub end_state_tag: Side,
    pub alpha: f64,
    pub beta: f64,
    /// max Re λ over ξ ≠ 0
    pub max_re: f64,
}

impl SpectrumCurve {
    /// Largest |λ² + bλ + c| / (1 + |λ|²) over the curve.
    pub fn max_root_residual(&self, params: &ShockParams) -> f64 {
        let mut worst: f64 = 0.0;
        for (q, xi) in self.xi_grid.iter().enumerate() {
            let (b, c) = quadratic_coefficients(*xi, self.alpha, self.beta, params.s, params.mu, params.k);
            for l in [self.lambda_plus[q], self.lambda_minus[q]] {
                let r = (l * l + b * l + c).norm() / (1.0 + l.norm_sqr());
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Worst relative defect of λ₊+λ₋ = −b and λ₊λ₋ = c.
    pub fn max_vieta_defect(&self, params: &ShockParams) -> f64 {
        let mut worst: f64 = 0.0;
        for (q, xi) in self.xi_grid.iter().enumerate() {
            let (b, c) = quadratic_coefficients(*xi, self.alpha, self.beta, params.s, params.mu, params.k);
            let (l1, l2) = (self.lambda_plus[q], self.lambda_minus[q]);
            let sum = (l1 + l2 + b).norm() / b.norm().max(l1.norm() + l2.norm()).max(f64::MIN_POSITIVE);
            let prod = (l1 * l2 - c).norm() / c.norm().max(l1.norm() * l2.norm()).max(f64::MIN_POSITIVE);
            if *xi != 0.0 {
                worst = worst.max(sum).max(prod);
            }
        }
        worst
    }

    /// Largest adjacent-ξ jump of either branch relative to the local secant estimate.
    pub fn max_jump_ratio(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.xi_grid.len();
        for branch in [&self.lambda_plus, &self.lambda_minus] {
            for q in 1..n - 1 {
                let jump = (branch[q + 1] - branch[q]).norm();
                let prev = (branch[q] - branch[q - 1]).norm();
                let dxi_ratio = (self.xi_grid[q + 1] - self.xi_grid[q]) / (self.xi_grid[q] - self.xi_grid[q - 1]);
                let predicted = prev * dxi_ratio;
                if predicted > 1e-12 {
                    worst = worst.max(jump / predicted);
                }
            }
        }
        worst
    }
}

/// Border curve for an arbitrary constant state (α, β) — exposed so that
/// artificial (e.g. supersonic) states can be examined.
pub fn border_for_coefficients(alpha: f64, beta: f64, params: &ShockParams, xi: &[f64], side: Side) -> SpectrumCurve {
    let mut lp = Vec::with_capacity(xi.len());
    let mut lm = Vec::with_capacity(xi.len());
    let mut prev: Option<[Complex64; 2]> = None;
    for x in xi {
        let (b, c) = quadratic_coefficients(*x, alpha, beta, params.s, params.mu, params.k);
        let mut r = quadratic_roots(b, c);
        if let Some([p0, p1]) = prev {
            let keep = (r[0] - p0).norm() + (r[1] - p1).norm();
            let swap = (r[1] - p0).norm() + (r[0] - p1).norm();
            if swap < keep {
                r.swap(0, 1);
            }
        }
        lp.push(r[0]);
        lm.push(r[1]);
        prev = Some(r);
    }
    let max_re = xi
        .iter()
        .zip(lp.iter().zip(&lm))
        .filter(|(x, _)| **x != 0.0)
        .map(|(_, (a, b))| a.re.max(b.re))
        .fold(f64::NEG_INFINITY, f64::max);
    SpectrumCurve { xi_grid: xi.to_vec(), lambda_plus: lp, lambda_minus: lm, end_state_tag: side, alpha, beta, max_re }
}

/// Borders at both end states, `[minus, plus]`.
pub fn fredholm_borders(es: &EndStates, params: &ShockParams, xi_max: f64, n_xi: usize) -> [SpectrumCurve; 2] {
    let xi = xi_grid(xi_max, n_xi);
    [Side::Minus, Side::Plus].map(|side| {
        let (a, b) = dispersion_coefficients(es, params, side);
        border_for_coefficients(a, b, params, &xi, side)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tangency {
    pub side: Side,
    /// fitted p in max Re λ ≈ −C|ξ|^p near the origin
    pub order: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapProbe {
    pub delta: f64,
    pub sup_re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssentialVerdict {
    pub pass: bool,
    pub max_re: f64,
    pub argmax_xi: f64,
    pub argmax_side: Side,
    /// ξ ≠ 0 samples with Re λ ≥ −tol (touching the imaginary axis)
    pub axis_touches: usize,
    pub tangency: Vec<Tangency>,
    /// sup Re λ over 0 < |ξ| ≤ δ; tends to 0 (no spectral gap)
    pub gap_probe: Vec<GapProbe>,
    pub tolerance: f64,
}

fn fit_tangency(curve: &SpectrumCurve) -> Tangency {
    // smallest positive ξ samples, upper envelope of the two branches
    let pts: Vec<(f64, f64)> = curve
        .xi_grid
        .iter()
        .enumerate()
        .filter(|(_, x)| **x > 0.0)
        .map(|(q, x)| (*x, curve.lambda_plus[q].re.max(curve.lambda_minus[q].re)))
        .filter(|(_, re)| *re < 0.0)
        .take(8)
        .collect();
    if pts.len() < 2 {
        return Tangency { side: curve.end_state_tag, order: f64::NAN, coefficient: f64::NAN };
    }
    let x: Vec<f64> = pts.iter().map(|(a, _)| a.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, b)| (-b).ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let order = sxy / sxx;
    Tangency { side: curve.end_state_tag, order, coefficient: (my - order * mx).exp() }
}

pub fn essential_stability_verdict(curves: &[SpectrumCurve; 2]) -> EssentialVerdict {
    let mut max_re = f64::NEG_INFINITY;
    let mut argmax_xi = f64::NAN;
    let mut argmax_side = Side::Minus;
    let mut axis_touches = 0;
    for c in curves {
        for (q, xi) in c.xi_grid.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for l in [c.lambda_plus[q], c.lambda_minus[q]] {
                if l.re > max_re {
                    max_re = l.re;
                    argmax_xi = *xi;
                    argmax_side = c.end_state_tag;
                }
                if l.re >= -STABLE_TOL {
                    axis_touches += 1;
                }
            }
        }
    }
    let gap_probe = [1.0, 0.1, 0.01, 0.001]
        .iter()
        .map(|&delta| {
            let sup_re = curves
                .iter()
                .flat_map(|c| {
                    c.xi_grid
                        .iter()
                        .enumerate()
                        .filter(move |(_, x)| **x != 0.0 && x.abs() <= delta)
                        .map(move |(q, _)| c.lambda_plus[q].re.max(c.lambda_minus[q].re))
                })
                .fold(f64::NEG_INFINITY, f64::max);
            GapProbe { delta, sup_re }
        })
        .collect();
    EssentialVerdict {
        pass: max_re < STABLE_TOL && axis_touches == 0,
        max_re,
        argmax_xi,
        argmax_side,
        axis_touches,
        tangency: curves.iter().map(fit_tangency).collect(),
        gap_probe,
        tolerance: STABLE_TOL,
    }
}

/// CSV with columns `xi,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,side`.
pub fn curves_csv(curves: &[SpectrumCurve]) -> String {
    use crate::export::fmt_f64;
    let mut t = CsvTable::new(&["xi", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus", "side"]);
    for c in curves {
        for (q, xi) in c.xi_grid.iter().enumerate() {
            let (a, b) = (c.lambda_plus[q], c.lambda_minus[q]);
            t.row(&[
                fmt_f64(*xi),
                fmt_f64(a.re),
                fmt_f64(a.im),
                fmt_f64(b.re),
                fmt_f64(b.im),
                c.end_state_tag.label().to_string(),
            ]);
        }
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_simple_quadratics() {
        // λ² − 3λ + 2 = (λ−1)(λ−2)
        let mut r = quadratic_roots(Complex64::new(-3.0, 0.0), Complex64::new(2.0, 0.0));
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] - 1.0).norm() < 1e-15 && (r[1] - 2.0).norm() < 1e-15);
        // λ² + 1 = 0
        let r = quadratic_roots(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        assert!((r[0] * r[1] - 1.0).norm() < 1e-15 && (r[0] + r[1]).norm() < 1e-15);
        // tiny c: small root must be accurate
        let r = quadratic_roots(Complex64::new(1.0, 0.0), Complex64::new(1e-20, 0.0));
        assert!((r[1] + 1e-20).norm() < 1e-34);
    }

    #[test]
    fn grid_is_symmetric_with_zero() {
        let g = xi_grid(20.0, 101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[50], 0.0);
        for q in 0..50 {
            assert_eq!(g[q], -g[100 - q]);
        }
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 20.0);
    }
}
