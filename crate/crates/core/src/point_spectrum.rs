//! Discretized linearized operators around the profile and their spectra.
//!
//! Unknowns are stacked as `(ρ_0..ρ_{n−1}, m_0..m_{n−1})`. Two operators:
//!
//! - the integrated operator
//!   `λρ = sρ' − m'`,
//!   `λm = f1ρ' + f2m' + μm'' + (k²/2)ρ''' − k²(P'/P)ρ'' + (k²/2)(P'/P)²ρ'`;
//! - the original operator `𝓛` (conservative form expanded with σ = P'/(2P)),
//!   used only to check that the translation mode (P', J') is in its kernel.
//!
//! Truncation is Dirichlet (ρ = m = 0 at both ends). Boundary rows are left
//! zero in [`DiscreteOperator::matrix`]; the eigenproblem is posed on the
//! interior principal submatrix.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::essential_spectrum::{state_coefficients, SpectrumCurve};
use crate::export::{fmt_f64, CsvTable};
use crate::profile::WaveProfile;
use crate::shock_data::{EndStates, ShockParams};
use crate::stencil::{operator_stencil, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Integrated,
    Original,
    /// constant coefficients frozen at an end state, periodic grid
    FrozenPeriodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub n: usize,
    pub grid: Vec<f64>,
    pub h: f64,
    /// real 2n × 2n matrix (the operator has real coefficients)
    pub matrix: Mat<f64>,
    pub kind: OperatorKind,
    pub closure: Closure,
    pub profile_ref: String,
}

impl DiscreteOperator {
    /// Indices of the unknowns the eigenproblem acts on.
    pub fn active_indices(&self) -> Vec<usize> {
        match self.closure {
            Closure::Periodic => (0..2 * self.n).collect(),
            Closure::Dirichlet => {
                let n = self.n;
                (1..n - 1).chain(n + 1..2 * n - 1).collect()
            }
        }
    }

    /// Grid node of unknown `k`.
    pub fn node_of(&self, k: usize) -> usize {
        k % self.n
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let a = &self.matrix;
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum()).collect()
    }
}

fn profile_ref(profile: &WaveProfile) -> String {
    format!("L={},n={}", fmt_f64(profile.half_length), profile.len())
}

fn check_uniform(grid: &[f64]) -> Result<f64> {
    if grid.len() < 7 {
        return Err(Error::InvalidParams(format!("operator assembly needs at least 7 nodes, got {}", grid.len())));
    }
    let h = grid[1] - grid[0];
    for (i, w) in grid.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-8 * h.abs() {
            return Err(Error::NonUniformGrid(i));
        }
    }
    Ok(h)
}

fn check_dirichlet(bc: Closure) -> Result<()> {
    match bc {
        Closure::Dirichlet => Ok(()),
        Closure::Periodic => Err(Error::InvalidParams(
            "profile-based operators are not periodic; use assemble_frozen_periodic".into(),
        )),
    }
}

/// Coefficient functions of P and their exact P-derivatives:
/// F1 = (s − A/P)² − γP^(γ−1), F2 = −s + 2A/P.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FluxCoefficients {
    pub s: f64,
    pub a: f64,
    pub gamma: f64,
}

impl FluxCoefficients {
    pub fn new(params: &ShockParams, es: &EndStates) -> Self {
        FluxCoefficients { s: params.s, a: es.a, gamma: params.gamma }
    }
    pub fn f1(&self, p: f64) -> f64 {
        let u = self.s - self.a / p;
        u * u - self.gamma * p.powf(self.gamma - 1.0)
    }
    pub fn f2(&self, p: f64) -> f64 {
        -self.s + 2.0 * self.a / p
    }
    pub fn f1_p(&self, p: f64) -> f64 {
        let g = self.gamma;
        2.0 * (self.s - self.a / p) * self.a / (p * p) - g * (g - 1.0) * p.powf(g - 2.0)
    }
    pub fn f2_p(&self, p: f64) -> f64 {
        -2.0 * self.a / (p * p)
    }
    pub fn f1_pp(&self, p: f64) -> f64 {
        let g = self.gamma;
        let ap2 = self.a / (p * p);
        2.0 * ap2 * ap2 - 4.0 * (self.s - self.a / p) * self.a / (p * p * p)
            - g * (g - 1.0) * (g - 2.0) * p.powf(g - 3.0)
    }
    pub fn f2_pp(&self, p: f64) -> f64 {
        4.0 * self.a / (p * p * p)
    }
}

struct RowBuilder<'a> {
    m: &'a mut Mat<f64>,
    n: usize,
    h: f64,
}

impl RowBuilder<'_> {
    /// Adds `coef · D^d` acting on block `block` (0 = ρ, 1 = m) to row `row` at node `i`.
    fn add(&mut self, row: usize, block: usize, i: usize, d: usize, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let st: Stencil = operator_stencil(i, self.n, d, self.h);
        for (j, w) in st.iter() {
            self.m[(row, block * self.n + j)] += coef * w;
        }
    }
}

pub fn assemble_integrated(
    profile: &WaveProfile,
    params: &ShockParams,
    es: &EndStates,
    bc: Closure,
) -> Result<DiscreteOperator> {
    check_dirichlet(bc)?;
    let h = check_uniform(&profile.grid)?;
    let n = profile.len();
    let fc = FluxCoefficients::new(params, es);
    let (mu, k2) = (params.mu, params.k * params.k);
    let mut matrix = Mat::<f64>::zeros(2 * n, 2 * n);
    let mut b = RowBuilder { m: &mut matrix, n, h };
    for i in 1..n - 1 {
        let p = profile.p[i];
        let q = profile.dp[i] / p;
        b.add(i, 0, i, 1, params.s);
        b.add(i, 1, i, 1, -1.0);
        let r = n + i;
        b.add(r, 0, i, 1, fc.f1(p) + 0.5 * k2 * q * q);
        b.add(r, 0, i, 2, -k2 * q);
        b.add(r, 0, i, 3, 0.5 * k2);
        b.add(r, 1, i, 1, fc.f2(p));
        b.add(r, 1, i, 2, mu);
    }
    Ok(DiscreteOperator {
        n,
        grid: profile.grid.clone(),
        h,
        matrix,
        kind: OperatorKind::Integrated,
        closure: bc,
        profile_ref: profile_ref(profile),
    })
}

pub fn assemble_original(
    profile: &WaveProfile,
    params: &ShockParams,
    es: &EndStates,
    bc: Closure,
) -> Result<DiscreteOperator> {
    check_dirichlet(bc)?;
    let h = check_uniform(&profile.grid)?;
    let n = profile.len();
    let fc = FluxCoefficients::new(params, es);
    let (mu, k2) = (params.mu, params.k * params.k);
    let mut matrix = Mat::<f64>::zeros(2 * n, 2 * n);
    let mut b = RowBuilder { m: &mut matrix, n, h };
    for i in 1..n - 1 {
        let (p, d1, d2) = (profile.p[i], profile.dp[i], profile.d2p[i]);
        let sigma = d1 / (2.0 * p);
        let sigma_y = (d2 * p - d1 * d1) / (2.0 * p * p);
        b.add(i, 0, i, 1, params.s);
        b.add(i, 1, i, 1, -1.0);
        let r = n + i;
        b.add(r, 0, i, 0, fc.f1_p(p) * d1 + 4.0 * k2 * sigma * sigma_y);
        b.add(r, 0, i, 1, fc.f1(p) - 2.0 * k2 * (sigma_y - sigma * sigma));
        b.add(r, 0, i, 2, -2.0 * k2 * sigma);
        b.add(r, 0, i, 3, 0.5 * k2);
        b.add(r, 1, i, 0, fc.f2_p(p) * d1);
        b.add(r, 1, i, 1, fc.f2(p));
        b.add(r, 1, i, 2, mu);
    }
    Ok(DiscreteOperator {
        n,
        grid: profile.grid.clone(),
        h,
        matrix,
        kind: OperatorKind::Original,
        closure: bc,
        profile_ref: profile_ref(profile),
    })
}

/// Integrated operator with coefficients frozen at the state (P, J) on a
/// periodic grid of `n` points covering a period of length `2L`.
pub fn assemble_frozen_periodic(params: &ShockParams, p: f64, j: f64, half_length: f64, n: usize) -> Result<DiscreteOperator> {
    if n < 8 {
        return Err(Error::InvalidParams(format!("periodic grid needs at least 8 points, got {n}")));
    }
    let h = 2.0 * half_length / n as f64;
    let (alpha, beta) = state_coefficients(p, j, params.s, params.gamma);
    let (mu, k2) = (params.mu, params.k * params.k);
    let w1 = Stencil::at(2, 0, 5, 1, h).weights;
    let w2 = Stencil::at(2, 0, 5, 2, h).weights;
    let w3 = Stencil::at(3, 0, 7, 3, h).weights;
    let mut m = Mat::<f64>::zeros(2 * n, 2 * n);
    let mut add = |row: usize, block: usize, i: usize, w: &[f64], coef: f64| {
        let half = w.len() / 2;
        for (q, wq) in w.iter().enumerate() {
            let col = (i + n + q - half) % n;
            m[(row, block * n + col)] += coef * wq;
        }
    };
    for i in 0..n {
        add(i, 0, i, &w1, params.s);
        add(i, 1, i, &w1, -1.0);
        add(n + i, 0, i, &w1, alpha);
        add(n + i, 0, i, &w3, 0.5 * k2);
        add(n + i, 1, i, &w1, beta);
        add(n + i, 1, i, &w2, mu);
    }
    Ok(DiscreteOperator {
        n,
        grid: (0..n).map(|i| -half_length + i as f64 * h).collect(),
        h,
        matrix: m,
        kind: OperatorKind::FrozenPeriodic,
        closure: Closure::Periodic,
        profile_ref: format!("frozen P={},J={}", fmt_f64(p), fmt_f64(j)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenOptions {
    /// eigenvectors with boundary mass below this are point-spectrum candidates
    pub localization_threshold: f64,
    /// fraction of the grid on each side counted as "boundary"
    pub boundary_fraction: f64,
    /// largest dense matrix dimension accepted
    pub max_dense: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { localization_threshold: 0.05, boundary_fraction: 0.1, max_dense: 6000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub kind: OperatorKind,
    pub n: usize,
    pub half_length: f64,
    pub matrix_dim: usize,
    pub eigenvalues: Vec<Complex64>,
    /// boundary-mass fraction of each eigenvector, in [0, 1]
    pub localization: Vec<f64>,
    /// ‖Av − λv‖ / (‖A‖_F ‖v‖) per pair
    pub residuals: Vec<f64>,
    pub point_candidates: Vec<usize>,
    /// max Re λ over point candidates (−∞ when there are none)
    pub max_re_point: f64,
    pub max_residual: f64,
    /// max over λ of the distance from λ̄ to the spectrum, divided by ‖A‖_F
    pub conjugate_defect: f64,
    pub matrix_norm: f64,
    pub zero_mode_residual: Option<f64>,
    pub localization_threshold: f64,
    pub classification_method: &'static str,
}

fn frobenius(a: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

fn conjugate_defect(ev: &[Complex64]) -> f64 {
    let mut sorted: Vec<Complex64> = ev.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut worst: f64 = 0.0;
    for l in ev {
        let target = l.conj();
        // scan outward from the insertion point, stopping once Re alone exceeds the best
        let start = sorted.partition_point(|z| z.re < target.re);
        let mut best = f64::INFINITY;
        for z in sorted[start..].iter() {
            if z.re - target.re > best {
                break;
            }
            best = best.min((z - target).norm());
        }
        for z in sorted[..start].iter().rev() {
            if target.re - z.re > best {
                break;
            }
            best = best.min((z - target).norm());
        }
        worst = worst.max(best);
    }
    worst
}

/// All eigenvalues of the operator's active block, with per-pair residuals
/// and boundary-mass localization.
pub fn eigen_solve(op: &DiscreteOperator, opts: &EigenOptions) -> Result<EigenReport> {
    let idx = op.active_indices();
    let dim = idx.len();
    if dim > opts.max_dense {
        return Err(Error::TooLarge { size: dim, max: opts.max_dense });
    }
    let a = Mat::<f64>::from_fn(dim, dim, |i, j| op.matrix[(idx[i], idx[j])]);
    let norm = frobenius(&a);
    let evd = a.eigen().map_err(|e| Error::Eigen(format!("{e:?} (matrix dimension {dim})")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues: Vec<Complex64> = (0..dim).map(|q| s[q]).collect();

    // boundary mass per eigenvector
    let nb = ((op.n as f64) * opts.boundary_fraction).ceil() as usize;
    let is_boundary: Vec<bool> = idx
        .iter()
        .map(|&k| {
            let node = op.node_of(k);
            node < nb || node + nb >= op.n
        })
        .collect();
    let mut localization = vec![0.0; dim];
    let mut vnorm = vec![0.0; dim];
    for (q, loc) in localization.iter_mut().enumerate() {
        let (mut tot, mut bnd) = (0.0, 0.0);
        for (r, b) in is_boundary.iter().enumerate() {
            let w = u[(r, q)].norm_sqr();
            tot += w;
            if *b {
                bnd += w;
            }
        }
        vnorm[q] = tot.sqrt();
        *loc = if tot > 0.0 { bnd / tot } else { 1.0 };
    }

    // residuals ‖Av − λv‖ via real products, in column blocks to bound memory
    let mut residuals = vec![0.0; dim];
    const BLOCK: usize = 256;
    let mut q0 = 0;
    while q0 < dim {
        let w = BLOCK.min(dim - q0);
        let vr = Mat::<f64>::from_fn(dim, w, |r, c| u[(r, q0 + c)].re);
        let vi = Mat::<f64>::from_fn(dim, w, |r, c| u[(r, q0 + c)].im);
        let avr = &a * &vr;
        let avi = &a * &vi;
        for c in 0..w {
            let l = eigenvalues[q0 + c];
            let mut acc = 0.0;
            for r in 0..dim {
                let re = avr[(r, c)] - (l.re * vr[(r, c)] - l.im * vi[(r, c)]);
                let im = avi[(r, c)] - (l.re * vi[(r, c)] + l.im * vr[(r, c)]);
                acc += re * re + im * im;
            }
            residuals[q0 + c] = acc.sqrt() / (norm * vnorm[q0 + c]).max(f64::MIN_POSITIVE);
        }
        q0 += w;
    }

    let point_candidates: Vec<usize> =
        (0..dim).filter(|&q| localization[q] < opts.localization_threshold).collect();
    let max_re_point = point_candidates.iter().map(|&q| eigenvalues[q].re).fold(f64::NEG_INFINITY, f64::max);
    Ok(EigenReport {
        kind: op.kind,
        n: op.n,
        half_length: op.grid[op.n - 1].abs().max(op.grid[0].abs()),
        matrix_dim: dim,
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        conjugate_defect: conjugate_defect(&eigenvalues) / norm.max(f64::MIN_POSITIVE),
        eigenvalues,
        localization,
        residuals,
        point_candidates,
        max_re_point,
        matrix_norm: norm,
        zero_mode_residual: None,
        localization_threshold: opts.localization_threshold,
        classification_method: "boundary-mass heuristic",
    })
}

/// ‖𝓛(P', J')‖ / ‖(P', J')‖ over the interior rows, with J' = sP'.
pub fn zero_mode_residual(op: &DiscreteOperator, profile: &WaveProfile, params: &ShockParams) -> Result<f64> {
    if op.kind != OperatorKind::Original {
        return Err(Error::InvalidParams("zero-mode check needs the original (non-integrated) operator".into()));
    }
    let n = op.n;
    let mut v = profile.dp.clone();
    v.extend(profile.dp.iter().map(|d| params.s * d));
    let lv = op.apply(&v);
    let num: f64 = op.active_indices().iter().map(|&k| lv[k] * lv[k]).sum::<f64>().sqrt();
    let den: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    debug_assert_eq!(lv.len(), 2 * n);
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// delocalized: discretized essential spectrum
    Essential,
    /// localized, Re λ ≤ −tol_margin
    Point,
    /// localized but within matching distance of a Fredholm border
    EssentialArtifact,
    /// localized, Re λ > −tol_margin, away from the borders
    UnstablePoint,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Essential => "essential",
            Classification::Point => "point",
            Classification::EssentialArtifact => "essential_artifact",
            Classification::UnstablePoint => "unstable_point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictOptions {
    pub tol_margin: f64,
    /// eigenvalue λ matches a border if within `match_distance · (1 + |λ|)` of a border sample
    pub match_distance: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        VerdictOptions { tol_margin: 1e-6, match_distance: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offender {
    pub index: usize,
    pub lambda: Complex64,
    pub localization: f64,
    pub border_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointVerdict {
    pub pass: bool,
    /// −max Re λ over localized eigenvalues not classified as border artifacts
    pub spectral_margin: f64,
    pub max_re_point: f64,
    pub offending: Option<Offender>,
    pub classes: Vec<Classification>,
    pub n_point: usize,
    pub n_artifacts: usize,
    pub tol_margin: f64,
}

fn border_distance(l: Complex64, borders: &[SpectrumCurve; 2]) -> f64 {
    borders
        .iter()
        .flat_map(|c| c.lambda_plus.iter().chain(&c.lambda_minus))
        .map(|z| (z - l).norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn stability_verdict(report: &EigenReport, essential: &[SpectrumCurve; 2], opts: &VerdictOptions) -> PointVerdict {
    let mut classes = vec![Classification::Essential; report.eigenvalues.len()];
    let mut offending: Option<Offender> = None;
    let mut max_re = f64::NEG_INFINITY;
    let mut n_artifacts = 0;
    for &q in &report.point_candidates {
        let l = report.eigenvalues[q];
        if l.re <= -opts.tol_margin {
            classes[q] = Classification::Point;
            max_re = max_re.max(l.re);
            continue;
        }
        let d = border_distance(l, essential);
        if d <= opts.match_distance * (1.0 + l.norm()) {
            classes[q] = Classification::EssentialArtifact;
            n_artifacts += 1;
        } else {
            classes[q] = Classification::UnstablePoint;
            max_re = max_re.max(l.re);
            let worse = offending.map(|o| l.re > o.lambda.re).unwrap_or(true);
            if worse {
                offending = Some(Offender { index: q, lambda: l, localization: report.localization[q], border_distance: d });
            }
        }
    }
    PointVerdict {
        pass: offending.is_none(),
        spectral_margin: -max_re,
        max_re_point: report.max_re_point,
        offending,
        n_point: classes.iter().filter(|c| **c == Classification::Point).count(),
        classes,
        n_artifacts,
        tol_margin: opts.tol_margin,
    }
}

/// CSV with columns `re,im,localization,classified_as`.
pub fn eigen_csv(report: &EigenReport, classes: &[Classification]) -> String {
    let mut t = CsvTable::new(&["re", "im", "localization", "classified_as"]);
    for (q, l) in report.eigenvalues.iter().enumerate() {
        t.row(&[fmt_f64(l.re), fmt_f64(l.im), fmt_f64(report.localization[q]), classes[q].label().to_string()]);
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare(m: Mat<f64>) -> DiscreteOperator {
        let n = m.nrows() / 2;
        DiscreteOperator {
            n,
            grid: (0..n).map(|i| i as f64).collect(),
            h: 1.0,
            matrix: m,
            kind: OperatorKind::FrozenPeriodic,
            closure: Closure::Periodic,
            profile_ref: String::new(),
        }
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -1.0;
        let r = eigen_solve(&bare(m), &EigenOptions::default()).unwrap();
        let mut ims: Vec<f64> = r.eigenvalues.iter().map(|l| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
        assert!(r.eigenvalues.iter().all(|l| l.re.abs() < 1e-14));
        assert!(r.max_residual < 1e-14);
    }

    #[test]
    fn size_cap() {
        let m = Mat::<f64>::zeros(8, 8);
        let opts = EigenOptions { max_dense: 4, ..Default::default() };
        assert!(matches!(eigen_solve(&bare(m), &opts), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn conjugate_defect_detects_unpaired() {
        let ev = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        assert_eq!(conjugate_defect(&ev), 0.0);
        let ev = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -0.5)];
        assert!((conjugate_defect(&ev) - 0.5).abs() < 1e-15);
    }
}
