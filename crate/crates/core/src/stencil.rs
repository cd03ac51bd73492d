//! Finite-difference weights on uniform grids.
//!
//! Weights come from Fornberg's recursion, so any width / derivative order /
//! offset is available. The builders below only decide *which* nodes a
//! stencil uses near the ends of a grid.

/// Fornberg's algorithm: weights for derivatives `0..=m` at `z` using nodes `x`.
///
/// Returns `w[d][j]`, the weight of node `x[j]` in the `d`-th derivative.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A derivative stencil on a uniform grid: `u^(d)(x_i) ≈ Σ_j weights[j] · u[start + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Stencil for the `d`-th derivative at node `i` using nodes `start..start+width`.
    pub fn at(i: usize, start: usize, width: usize, d: usize, h: f64) -> Self {
        let x: Vec<f64> = (start..start + width).map(|j| j as f64).collect();
        let w = fornberg(i as f64, &x, d);
        let scale = h.powi(d as i32);
        Stencil {
            start,
            weights: w[d].iter().map(|v| v / scale).collect(),
        }
    }

    pub fn apply(&self, u: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&u[self.start..self.start + self.weights.len()])
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn end(&self) -> usize {
        self.start + self.weights.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(j, &w)| (self.start + j, w))
    }
}

/// `width` consecutive nodes, as centered on `i` as the grid `0..n` allows.
pub fn fitted(i: usize, n: usize, d: usize, width: usize, h: f64) -> Stencil {
    assert!(width <= n, "stencil width {width} exceeds grid size {n}");
    let lo = i.saturating_sub(width / 2).min(n - width);
    Stencil::at(i, lo, width, d, h)
}

/// Widest odd centered stencil of width ≤ `max_width` fitting in `0..n`,
/// shrinking by two down to `min_width`; one-sided `min_width` otherwise.
pub fn centered_or_shrunk(i: usize, n: usize, d: usize, max_width: usize, min_width: usize, h: f64) -> Stencil {
    let mut w = max_width;
    while w >= min_width {
        let half = w / 2;
        if i >= half && i + half < n {
            return Stencil::at(i, i - half, w, d, h);
        }
        if w < 2 {
            break;
        }
        w -= 2;
    }
    fitted(i, n, d, min_width, h)
}

/// Boundary-aware stencils used by the linearized-operator assemblies.
///
/// Shrinking to narrower *centered* stencils near the ends (rather than
/// full-order one-sided closures) avoids spurious unstable boundary modes.
/// The third derivative needs five nodes, so next to the end it is one-sided.
pub fn operator_stencil(i: usize, n: usize, d: usize, h: f64) -> Stencil {
    match d {
        0 => Stencil { start: i, weights: vec![1.0] },
        1 | 2 => centered_or_shrunk(i, n, d, 5, 3, h),
        3 => {
            if i < 2 || i + 2 >= n {
                fitted(i, n, 3, 5, h)
            } else {
                centered_or_shrunk(i, n, 3, 7, 5, h)
            }
        }
        _ => fitted(i, n, d, d + 3, h),
    }
}

/// Stencils of the profile collocation scheme (4th order everywhere).
pub fn profile_stencil(i: usize, n: usize, d: usize, h: f64) -> Stencil {
    match d {
        1 => fitted(i, n, 1, 5, h),
        2 if i >= 2 && i + 2 < n => Stencil::at(i, i - 2, 5, 2, h),
        2 => fitted(i, n, 2, 6, h),
        _ => fitted(i, n, d, d + 4, h),
    }
}

/// `d`-th derivative of samples `u` with fitted stencils of the given width.
pub fn derivative(u: &[f64], h: f64, d: usize, width: usize) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| fitted(i, n, d, width, h).apply(u)).collect()
}

/// `d`-th derivative with the profile scheme's stencils.
pub fn profile_derivative(u: &[f64], h: f64, d: usize) -> Vec<f64> {
    let n = u.len();
    // interior stencils are all identical, so build them once
    let interior_2 = (n >= 6 && (1..=2).contains(&d)).then(|| Stencil::at(2, 0, 5, d, h).weights);
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                if let Some(w) = &interior_2 {
                    return w.iter().zip(&u[i - 2..i + 3]).map(|(a, b)| a * b).sum();
                }
            }
            profile_stencil(i, n, d, h).apply(u)
        })
        .collect()
}
