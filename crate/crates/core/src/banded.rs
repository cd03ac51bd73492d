//! Banded LU with partial pivoting (LAPACK `gbtf2` layout) for the Newton
//! steps of the profile solver.

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage is column-major with `kl` extra rows above the band for the
/// fill-in produced by row interchanges: entry `(i, j)` lives at
/// `data[j * ld + kl + ku + i - j]`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, ld, data: vec![0.0; ld * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; panics if it lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            *yi = (lo..hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        y
    }

    /// Factorizes in place and solves `A x = b`, overwriting `b` with `x`.
    pub fn solve(mut self, b: &mut [f64]) -> Result<()> {
        let piv = self.factorize()?;
        self.solve_factored(&piv, b);
        Ok(())
    }

    fn factorize(&mut self) -> Result<Vec<usize>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0; n];
        // last column touched by the current row set of U
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].abs();
            for r in j + 1..=j + km {
                let v = self.data[self.idx(r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[j] = p;
            if best == 0.0 {
                return Err(Error::Singular(j));
            }
            ju = ju.max((p + ku).min(n - 1));
            if p != j {
                for c in j..=ju {
                    let (a, b) = (self.idx(j, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(j, j)];
            for r in j + 1..=j + km {
                let k = self.idx(r, j);
                self.data[k] /= d;
            }
            for c in j + 1..=ju {
                let u = self.data[self.idx(j, c)];
                if u == 0.0 {
                    continue;
                }
                for r in j + 1..=j + km {
                    let l = self.data[self.idx(r, j)];
                    let k = self.idx(r, c);
                    self.data[k] -= l * u;
                }
            }
        }
        Ok(piv)
    }

    fn solve_factored(&self, piv: &[usize], b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            b.swap(j, piv[j]);
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            for r in j + 1..=j + km {
                b[r] -= self.data[self.idx(r, j)] * bj;
            }
        }
        let ubw = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] /= self.data[self.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(ubw)..j {
                b[i] -= self.data[self.idx(i, j)] * bj;
            }
        }
    }
}
