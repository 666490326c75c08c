//! Banded LU factorization with partial pivoting for complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// LU factors of an `n×n` matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `r` stores columns `r − kl ..= r + kl + ku`; the extra `kl` columns
/// hold the fill produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Zero matrix ready to be filled with [`BandedLu::add`].
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![Complex64::new(0.0, 0.0); n * width], pivots: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    /// Adds `v` to entry `(r, c)`, which must lie inside the band.
    pub fn add(&mut self, r: usize, c: usize, v: Complex64) {
        assert!(c + self.kl >= r && c <= r + self.ku, "entry ({r}, {c}) outside band");
        let p = self.pos(r, c);
        self.data[p] += v;
    }

    /// Replaces row `r` by the unit row `e_r`.
    pub fn set_unit_row(&mut self, r: usize) {
        let start = r * self.width;
        self.data[start..start + self.width].fill(Complex64::new(0.0, 0.0));
        let p = self.pos(r, r);
        self.data[p] = Complex64::new(1.0, 0.0);
    }

    pub fn factorize(&mut self) -> Result<()> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        self.pivots = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.pos(k, k)].norm_sqr();
            for r in k + 1..=last_row {
                let m = self.data[self.pos(r, k)].norm_sqr();
                if m > best {
                    best = m;
                    piv = r;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular);
            }
            self.pivots.push(piv);
            let last_col = (k + kl + ku).min(n - 1);
            if piv != k {
                for c in k..=last_col {
                    let (a, b) = (self.pos(k, c), self.pos(piv, c));
                    self.data.swap(a, b);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / self.data[self.pos(k, k)];
            let span = last_col - k;
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let pivot_row = &head[k * w + kl + 1..k * w + kl + 1 + span];
            for r in k + 1..=last_row {
                let row = &mut tail[(r - k - 1) * w..(r - k) * w];
                let lead = k + kl - r;
                let l = row[lead] * inv;
                row[lead] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (dst, src) in row[lead + 1..lead + 1 + span].iter_mut().zip(pivot_row) {
                    *dst -= l * src;
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place using the stored factors.
    pub fn solve(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        assert_eq!(self.pivots.len(), n, "matrix not factorized");
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            if bk == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.data[self.pos(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.data[self.pos(k, c)] * b[c];
            }
            b[k] = s / self.data[self.pos(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn banded_test_matrix(n: usize, kl: usize, ku: usize, seed: u64) -> DMatrix<Complex64> {
        let mut s = seed | 1;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        DMatrix::from_fn(n, n, |r, c| {
            if c + kl >= r && c <= r + ku {
                Complex64::new(next(), next())
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn matches_dense_solve() {
        for (n, kl, ku, seed) in [(30, 3, 5, 1), (40, 7, 2, 2), (25, 0, 0, 3), (50, 11, 11, 4)] {
            let a = banded_test_matrix(n, kl, ku, seed);
            let mut lu = BandedLu::zeros(n, kl, ku);
            for r in 0..n {
                for c in 0..n {
                    if a[(r, c)] != Complex64::new(0.0, 0.0) {
                        lu.add(r, c, a[(r, c)]);
                    }
                }
            }
            lu.factorize().unwrap();
            let x_true = DVector::from_fn(n, |i, _| Complex64::new(i as f64, 1.0 - i as f64 * 0.5));
            let b = &a * &x_true;
            let mut x = b.as_slice().to_vec();
            lu.solve(&mut x);
            let err = x.iter().zip(x_true.iter()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} kl={kl} ku={ku}: {err}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]]
        let mut lu = BandedLu::zeros(2, 1, 1);
        lu.add(0, 1, Complex64::new(1.0, 0.0));
        lu.add(1, 0, Complex64::new(1.0, 0.0));
        lu.factorize().unwrap();
        let mut b = vec![Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)];
        lu.solve(&mut b);
        assert!((b[0] - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!((b[1] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let mut lu = BandedLu::zeros(3, 1, 1);
        lu.add(0, 0, Complex64::new(1.0, 0.0));
        lu.add(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(lu.factorize(), Err(Error::Singular)));
    }
}
