//! Operators on the truncated number basis `|0⟩ … |N−1⟩`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a constructed operator is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Smallest truncation for which the constructions below are well-defined.
pub const MIN_DIM: usize = 2;

/// A dense operator in the truncated Fock basis, entry `(m, n) = ⟨m|A|n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    data: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch { expected: data.nrows(), got: data.ncols() });
        }
        if data.nrows() < MIN_DIM {
            return Err(Error::InvalidParameter(format!(
                "truncation N = {} must be >= {MIN_DIM}",
                data.nrows()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        Ok(Self { data })
    }

    pub(crate) fn from_matrix_unchecked(data: DMatrix<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[(m, n)]
    }

    pub fn dagger(&self) -> Self {
        Self { data: self.data.adjoint() }
    }

    /// Largest entry of `|A − A†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Number of nonzero diagonals on either side of the main diagonal.
    pub fn bandwidth(&self) -> usize {
        let n = self.dim();
        let mut bw = 0;
        for j in 0..n {
            for i in 0..n {
                if self.data[(i, j)] != Complex64::new(0.0, 0.0) {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { data: &self.data * Complex64::new(s, 0.0) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { data: &self.data * &other.data }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { data: &self.data + &other.data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { data: &self.data - &other.data }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self { data: &self.data * &other.data - &other.data * &self.data }
    }

    /// `⟨ψ|A|ψ⟩` for a state vector in the same basis.
    pub fn expectation(&self, state: &nalgebra::DVector<Complex64>) -> Complex64 {
        state.dotc(&(&self.data * state))
    }

    /// Conjugation `U A U†` by the parity operator `(−1)^n̂`.
    pub fn parity_transformed(&self) -> Self {
        let mut data = self.data.clone();
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if (i + j) % 2 == 1 {
                    data[(i, j)] = -data[(i, j)];
                }
            }
        }
        Self { data }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.data - &other.data).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_dump(&self) -> MatrixDump {
        let n = self.dim();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.data[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixDump { dim: n, data }
    }

    pub fn from_dump(dump: &MatrixDump) -> Result<Self> {
        let n = dump.dim;
        if dump.data.len() != n * n {
            return Err(Error::Dump(format!("expected {} entries, found {}", n * n, dump.data.len())));
        }
        let data = DMatrix::from_fn(n, n, |i, j| {
            let [re, im] = dump.data[i * n + j];
            Complex64::new(re, im)
        });
        Self::from_matrix(data)
    }

    /// Binary dump: little-endian `u64` dimension followed by row-major
    /// `(re, im)` pairs of `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        w.write_all(&(n as u64).to_le_bytes())?;
        for i in 0..n {
            for j in 0..n {
                let z = self.data[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Dump(e.to_string());
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let n = u64::from_le_bytes(word) as usize;
        if n > 1 << 16 {
            return Err(Error::Dump(format!("implausible dimension {n}")));
        }
        let mut data = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                r.read_exact(&mut word).map_err(io)?;
                let re = f64::from_le_bytes(word);
                r.read_exact(&mut word).map_err(io)?;
                let im = f64::from_le_bytes(word);
                data[(i, j)] = Complex64::new(re, im);
            }
        }
        Self::from_matrix(data)
    }
}

/// JSON form of a matrix dump: the dimension plus row-major complex pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDump {
    pub dim: usize,
    pub data: Vec<[f64; 2]>,
}

fn check_dim(n: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::InvalidParameter(format!("truncation N = {n} must be >= {MIN_DIM}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be > 0")));
    }
    Ok(())
}

pub fn annihilation(n: usize) -> Result<FockOperator> {
    check_dim(n)?;
    let mut data = DMatrix::zeros(n, n);
    for k in 1..n {
        data[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    Ok(FockOperator { data })
}

pub fn creation(n: usize) -> Result<FockOperator> {
    Ok(annihilation(n)?.dagger())
}

pub fn number(n: usize) -> Result<FockOperator> {
    check_dim(n)?;
    let data = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| Complex64::new(k as f64, 0.0)));
    Ok(FockOperator { data })
}

/// `Q = √(λ/2)(a† + a)`.
pub fn position_op(n: usize, lambda: f64) -> Result<FockOperator> {
    check_lambda(lambda)?;
    let a = annihilation(n)?;
    Ok(a.add(&a.dagger()).scaled((lambda / 2.0).sqrt()))
}

/// `P = i√(λ/2)(a† − a)`.
pub fn momentum_op(n: usize, lambda: f64) -> Result<FockOperator> {
    check_lambda(lambda)?;
    let a = annihilation(n)?;
    let diff = a.dagger().sub(&a);
    Ok(FockOperator { data: diff.data * Complex64::new(0.0, (lambda / 2.0).sqrt()) })
}

/// Diagonal element `[λ(2n+1) − 1]²/4` of the quasienergy operator.
pub fn quasienergy_diagonal(k: usize, lambda: f64) -> f64 {
    let x = lambda * (2 * k + 1) as f64 - 1.0;
    0.25 * x * x
}

/// The scaled quasienergy `g = (Q² + P² − 1)²/4 + √β Q`.
///
/// Built from the exact identity `Q² + P² = λ(2n̂ + 1)`, so the matrix is
/// tridiagonal and free of truncation artefacts at the basis edge.
pub fn quasienergy_operator(n: usize, lambda: f64, beta: f64) -> Result<FockOperator> {
    check_dim(n)?;
    check_lambda(lambda)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 0")));
    }
    let mut data = DMatrix::zeros(n, n);
    let drive = beta.sqrt() * (lambda / 2.0).sqrt();
    for k in 0..n {
        data[(k, k)] = Complex64::new(quasienergy_diagonal(k, lambda), 0.0);
        if k + 1 < n {
            let off = Complex64::new(drive * ((k + 1) as f64).sqrt(), 0.0);
            data[(k, k + 1)] = off;
            data[(k + 1, k)] = off;
        }
    }
    Ok(FockOperator { data })
}

/// The same operator assembled literally from the truncated `Q` and `P`
/// matrices. Agrees with [`quasienergy_operator`] except in the last two
/// rows and columns, where truncation corrupts `Q² + P²`.
pub fn quasienergy_from_quadratures(n: usize, lambda: f64, beta: f64) -> Result<FockOperator> {
    let q = position_op(n, lambda)?;
    let p = momentum_op(n, lambda)?;
    let r2 = q.mul(&q).add(&p.mul(&p)).sub(&FockOperator::identity(n));
    Ok(r2.mul(&r2).scaled(0.25).add(&q.scaled(beta.sqrt())))
}

/// `H = Δ n̂ + χ n̂(n̂+1) + f(a† + a)`.
pub fn rwa_hamiltonian(n: usize, delta: f64, chi: f64, f: f64) -> Result<FockOperator> {
    check_dim(n)?;
    let mut data = DMatrix::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        data[(k, k)] = Complex64::new(delta * kf + chi * kf * (kf + 1.0), 0.0);
        if k + 1 < n {
            let off = Complex64::new(f * ((k + 1) as f64).sqrt(), 0.0);
            data[(k, k + 1)] = off;
            data[(k + 1, k)] = off;
        }
    }
    Ok(FockOperator { data })
}

/// Constant dropped between `(χ/Δ²)·H` and `g`: `(1 − λ)²/4`.
pub fn dropped_constant(lambda: f64) -> f64 {
    0.25 * (1.0 - lambda) * (1.0 - lambda)
}

/// Maps the rotating-frame Hamiltonian onto the scaled quasienergy:
/// `(χ/Δ²)·H + (1−λ)²/4`, conjugated by parity when `f/Δ > 0` so the drive
/// enters as `+√β Q`.
pub fn scaled_rwa_hamiltonian(n: usize, delta: f64, chi: f64, f: f64) -> Result<FockOperator> {
    if delta == 0.0 || chi == 0.0 {
        return Err(Error::DegenerateScaling);
    }
    let lambda = -chi / delta;
    let h = rwa_hamiltonian(n, delta, chi, f)?.scaled(chi / (delta * delta));
    let shifted = h.add(&FockOperator::identity(n).scaled(dropped_constant(lambda)));
    Ok(if f / delta > 0.0 { shifted.parity_transformed() } else { shifted })
}

/// Default truncation `⌈3/λ⌉`.
pub fn default_truncation(lambda: f64) -> usize {
    ((3.0 / lambda).ceil() as usize).max(MIN_DIM)
}
