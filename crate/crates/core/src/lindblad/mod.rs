//! The dissipative master equation
//!
//! ```text
//! ρ̇ = −(i/ħ)[H, ρ] + κ{(1 + n̄)D[a]ρ + n̄D[a†]ρ},   D[A]ρ = AρA† − ½{A†A, ρ}
//! ```
//!
//! its time evolution and its stationary state.

mod banded;
mod evolve;
mod steady;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, FockOperator, HERMITIAN_TOL, MIN_DIM};
use crate::model::ScaledParams;
use crate::spectrum::hermitian_eigen;

pub use banded::BandedLu;
pub use evolve::{evolve, EvolveOptions};
pub use steady::{steady_state, SteadyMethod, SteadyState, SteadyStateOptions};

pub const RHO_HERMITIAN_TOL: f64 = 1e-10;
pub const RHO_TRACE_TOL: f64 = 1e-10;
pub const RHO_PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self { data };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(data: DMatrix<Complex64>) -> Self {
        Self { data }
    }

    pub fn pure(state: &DVector<Complex64>) -> Result<Self> {
        let norm = state.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let v = state / Complex64::new(norm, 0.0);
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn number_state(dim: usize, k: usize) -> Result<Self> {
        if dim < MIN_DIM || k >= dim {
            return Err(Error::InvalidParameter(format!("number state {k} in dimension {dim}")));
        }
        let mut data = DMatrix::zeros(dim, dim);
        data[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(Self { data })
    }

    /// Truncated Bose-Einstein state `ρ ∝ Σ (n̄/(1+n̄))ⁿ |n⟩⟨n|`.
    pub fn thermal(dim: usize, nbar: f64) -> Result<Self> {
        if dim < MIN_DIM || !(nbar >= 0.0) {
            return Err(Error::InvalidParameter(format!("thermal state with dim {dim}, nbar {nbar}")));
        }
        let ratio = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..dim).map(|k| ratio.powi(k as i32)).collect();
        let total: f64 = weights.iter().sum();
        let data = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(weights[i] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { data })
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

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn purity(&self) -> f64 {
        // tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                dev = dev.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues ascending with their eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, Vec<DVector<Complex64>>) {
        hermitian_eigen(&self.hermitian_part())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0.first().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < MIN_DIM || self.data.nrows() != self.data.ncols() {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{}",
                self.data.nrows(),
                self.data.ncols()
            )));
        }
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensityMatrix("non-finite entries".into()));
        }
        let dev = self.hermitian_deviation();
        if dev > RHO_HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("Hermiticity violated by {dev:e}")));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > RHO_TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -RHO_PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `tr(Aρ)`.
    pub fn expectation(&self, op: &FockOperator) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: op.dim() });
        }
        Ok((op.matrix() * &self.data).trace())
    }

    /// `½ tr|ρ − σ|`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let diff = &self.data - &other.data;
        let diff = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(0.5 * hermitian_eigen(&diff).0.iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn to_operator(&self) -> FockOperator {
        FockOperator::from_matrix_unchecked(self.data.clone())
    }

    fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Projects onto Hermitian matrices and rescales to unit trace in place.
pub(crate) fn hermitize_and_normalize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)].im = 0.0;
    }
    let tr: f64 = (0..n).map(|k| m[(k, k)].re).sum();
    if tr != 0.0 {
        *m /= Complex64::new(tr, 0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladGenerator {
    h: FockOperator,
    /// Nonzero entries `(row, col, H_rc)`.
    h_entries: Vec<(usize, usize, Complex64)>,
    hbar_eff: f64,
    kappa: f64,
    nbar: f64,
    /// `√k`, the entries of `a` and `a†`.
    sqrt_k: Vec<f64>,
    /// Diagonal of `a†a`.
    n_diag: Vec<f64>,
    /// Diagonal of the truncated product `aa†`, whose last entry is zero.
    aad_diag: Vec<f64>,
}

impl LindbladGenerator {
    pub fn new(h: FockOperator, hbar_eff: f64, kappa: f64, nbar: f64) -> Result<Self> {
        let deviation = h.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput { deviation });
        }
        if !(hbar_eff > 0.0 && hbar_eff.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar_eff = {hbar_eff} must be > 0")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be >= 0")));
        }
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("nbar = {nbar} must be >= 0")));
        }
        let n = h.dim();
        let mut h_entries = Vec::new();
        for c in 0..n {
            for r in 0..n {
                let v = h.get(r, c);
                if v != Complex64::new(0.0, 0.0) {
                    h_entries.push((r, c, v));
                }
            }
        }
        let sqrt_k = (0..n).map(|k| (k as f64).sqrt()).collect();
        let n_diag = (0..n).map(|k| k as f64).collect();
        let aad_diag = (0..n).map(|k| if k + 1 < n { (k + 1) as f64 } else { 0.0 }).collect();
        Ok(Self { h, h_entries, hbar_eff, kappa, nbar, sqrt_k, n_diag, aad_diag })
    }

    /// Generator of the scaled system: `H = g`, `ħ → λ`, `κ = 2η`, so that
    /// mean amplitudes relax at the classical rate `η`.
    pub fn scaled(params: &ScaledParams, n: usize) -> Result<Self> {
        params.validate()?;
        let g = fock::quasienergy_operator(n, params.lambda, params.beta)?;
        Self::new(g, params.lambda, scaled_kappa(params.eta), params.nbar)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.h
    }

    pub fn hbar_eff(&self) -> f64 {
        self.hbar_eff
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rho.nrows() });
        }
        let mut out = DMatrix::zeros(n, n);
        self.apply_into(rho, &mut out);
        Ok(out)
    }

    /// `out ← L(ρ)`; shapes are assumed to match.
    pub(crate) fn apply_into(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let n = self.dim();
        let down = self.kappa * (1.0 + self.nbar);
        let up = self.kappa * self.nbar;
        let rs = rho.as_slice();
        let os = out.as_mut_slice();
        // column-major: (i, j) ↦ i + j n
        for j in 0..n {
            let col = j * n;
            for i in 0..n {
                let decay = 0.5 * (down * (self.n_diag[i] + self.n_diag[j]) + up * (self.aad_diag[i] + self.aad_diag[j]));
                let mut v = -rs[i + col] * decay;
                if i + 1 < n && j + 1 < n {
                    v += rs[i + 1 + col + n] * (down * self.sqrt_k[i + 1] * self.sqrt_k[j + 1]);
                }
                if i > 0 && j > 0 && up != 0.0 {
                    v += rs[i - 1 + col - n] * (up * self.sqrt_k[i] * self.sqrt_k[j]);
                }
                os[i + col] = v;
            }
        }
        let minus_i_over_hbar = Complex64::new(0.0, -1.0 / self.hbar_eff);
        for &(r, c, h) in &self.h_entries {
            let left = minus_i_over_hbar * h;
            // −(i/ħ) H_rc ρ_cj contributes to (r, j); +(i/ħ) ρ_ir H_rc to (i, c)
            for j in 0..n {
                os[r + j * n] += left * rs[c + j * n];
            }
            let (dst, src) = (c * n, r * n);
            for i in 0..n {
                os[i + dst] -= left * rs[i + src];
            }
        }
    }

    /// Gershgorin bound on the spectral radius of the superoperator.
    pub fn spectral_bound(&self) -> f64 {
        let n = self.dim();
        let mut rows = vec![0.0; n * n];
        self.for_each_superoperator_entry(|r, _, v| rows[r] += v.norm());
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Calls `f(row, col, value)` for every nonzero entry of the N²×N²
    /// superoperator in the column-major vectorization `(i, j) ↦ i + jN`.
    pub(crate) fn for_each_superoperator_entry<F: FnMut(usize, usize, Complex64)>(&self, mut f: F) {
        let n = self.dim();
        let down = self.kappa * (1.0 + self.nbar);
        let up = self.kappa * self.nbar;
        let idx = |i: usize, j: usize| i + j * n;
        for j in 0..n {
            for i in 0..n {
                let row = idx(i, j);
                let decay = 0.5 * (down * (self.n_diag[i] + self.n_diag[j]) + up * (self.aad_diag[i] + self.aad_diag[j]));
                f(row, row, Complex64::new(-decay, 0.0));
                if i + 1 < n && j + 1 < n && down != 0.0 {
                    f(row, idx(i + 1, j + 1), Complex64::new(down * self.sqrt_k[i + 1] * self.sqrt_k[j + 1], 0.0));
                }
                if i > 0 && j > 0 && up != 0.0 {
                    f(row, idx(i - 1, j - 1), Complex64::new(up * self.sqrt_k[i] * self.sqrt_k[j], 0.0));
                }
            }
        }
        let minus_i_over_hbar = Complex64::new(0.0, -1.0 / self.hbar_eff);
        for &(r, c, h) in &self.h_entries {
            let left = minus_i_over_hbar * h;
            for j in 0..n {
                f(idx(r, j), idx(c, j), left);
            }
            for i in 0..n {
                f(idx(i, c), idx(i, r), -left);
            }
        }
    }
}

/// Rate `κ` entering the dissipator for scaled damping `η`.
pub fn scaled_kappa(eta: f64) -> f64 {
    2.0 * eta
}

/// `(⟨Q⟩, ⟨P⟩)` of a density matrix at scale `λ`.
pub fn quadrature_means(rho: &DensityMatrix, lambda: f64) -> Result<(f64, f64)> {
    let n = rho.dim();
    let m = rho.matrix();
    // ⟨a⟩ = Σ √(k+1) ρ_{k+1,k}
    let a: Complex64 = (0..n - 1).map(|k| m[(k + 1, k)] * ((k + 1) as f64).sqrt()).sum();
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be > 0")));
    }
    let s = (2.0 * lambda).sqrt();
    Ok((s * a.re, s * a.im))
}

/// Serialized sidecar describing a stored stationary state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateRecord {
    pub dim: usize,
    pub method: SteadyMethod,
    pub residual: f64,
    pub hbar_eff: f64,
    pub kappa: f64,
    pub nbar: f64,
}
