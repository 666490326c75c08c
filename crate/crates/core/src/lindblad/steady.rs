//! Stationary states `L(ρ) = 0`, `tr ρ = 1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::banded::BandedLu;
use super::evolve::{EvolveOptions, Stepper};
use super::{hermitize_and_normalize, max_abs, DensityMatrix, LindbladGenerator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyMethod {
    /// Direct sparse solve of the vectorized linear system.
    NullSpace,
    /// Time integration until the generator residual drops below tolerance.
    LongTime,
}

impl SteadyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyMethod::NullSpace => "null-space",
            SteadyMethod::LongTime => "long-time",
        }
    }
}

impl fmt::Display for SteadyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SteadyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null-space" => Ok(SteadyMethod::NullSpace),
            "long-time" => Ok(SteadyMethod::LongTime),
            other => Err(Error::InvalidParameter(format!("unknown steady-state method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateOptions {
    pub method: SteadyMethod,
    /// Target for `max |L(ρ)_ij|`.
    pub tol: f64,
    /// Local error tolerance of the integrator (long-time only).
    pub step_tol: f64,
    /// Integration horizon before giving up (long-time only).
    pub max_time: f64,
    /// Starting state for the long-time method; the vacuum by default.
    pub initial: Option<DensityMatrix>,
}

impl SteadyStateOptions {
    pub fn new(method: SteadyMethod, tol: f64) -> Self {
        Self { method, tol, step_tol: 1e-9, max_time: 1e6, initial: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `max |L(ρ)_ij|` of the returned state.
    pub residual: f64,
    pub method: SteadyMethod,
}

/// Relative size below which the pinned diagonal entry is considered too
/// small to anchor the linear solve.
const PIN_RATIO: f64 = 1e-3;
const REFINEMENT_STEPS: usize = 3;

pub fn steady_state(gen: &LindbladGenerator, opts: &SteadyStateOptions) -> Result<SteadyState> {
    if gen.kappa() == 0.0 {
        return Err(Error::NoDissipation);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {} must be > 0", opts.tol)));
    }
    match opts.method {
        SteadyMethod::NullSpace => null_space(gen, opts.tol),
        SteadyMethod::LongTime => long_time(gen, opts),
    }
}

fn residual(gen: &LindbladGenerator, rho: &DMatrix<Complex64>) -> f64 {
    let n = gen.dim();
    let mut out = DMatrix::zeros(n, n);
    gen.apply_into(rho, &mut out);
    max_abs(&out)
}

/// Factorizes the superoperator with the equation for the diagonal entry
/// `ρ_mm` replaced by `ρ_mm = 1`.
fn factor_pinned(gen: &LindbladGenerator, pin: usize) -> Result<(BandedLu, usize)> {
    let n = gen.dim();
    let (mut kl, mut ku) = (0usize, 0usize);
    gen.for_each_superoperator_entry(|r, c, _| {
        if r > c {
            kl = kl.max(r - c);
        } else {
            ku = ku.max(c - r);
        }
    });
    let p = pin + pin * n;
    let mut lu = BandedLu::zeros(n * n, kl, ku);
    gen.for_each_superoperator_entry(|r, c, v| {
        if r != p {
            lu.add(r, c, v);
        }
    });
    lu.set_unit_row(p);
    lu.factorize()?;
    Ok((lu, p))
}

fn solve_pinned(gen: &LindbladGenerator, pin: usize, tol: f64) -> Result<(DMatrix<Complex64>, f64)> {
    let n = gen.dim();
    let (lu, p) = factor_pinned(gen, pin)?;
    let mut x = vec![Complex64::new(0.0, 0.0); n * n];
    x[p] = Complex64::new(1.0, 0.0);
    lu.solve(&mut x);
    let mut rho = DMatrix::from_column_slice(n, n, &x);
    hermitize_and_normalize(&mut rho);
    let mut res = residual(gen, &rho);
    for _ in 0..REFINEMENT_STEPS {
        if res <= tol {
            break;
        }
        let mut r = DMatrix::zeros(n, n);
        gen.apply_into(&rho, &mut r);
        let mut delta: Vec<Complex64> = r.as_slice().iter().map(|v| -v).collect();
        delta[p] = Complex64::new(0.0, 0.0);
        lu.solve(&mut delta);
        rho += DMatrix::from_column_slice(n, n, &delta);
        hermitize_and_normalize(&mut rho);
        res = residual(gen, &rho);
    }
    Ok((rho, res))
}

fn null_space(gen: &LindbladGenerator, tol: f64) -> Result<SteadyState> {
    let n = gen.dim();
    let (mut rho, mut res) = solve_pinned(gen, 0, tol)?;
    let (argmax, max) = (0..n).map(|k| (k, rho[(k, k)].re)).fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    if rho[(0, 0)].re < PIN_RATIO * max {
        (rho, res) = solve_pinned(gen, argmax, tol)?;
    }
    if res > tol {
        return Err(Error::SolverStagnation { residual: res, target: tol });
    }
    let rho = DensityMatrix::from_matrix(rho)?;
    Ok(SteadyState { rho, residual: res, method: SteadyMethod::NullSpace })
}

fn long_time(gen: &LindbladGenerator, opts: &SteadyStateOptions) -> Result<SteadyState> {
    let n = gen.dim();
    let rho0 = match &opts.initial {
        Some(rho) if rho.dim() != n => return Err(Error::DimensionMismatch { expected: n, got: rho.dim() }),
        Some(rho) => rho.matrix().clone(),
        None => DensityMatrix::number_state(n, 0)?.into_matrix(),
    };
    let evolve_opts = EvolveOptions::with_tol(opts.step_tol);
    let mut stepper = Stepper::new(gen, rho0, &evolve_opts);
    let mut steps = 0usize;
    loop {
        let res = max_abs(&stepper.derivative);
        if res <= opts.tol {
            let rho = DensityMatrix::from_matrix(stepper.rho)?;
            return Ok(SteadyState { rho, residual: res, method: SteadyMethod::LongTime });
        }
        if stepper.t >= opts.max_time || steps >= evolve_opts.max_steps {
            return Err(Error::SolverStagnation { residual: res, target: opts.tol });
        }
        stepper.step(opts.max_time - stepper.t)?;
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;
    use crate::lindblad::quadrature_means;
    use crate::model::ScaledParams;

    fn linear_oscillator(n: usize, nbar: f64) -> LindbladGenerator {
        let h = fock::rwa_hamiltonian(n, 1.0, 0.0, 0.1).unwrap();
        LindbladGenerator::new(h, 1.0, 0.2, nbar).unwrap()
    }

    fn mean_a(rho: &DensityMatrix) -> Complex64 {
        let m = rho.matrix();
        (0..rho.dim() - 1).map(|k| m[(k + 1, k)] * ((k + 1) as f64).sqrt()).sum()
    }

    fn mean_n(rho: &DensityMatrix) -> f64 {
        (0..rho.dim()).map(|k| k as f64 * rho.matrix()[(k, k)].re).sum()
    }

    #[test]
    fn linear_oscillator_first_moment() {
        let expected = Complex64::new(0.0, -0.1) / Complex64::new(0.1, 1.0);
        assert!((expected.norm() - 0.09950).abs() < 1e-5);
        for nbar in [0.0, 0.5] {
            for method in [SteadyMethod::NullSpace, SteadyMethod::LongTime] {
                let ss = steady_state(&linear_oscillator(40, nbar), &SteadyStateOptions::new(method, 1e-12)).unwrap();
                let a = mean_a(&ss.rho);
                assert!((a - expected).norm() < 1e-8, "{method} {nbar}: {a}");
                assert!((mean_n(&ss.rho) - a.norm_sqr() - nbar).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn undriven_decay_reaches_vacuum() {
        let h = fock::rwa_hamiltonian(12, 0.5, -0.1, 0.0).unwrap();
        let gen = LindbladGenerator::new(h, 1.0, 0.3, 0.0).unwrap();
        let ss = steady_state(&gen, &SteadyStateOptions::new(SteadyMethod::NullSpace, 1e-12)).unwrap();
        assert!((ss.rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn methods_agree_on_a_small_scaled_system() {
        let params = ScaledParams::new(0.1, 0.12, 0.1, 0.2).unwrap();
        let gen = LindbladGenerator::scaled(&params, 30).unwrap();
        let a = steady_state(&gen, &SteadyStateOptions::new(SteadyMethod::NullSpace, 1e-11)).unwrap();
        let b = steady_state(&gen, &SteadyStateOptions::new(SteadyMethod::LongTime, 1e-11)).unwrap();
        assert!(a.rho.trace_distance(&b.rho).unwrap() < 1e-7);
        let (qa, pa) = quadrature_means(&a.rho, 0.1).unwrap();
        let (qb, pb) = quadrature_means(&b.rho, 0.1).unwrap();
        assert!((qa - qb).abs() < 1e-7 && (pa - pb).abs() < 1e-7);
    }

    #[test]
    fn no_dissipation_is_rejected() {
        let g = fock::quasienergy_operator(6, 0.1, 0.1).unwrap();
        let gen = LindbladGenerator::new(g, 0.1, 0.0, 0.0).unwrap();
        for method in [SteadyMethod::NullSpace, SteadyMethod::LongTime] {
            assert_eq!(steady_state(&gen, &SteadyStateOptions::new(method, 1e-8)), Err(Error::NoDissipation));
        }
    }

    #[test]
    fn unreachable_residual_stagnates() {
        let gen = linear_oscillator(10, 0.0);
        let mut opts = SteadyStateOptions::new(SteadyMethod::LongTime, 1e-30);
        opts.max_time = 1.0;
        assert!(matches!(steady_state(&gen, &opts), Err(Error::SolverStagnation { .. })));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [SteadyMethod::NullSpace, SteadyMethod::LongTime] {
            assert_eq!(m.as_str().parse::<SteadyMethod>().unwrap(), m);
        }
        assert!("eigen".parse::<SteadyMethod>().is_err());
    }
}
