//! Adaptive Dormand–Prince 5(4) integration of the master equation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{hermitize_and_normalize, DensityMatrix, LindbladGenerator};
use crate::error::{Error, Result};

pub const MIN_STEP: f64 = 1e-12;
/// Steps are capped at this multiple of `1/ρ(L)`, well inside the
/// Dormand–Prince stability region, so stiff modes keep decaying once the
/// error controller would otherwise park them on the stability boundary.
const STABLE_STEP_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Mixed absolute/relative local error tolerance per step.
    pub tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl EvolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, initial_step: 1e-3, max_steps: 50_000_000 }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrator state shared by [`evolve`] and the long-time stationary solver.
pub(crate) struct Stepper<'a> {
    gen: &'a LindbladGenerator,
    pub rho: DMatrix<Complex64>,
    pub t: f64,
    pub dt: f64,
    tol: f64,
    max_dt: f64,
    k: Vec<DMatrix<Complex64>>,
    stage: DMatrix<Complex64>,
    /// `L(ρ)` at the current state, reused as the first stage.
    pub derivative: DMatrix<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(gen: &'a LindbladGenerator, rho0: DMatrix<Complex64>, opts: &EvolveOptions) -> Self {
        let n = gen.dim();
        let mut derivative = DMatrix::zeros(n, n);
        gen.apply_into(&rho0, &mut derivative);
        Self {
            gen,
            rho: rho0,
            t: 0.0,
            dt: opts.initial_step.min(STABLE_STEP_FACTOR / gen.spectral_bound().max(f64::MIN_POSITIVE)),
            tol: opts.tol,
            max_dt: STABLE_STEP_FACTOR / gen.spectral_bound().max(f64::MIN_POSITIVE),
            k: (0..7).map(|_| DMatrix::zeros(n, n)).collect(),
            stage: DMatrix::zeros(n, n),
            derivative,
        }
    }

    /// Advances by one accepted step no longer than `max_dt`.
    pub fn step(&mut self, max_dt: f64) -> Result<()> {
        loop {
            let dt = self.dt.min(max_dt).min(self.max_dt);
            if dt < MIN_STEP {
                return Err(Error::StepUnderflow { t: self.t, dt });
            }
            self.k[0].copy_from(&self.derivative);
            for s in 1..7 {
                self.stage.copy_from(&self.rho);
                for (j, a) in A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        let w = dt * a;
                        for (dst, src) in self.stage.as_mut_slice().iter_mut().zip(self.k[j].as_slice()) {
                            *dst += src * w;
                        }
                    }
                }
                let (_, rest) = self.k.split_at_mut(s);
                self.gen.apply_into(&self.stage, &mut rest[0]);
            }
            // stage now holds the fifth-order solution, k[6] = L(stage)
            let mut err: f64 = 0.0;
            let (rs, ss) = (self.rho.as_slice(), self.stage.as_slice());
            for idx in 0..rs.len() {
                let mut e = Complex64::new(0.0, 0.0);
                for (s, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += self.k[s].as_slice()[idx] * *w;
                    }
                }
                let scale = self.tol * (1.0 + rs[idx].norm().max(ss[idx].norm()));
                err = err.max((e * dt).norm() / scale);
            }
            if err <= 1.0 {
                self.t += dt;
                std::mem::swap(&mut self.rho, &mut self.stage);
                hermitize_and_normalize(&mut self.rho);
                self.gen.apply_into(&self.rho, &mut self.derivative);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if dt == self.dt {
                    self.dt = (self.dt * factor).min(self.max_dt);
                }
                return Ok(());
            }
            self.dt = dt * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
}

/// Integrates `ρ̇ = L(ρ)` from `rho0` to `t_end`, Hermitizing and
/// renormalizing the trace after every accepted step.
pub fn evolve(gen: &LindbladGenerator, rho0: &DensityMatrix, t_end: f64, opts: &EvolveOptions) -> Result<DensityMatrix> {
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), got: rho0.dim() });
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end} must be >= 0")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {} must be > 0", opts.tol)));
    }
    let mut stepper = Stepper::new(gen, rho0.matrix().clone(), opts);
    let mut steps = 0usize;
    while stepper.t < t_end {
        let remaining = t_end - stepper.t;
        if remaining <= 1e-14 * t_end.max(1.0) {
            break;
        }
        stepper.step(remaining)?;
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { t: stepper.t, dt: stepper.dt });
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(stepper.rho))
}
