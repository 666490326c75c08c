//! Physical parameters and the maps from the lab frame to the scaled
//! rotating frame.
//!
//! The lab-frame oscillator is `p²/2m + mΩ²x²/2 − γx⁴ + 2F₀cos(νt)·x`. After
//! the rotating-wave approximation it becomes
//! `Δ a†a + χ a†a(a†a + 1) + f(a† + a)`, and after rescaling everything is
//! controlled by the effective Planck constant `λ = −χ/Δ` and the drive
//! parameter `β = −2f²χ/Δ³`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the lab-frame driven Duffing oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabFrameParams {
    pub m: f64,
    pub omega: f64,
    /// Quartic coefficient; `γ > 0` is a softening nonlinearity.
    pub gamma: f64,
    /// Drive amplitude, `F(t) = 2F₀ cos(νt)`.
    pub f0: f64,
    pub nu: f64,
    pub hbar: f64,
}

impl LabFrameParams {
    pub fn new(m: f64, omega: f64, gamma: f64, f0: f64, nu: f64) -> Result<Self> {
        Self::with_hbar(m, omega, gamma, f0, nu, 1.0)
    }

    pub fn with_hbar(m: f64, omega: f64, gamma: f64, f0: f64, nu: f64, hbar: f64) -> Result<Self> {
        let p = Self { m, omega, gamma, f0, nu, hbar };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m, self.omega, self.gamma, self.f0, self.nu, self.hbar];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("lab-frame parameters must be finite".into()));
        }
        if self.m <= 0.0 {
            return Err(Error::InvalidParameter(format!("m = {} must be > 0", self.m)));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!("Omega = {} must be > 0", self.omega)));
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter(format!("nu = {} must be > 0", self.nu)));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParameter(format!("hbar = {} must be > 0", self.hbar)));
        }
        Ok(())
    }
}

/// Coefficients of the rotating-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRwaParams {
    /// Detuning `Ω − ν`.
    pub delta: f64,
    pub chi: f64,
    pub f: f64,
}

/// The dimensionless control set `(λ, β, η, n̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub lambda: f64,
    pub beta: f64,
    pub eta: f64,
    pub nbar: f64,
}

impl ScaledParams {
    pub fn new(lambda: f64, beta: f64, eta: f64, nbar: f64) -> Result<Self> {
        let p = Self { lambda, beta, eta, nbar };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.lambda, self.beta, self.eta, self.nbar].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("scaled parameters must be finite".into()));
        }
        if self.lambda <= 0.0 || self.beta <= 0.0 {
            return Err(Error::WrongSignRegime { lambda: self.lambda, beta: self.beta });
        }
        if self.eta < 0.0 {
            return Err(Error::InvalidParameter(format!("eta = {} must be >= 0", self.eta)));
        }
        if self.nbar < 0.0 {
            return Err(Error::InvalidParameter(format!("nbar = {} must be >= 0", self.nbar)));
        }
        Ok(())
    }

    /// Same system at a different bath occupation.
    pub fn with_nbar(self, nbar: f64) -> Self {
        Self { nbar, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }
}

pub fn derive_rwa(lab: &LabFrameParams) -> DerivedRwaParams {
    let LabFrameParams { m, omega, gamma, f0, nu, hbar } = *lab;
    DerivedRwaParams {
        delta: omega - nu,
        chi: -3.0 * gamma * hbar / (2.0 * m * m * omega.powi(3)),
        f: f0 / (hbar * omega) * (hbar / (2.0 * m * omega)).sqrt(),
    }
}

pub fn scale(rwa: &DerivedRwaParams, eta: f64, nbar: f64) -> Result<ScaledParams> {
    let DerivedRwaParams { delta, chi, f } = *rwa;
    if delta == 0.0 || chi == 0.0 {
        return Err(Error::DegenerateScaling);
    }
    let lambda = -chi / delta;
    let beta = -2.0 * f * f * chi / delta.powi(3);
    if lambda <= 0.0 || beta <= 0.0 {
        return Err(Error::WrongSignRegime { lambda, beta });
    }
    ScaledParams::new(lambda, beta, eta, nbar)
}

/// Bose-Einstein occupation at temperature `T` measured in units of `ħΩ`.
pub fn thermal_occupation(t_over_omega: f64) -> f64 {
    if t_over_omega <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 / t_over_omega).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn working_point_lab() -> LabFrameParams {
        LabFrameParams::new(1.0, 1.0, 4.5e-5, 5.27e-3, 0.9975).unwrap()
    }

    #[test]
    fn rwa_coefficients_of_working_point() {
        let rwa = derive_rwa(&working_point_lab());
        assert_relative_eq!(rwa.delta, 2.5e-3, max_relative = 1e-9);
        assert_relative_eq!(rwa.chi, -6.75e-5, max_relative = 1e-12);
        assert_relative_eq!(rwa.f, 5.27e-3 * 0.5f64.sqrt(), max_relative = 1e-12);
        assert!((rwa.f - 3.727e-3).abs() < 1e-6);
    }

    #[test]
    fn zero_nonlinearity_and_resonance() {
        let lab = LabFrameParams::new(1.0, 1.0, 0.0, 1e-3, 0.9).unwrap();
        assert_eq!(derive_rwa(&lab).chi, 0.0);
        let lab = LabFrameParams::new(1.0, 1.3, 1e-4, 1e-3, 1.3).unwrap();
        assert_eq!(derive_rwa(&lab).delta, 0.0);
    }

    #[test]
    fn scaling_reaches_the_working_point() {
        let s = scale(&derive_rwa(&working_point_lab()), 0.03, 0.0).unwrap();
        assert_relative_eq!(s.lambda, 0.027, max_relative = 1e-9);
        assert!((s.beta - 0.12).abs() < 1e-3);
        // plug back: beta = 2 f² λ / Δ²
        let rwa = derive_rwa(&working_point_lab());
        assert_relative_eq!(s.beta, 2.0 * rwa.f.powi(2) * s.lambda / rwa.delta.powi(2), max_relative = 1e-12);
    }

    #[test]
    fn scaling_errors() {
        let zero_drive = DerivedRwaParams { delta: 1.0, chi: -1.0, f: 0.0 };
        assert!(matches!(scale(&zero_drive, 0.0, 0.0), Err(Error::WrongSignRegime { .. })));
        let resonant = DerivedRwaParams { delta: 0.0, chi: -1.0, f: 0.1 };
        assert_eq!(scale(&resonant, 0.0, 0.0), Err(Error::DegenerateScaling));
        let linear = DerivedRwaParams { delta: 1.0, chi: 0.0, f: 0.1 };
        assert_eq!(scale(&linear, 0.0, 0.0), Err(Error::DegenerateScaling));
    }

    #[test]
    fn drive_rescaling_scales_beta_quadratically() {
        let rwa = DerivedRwaParams { delta: 2.5e-3, chi: -6.75e-5, f: 3.7e-3 };
        let base = scale(&rwa, 0.0, 0.0).unwrap();
        for s in [0.5, 2.0, 3.0] {
            let scaled = scale(&DerivedRwaParams { f: rwa.f * s, ..rwa }, 0.0, 0.0).unwrap();
            assert_relative_eq!(scaled.beta, base.beta * s * s, max_relative = 1e-14);
            assert_eq!(scaled.lambda, base.lambda);
        }
    }

    #[test]
    fn bose_einstein_values() {
        assert_eq!(thermal_occupation(0.0), 0.0);
        assert!((thermal_occupation(2.0) - 1.0 / (0.5f64.exp() - 1.0)).abs() < 1e-14);
        assert!((thermal_occupation(2.0) - 1.5415).abs() < 1e-4);
        assert!((thermal_occupation(0.5) - 0.1565).abs() < 1e-4);
        assert!((thermal_occupation(100.0) - 99.5).abs() < 0.01);
    }

    #[test]
    fn bose_einstein_is_monotone() {
        let mut prev = 0.0;
        for k in 1..2000 {
            let n = thermal_occupation(k as f64 * 0.01);
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn invalid_lab_params_rejected() {
        assert!(LabFrameParams::new(0.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(LabFrameParams::new(1.0, -1.0, 0.0, 0.0, 1.0).is_err());
        assert!(LabFrameParams::new(1.0, 1.0, -1e-3, 0.0, 1.0).is_err());
        assert!(ScaledParams::new(0.027, 0.0, 0.03, 0.0).is_err());
        assert!(ScaledParams::new(-0.027, 0.1, 0.03, 0.0).is_err());
        assert!(ScaledParams::new(0.027, 0.1, -0.03, 0.0).is_err());
    }
}
