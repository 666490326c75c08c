//! Metastable states of the stationary density matrix and the effective
//! damping of their classical counterparts.
//!
//! The pipeline for one parameter point is: stationary state →
//! eigendecomposition of `ρ_ss` → quadrature means of the dominant
//! eigenstates → assignment to a classical branch → fit of `η_eff`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{self, Branch, PhasePoint, ETA_CRITICAL};
use crate::error::{Error, Result};
use crate::fock;
use crate::lindblad::{steady_state, DensityMatrix, LindbladGenerator, SteadyMethod, SteadyStateOptions};
use crate::model::{thermal_occupation, ScaledParams};
use crate::spectrum::golden_section_min;

/// Candidate eigenstates must carry at least this fraction of the trace.
pub const WEIGHT_FLOOR: f64 = 0.01;
/// A branch counts as present only if a candidate lies this close to its
/// classical stable point.
pub const IDENTIFICATION_RADIUS: f64 = 0.1;
pub const ETA_SEARCH_MIN: f64 = 1e-6;
pub const ETA_SEARCH_MAX: f64 = ETA_CRITICAL - 1e-6;
const ETA_SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub weight: f64,
    pub state: DVector<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetastableState {
    pub weight: f64,
    pub q_mean: f64,
    pub p_mean: f64,
    pub amplitude: f64,
    pub branch: Branch,
    /// `None` if the branch exists for no damping at this drive.
    pub eta_eff: Option<f64>,
    pub distance_to_branch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IdentifiedStates {
    pub low: Option<MetastableState>,
    pub high: Option<MetastableState>,
}

impl IdentifiedStates {
    pub fn get(&self, branch: Branch) -> Option<&MetastableState> {
        match branch {
            Branch::Low => self.low.as_ref(),
            Branch::High => self.high.as_ref(),
            Branch::Unstable => None,
        }
    }

    pub fn count(&self) -> usize {
        self.low.is_some() as usize + self.high.is_some() as usize
    }
}

/// Eigenpairs of `ρ`, descending in weight.
pub fn diagonalize_density(rho: &DensityMatrix) -> Vec<Eigenpair> {
    let (values, vectors) = rho.eigen();
    values.into_iter().zip(vectors).rev().map(|(weight, state)| Eigenpair { weight, state }).collect()
}

/// `(⟨Q⟩, ⟨P⟩)` of a pure state.
pub fn state_quadratures(state: &DVector<Complex64>, lambda: f64) -> (f64, f64) {
    let norm = state.norm_squared();
    let a: Complex64 = (0..state.len().saturating_sub(1))
        .map(|k| state[k].conj() * state[k + 1] * ((k + 1) as f64).sqrt())
        .sum::<Complex64>()
        / norm;
    let s = (2.0 * lambda).sqrt();
    (s * a.re, s * a.im)
}

/// Assigns the dominant eigenstates of `ρ_ss` to the classical branches of
/// the damped flow at the nominal damping `eta`.
pub fn identify_states(eigenpairs: &[Eigenpair], beta: f64, lambda: f64, eta: f64) -> Result<IdentifiedStates> {
    let total: f64 = eigenpairs.iter().map(|e| e.weight).sum();
    let candidates: Vec<&Eigenpair> = eigenpairs.iter().filter(|e| e.weight > 0.0 && e.weight >= WEIGHT_FLOOR * total).collect();
    if candidates.is_empty() {
        return Err(Error::NoMetastableStates);
    }
    let classical: Vec<(Branch, PhasePoint)> = [Branch::Low, Branch::High]
        .into_iter()
        .filter_map(|b| classical::stable_point_on_branch(beta, eta, b).map(|p| (b, p)))
        .collect();
    let mut found = IdentifiedStates::default();
    for pair in candidates {
        let (q, p) = state_quadratures(&pair.state, lambda);
        let point = PhasePoint::new(q, p);
        let Some(&(branch, target)) = classical.iter().min_by(|a, b| {
            (a.1.amplitude() - point.amplitude()).abs().partial_cmp(&(b.1.amplitude() - point.amplitude()).abs()).unwrap()
        }) else {
            continue;
        };
        if point.distance(&target) > IDENTIFICATION_RADIUS {
            continue;
        }
        let slot = match branch {
            Branch::Low => &mut found.low,
            _ => &mut found.high,
        };
        if slot.is_none_or(|s| pair.weight > s.weight) {
            let (eta_eff, distance) = match effective_damping(q, p, beta, branch) {
                Ok((e, d)) => (Some(e), d),
                Err(Error::BranchVanishes { .. }) => (None, point.distance(&target)),
                Err(e) => return Err(e),
            };
            *slot = Some(MetastableState {
                weight: pair.weight / total,
                q_mean: q,
                p_mean: p,
                amplitude: point.amplitude(),
                branch,
                eta_eff,
                distance_to_branch: distance,
            });
        }
    }
    Ok(found)
}

fn branch_distance(q: f64, p: f64, beta: f64, eta: f64, branch: Branch) -> f64 {
    classical::stable_point_on_branch(beta, eta, branch).map_or(f64::INFINITY, |fp| fp.distance(&PhasePoint::new(q, p)))
}

/// Damping whose classical stable point on `branch` lies closest to
/// `(q, p)`, with the residual Euclidean distance.
pub fn effective_damping(q: f64, p: f64, beta: f64, branch: Branch) -> Result<(f64, f64)> {
    if branch == Branch::Unstable {
        return Err(Error::InvalidParameter("the unstable branch has no effective damping".into()));
    }
    let grid: Vec<f64> = (0..ETA_SCAN_POINTS)
        .map(|i| ETA_SEARCH_MIN + (ETA_SEARCH_MAX - ETA_SEARCH_MIN) * i as f64 / (ETA_SCAN_POINTS - 1) as f64)
        .collect();
    let dist: Vec<f64> = grid.iter().map(|&eta| branch_distance(q, p, beta, eta, branch)).collect();
    let (best, best_d) = dist.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &d)| if d < a.1 { (i, d) } else { a });
    if !best_d.is_finite() {
        return Err(Error::BranchVanishes { branch: branch.as_str(), beta });
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let objective = |eta: f64| branch_distance(q, p, beta, eta, branch);
    let eta = golden_section_min(objective, lo, hi, 1e-12);
    let d = objective(eta);
    // keep the grid point if the bracket's interior is worse (edge of existence)
    if d <= best_d {
        Ok((eta, d))
    } else {
        Ok((grid[best], best_d))
    }
}

/// Everything computed for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub params: ScaledParams,
    pub dim: usize,
    pub residual: f64,
    pub method: SteadyMethod,
    pub rho: DensityMatrix,
    pub eigenpairs: Vec<Eigenpair>,
    pub states: IdentifiedStates,
}

/// Stationary state, its eigendecomposition and the identified states.
pub fn analyze(params: &ScaledParams, n: usize, opts: &SteadyStateOptions) -> Result<PipelineResult> {
    let gen = LindbladGenerator::scaled(params, n)?;
    let ss = steady_state(&gen, opts)?;
    let eigenpairs = diagonalize_density(&ss.rho);
    let states = identify_states(&eigenpairs, params.beta, params.lambda, params.eta)?;
    Ok(PipelineResult {
        params: *params,
        dim: n,
        residual: ss.residual,
        method: ss.method,
        rho: ss.rho,
        eigenpairs,
        states,
    })
}

/// `|⟨u_i|v_j⟩|` for two families of states.
pub fn overlap_matrix(u: &[DVector<Complex64>], v: &[DVector<Complex64>]) -> DMatrix<f64> {
    DMatrix::from_fn(u.len(), v.len(), |i, j| u[i].dotc(&v[j]).norm())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    /// The quantum pipeline found no state on this branch.
    Absent,
    Error(String),
}

impl RowStatus {
    pub fn label(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::Absent => "absent".into(),
            RowStatus::Error(msg) => format!("error: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaEffRow {
    pub eta: f64,
    pub t: f64,
    pub branch: Branch,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub eta_eff: Option<f64>,
    pub delta_eta: Option<f64>,
    pub weight: Option<f64>,
    pub distance: Option<f64>,
    pub status: RowStatus,
    pub dim: usize,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSettings {
    pub lambda: f64,
    pub beta: f64,
    pub n: usize,
    pub steady: SteadyStateOptions,
}

/// Runs the full pipeline on every `(η, T)` cell. Rows come out `η` outer,
/// `T` inner, low branch before high; cell failures become status entries.
pub fn eta_eff_table(settings: &TableSettings, eta_list: &[f64], t_list: &[f64]) -> Vec<EtaEffRow> {
    let cells: Vec<(f64, f64)> = eta_list.iter().flat_map(|&e| t_list.iter().map(move |&t| (e, t))).collect();
    let results: Vec<Vec<EtaEffRow>> = cells.par_iter().map(|&(eta, t)| table_cell(settings, eta, t)).collect();
    results.into_iter().flatten().collect()
}

fn table_cell(settings: &TableSettings, eta: f64, t: f64) -> Vec<EtaEffRow> {
    let blank = |branch: Branch, status: RowStatus, residual: Option<f64>| EtaEffRow {
        eta,
        t,
        branch,
        q: None,
        p: None,
        eta_eff: None,
        delta_eta: None,
        weight: None,
        distance: None,
        status,
        dim: settings.n,
        residual,
    };
    let outcome = ScaledParams::new(settings.lambda, settings.beta, eta, thermal_occupation(t))
        .and_then(|params| analyze(&params, settings.n, &settings.steady));
    match outcome {
        Err(e) => [Branch::Low, Branch::High].into_iter().map(|b| blank(b, RowStatus::Error(e.to_string()), None)).collect(),
        Ok(res) => [Branch::Low, Branch::High]
            .into_iter()
            .map(|b| match res.states.get(b) {
                None => blank(b, RowStatus::Absent, Some(res.residual)),
                Some(s) => EtaEffRow {
                    eta,
                    t,
                    branch: b,
                    q: Some(s.q_mean),
                    p: Some(s.p_mean),
                    eta_eff: s.eta_eff,
                    delta_eta: s.eta_eff.map(|e| e - eta),
                    weight: Some(s.weight),
                    distance: Some(s.distance_to_branch),
                    status: RowStatus::Ok,
                    dim: settings.n,
                    residual: Some(res.residual),
                },
            })
            .collect(),
    }
}

/// Truncation used for the stationary-state pipeline at scale `λ`.
pub fn pipeline_truncation(lambda: f64) -> usize {
    fock::default_truncation(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{bifurcation_window, damped_fixed_points, Stability};

    fn coherent(n: usize, alpha: Complex64) -> DVector<Complex64> {
        let mut v = DVector::zeros(n);
        let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for k in 0..n {
            v[k] = c;
            c *= alpha / ((k + 1) as f64).sqrt();
        }
        v
    }

    #[test]
    fn pure_and_thermal_spectra() {
        let v = coherent(30, Complex64::new(1.0, 0.5));
        let pairs = diagonalize_density(&DensityMatrix::pure(&v).unwrap());
        assert!((pairs[0].weight - 1.0).abs() < 1e-12);
        assert!(pairs[1..].iter().all(|p| p.weight.abs() < 1e-12));

        let thermal = DensityMatrix::thermal(12, 0.8).unwrap();
        let pairs = diagonalize_density(&thermal);
        for (k, pair) in pairs.iter().enumerate() {
            assert!((pair.weight - thermal.matrix()[(k, k)].re).abs() < 1e-14);
            assert!((pair.state[k].norm() - 1.0).abs() < 1e-12);
        }
        assert!((pairs.iter().map(|p| p.weight).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_fixed_point_recovers_damping() {
        let (beta, eta) = (0.12, 0.05);
        for branch in [Branch::Low, Branch::High] {
            let p = classical::stable_point_on_branch(beta, eta, branch).unwrap();
            let (eff, d) = effective_damping(p.q, p.p, beta, branch).unwrap();
            assert!((eff - eta).abs() < 1e-6, "{branch}: {eff}");
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn off_curve_perturbation() {
        let (beta, eta, h) = (0.12, 0.05, 1e-3);
        let branch = Branch::High;
        let p0 = classical::stable_point_on_branch(beta, eta, branch).unwrap();
        let p1 = classical::stable_point_on_branch(beta, eta + 1e-6, branch).unwrap();
        let (tq, tp) = (p1.q - p0.q, p1.p - p0.p);
        let norm = (tq * tq + tp * tp).sqrt();
        let (nq, np) = (-tp / norm, tq / norm);
        let (eff, d) = effective_damping(p0.q + h * nq, p0.p + h * np, beta, branch).unwrap();
        assert!((eff - eta).abs() < 1e-2);
        assert!((d - h).abs() < 1e-4, "{d}");
    }

    #[test]
    fn inverse_consistency_in_the_window() {
        let mut s = 0x2545_F491_4F6C_DD1Du64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 20 {
            let eta = 0.01 + 0.4 * next();
            let w = bifurcation_window(eta).unwrap();
            let beta = w.beta1 + (0.1 + 0.8 * next()) * w.width();
            for branch in [Branch::Low, Branch::High] {
                let p = classical::stable_point_on_branch(beta, eta, branch).unwrap();
                let (eff, _) = effective_damping(p.q, p.p, beta, branch).unwrap();
                assert!((eff - eta).abs() < 1e-5, "β={beta} η={eta} {branch}: {eff}");
            }
            checked += 1;
        }
    }

    #[test]
    fn vanishing_branch_is_reported() {
        // above 2·4/27 … no bistability for any damping: only one branch survives
        let beta = 0.35;
        let fps = damped_fixed_points(beta, 0.01).unwrap();
        assert_eq!(fps.iter().filter(|f| f.stability == Stability::Stable).count(), 1);
        let missing = if fps[0].branch == Branch::Low { Branch::High } else { Branch::Low };
        assert!(matches!(effective_damping(0.0, 0.0, beta, missing), Err(Error::BranchVanishes { .. })));
    }

    #[test]
    fn identification_of_coherent_mixture() {
        let (lambda, beta, eta): (f64, f64, f64) = (0.01, 0.12, 0.05);
        let n = 120;
        let low = classical::stable_point_on_branch(beta, eta, Branch::Low).unwrap();
        let high = classical::stable_point_on_branch(beta, eta, Branch::High).unwrap();
        let to_alpha = |p: PhasePoint| Complex64::new(p.q, p.p) / (2.0 * lambda).sqrt();
        let pairs = vec![
            Eigenpair { weight: 0.6, state: coherent(n, to_alpha(high)) },
            Eigenpair { weight: 0.35, state: coherent(n, to_alpha(low)) },
            Eigenpair { weight: 0.05, state: coherent(n, Complex64::new(0.0, 3.0)) },
        ];
        let found = identify_states(&pairs, beta, lambda, eta).unwrap();
        assert_eq!(found.count(), 2);
        let l = found.low.unwrap();
        assert!((l.weight - 0.35).abs() < 1e-12);
        assert!((l.eta_eff.unwrap() - eta).abs() < 1e-5);
        assert!(found.high.unwrap().distance_to_branch < 1e-6);

        let zero = vec![Eigenpair { weight: 0.0, state: coherent(n, Complex64::new(0.0, 0.0)) }];
        assert_eq!(identify_states(&zero, beta, lambda, eta), Err(Error::NoMetastableStates));
    }

    #[test]
    fn monostable_identification_finds_one_branch() {
        let (lambda, beta, eta): (f64, f64, f64) = (0.02, 0.2, 0.05);
        let fps = damped_fixed_points(beta, eta).unwrap();
        assert_eq!(fps.len(), 1);
        let p = fps[0].point;
        let state = coherent(100, Complex64::new(p.q, p.p) / (2.0 * lambda).sqrt());
        let found = identify_states(&[Eigenpair { weight: 1.0, state }], beta, lambda, eta).unwrap();
        assert_eq!(found.count(), 1);
        assert!(found.get(fps[0].branch).is_some());
    }

    #[test]
    fn table_reports_absent_and_error_rows() {
        let settings = TableSettings {
            lambda: 0.1,
            beta: 0.2,
            n: 30,
            steady: SteadyStateOptions::new(SteadyMethod::NullSpace, 1e-10),
        };
        let rows = eta_eff_table(&settings, &[0.1, -1.0], &[0.0]);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.iter().filter(|r| r.status == RowStatus::Absent).count(), 1);
        assert!(matches!(rows[2].status, RowStatus::Error(_)));
        assert_eq!((rows[0].branch, rows[1].branch), (Branch::Low, Branch::High));
    }
}
