//! The classical quasienergy landscape `g(Q, P) = (Q² + P² − 1)²/4 + √β Q`
//! and the damped flow
//!
//! ```text
//! Q̇ =  ∂g/∂P − ηQ
//! Ṗ = −∂g/∂Q − ηP
//! ```
//!
//! Fixed points of the flow satisfy `r²((r² − 1)² + η²) = β`, a cubic in
//! `x = r²` whose real roots are all positive. Each root maps back to a
//! unique phase point, so the root count of that cubic is the fixed-point
//! count.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the undamped bistable window.
pub const BETA_MAX_UNDAMPED: f64 = 4.0 / 27.0;

/// Damping above which the bistable window closes.
pub const ETA_CRITICAL: f64 = 0.577_350_269_189_625_8; // 1/√3

const ESCAPE_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn amplitude(&self) -> f64 {
        self.q.hypot(self.p)
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.q - other.q).hypot(self.p - other.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// Both Jacobian eigenvalues have negative real part.
    Stable,
    /// Purely imaginary eigenvalues (centres of the undamped flow).
    Neutral,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Low,
    Unstable,
    High,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Low => "low",
            Branch::Unstable => "unstable",
            Branch::High => "high",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hessian class of a stationary point of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
    Saddle,
    /// Zero Hessian determinant (the merging point at `β = 4/27`).
    Degenerate,
}

impl ExtremumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExtremumKind::Maximum => "max",
            ExtremumKind::Minimum => "min",
            ExtremumKind::Saddle => "saddle",
            ExtremumKind::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub point: PhasePoint,
    pub stability: Stability,
    pub amplitude: f64,
    pub branch: Branch,
    pub jacobian_eigenvalues: [Complex64; 2],
    /// Hessian class of `g`; only set for the undamped flow.
    pub extremum: Option<ExtremumKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationWindow {
    pub beta1: f64,
    pub beta2: f64,
}

impl BifurcationWindow {
    pub fn contains(&self, beta: f64) -> bool {
        beta > self.beta1 && beta < self.beta2
    }

    pub fn width(&self) -> f64 {
        self.beta2 - self.beta1
    }
}

pub fn quasienergy(p: PhasePoint, beta: f64) -> f64 {
    let u = p.q * p.q + p.p * p.p - 1.0;
    0.25 * u * u + beta.sqrt() * p.q
}

/// `(∂g/∂Q, ∂g/∂P)`.
pub fn gradient(p: PhasePoint, beta: f64) -> (f64, f64) {
    let u = p.q * p.q + p.p * p.p - 1.0;
    (p.q * u + beta.sqrt(), p.p * u)
}

/// Right-hand side `(Q̇, Ṗ)` of the damped flow.
pub fn flow(p: PhasePoint, beta: f64, eta: f64) -> (f64, f64) {
    let (gq, gp) = gradient(p, beta);
    (gp - eta * p.q, -gq - eta * p.p)
}

/// Jacobian of [`flow`], row-major.
pub fn flow_jacobian(p: PhasePoint, eta: f64) -> [[f64; 2]; 2] {
    let (q, pp) = (p.q, p.p);
    let u = q * q + pp * pp - 1.0;
    [[2.0 * q * pp - eta, u + 2.0 * pp * pp], [-(u + 2.0 * q * q), -2.0 * q * pp - eta]]
}

fn eigenvalues_2x2(j: [[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(0.25 * tr * tr - det, 0.0).sqrt();
    let half = Complex64::new(0.5 * tr, 0.0);
    [half + disc, half - disc]
}

fn classify_flow(eigs: &[Complex64; 2]) -> Stability {
    let scale = eigs[0].norm().max(eigs[1].norm()).max(1e-300);
    let tol = 1e-12 * scale;
    if eigs.iter().all(|e| e.re < -tol) {
        Stability::Stable
    } else if eigs.iter().all(|e| e.re.abs() <= tol) {
        Stability::Neutral
    } else {
        Stability::Unstable
    }
}

/// Hessian classification at a stationary point with `P = 0`, whose Hessian
/// is `diag(3Q² − 1, Q² − 1)`.
fn hessian_kind(q: f64) -> ExtremumKind {
    let (hq, hp) = (3.0 * q * q - 1.0, q * q - 1.0);
    let det = hq * hp;
    if det.abs() < 1e-12 {
        ExtremumKind::Degenerate
    } else if det < 0.0 {
        ExtremumKind::Saddle
    } else if hq < 0.0 {
        ExtremumKind::Maximum
    } else {
        ExtremumKind::Minimum
    }
}

/// Real roots of the monic cubic `x³ + b x² + c x + d`, ascending and
/// distinct. Roots closer than the discriminant can resolve are reported
/// once.
pub fn real_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    // discriminant of t³ + pt + q, in units where it is dimensionally O(1)
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let scale = (4.0 * p.abs().powi(3)).max(27.0 * q * q).max(f64::MIN_POSITIVE);
    let mut roots = if disc.abs() <= 1e-13 * scale {
        if p == 0.0 {
            vec![shift]
        } else {
            // double root −3q/(2p), simple root 3q/p
            vec![3.0 * q / p + shift, -1.5 * q / p + shift]
        }
    } else if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() + shift).collect()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    };
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*x + b) * *x + c) * *x + d;
            let df = (3.0 * *x + 2.0 * b) * *x + c;
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            if !step.is_finite() || step.abs() > 1e-3 * (1.0 + x.abs()) {
                break;
            }
            *x -= step;
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Discriminant of `x³ + b x² + c x + d`; positive iff three distinct real roots.
pub fn cubic_discriminant(b: f64, c: f64, d: f64) -> f64 {
    18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c - 4.0 * c * c * c - 27.0 * d * d
}

/// Stationary points of the undamped flow together with a warning when `β`
/// is outside the open window `(0, 4/27)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrema {
    pub points: Vec<FixedPoint>,
    pub warning: Option<Error>,
}

impl Extrema {
    pub fn find(&self, kind: ExtremumKind) -> Option<&FixedPoint> {
        self.points.iter().find(|fp| fp.extremum == Some(kind))
    }
}

/// Stationary points of `g`: all lie on `P = 0` with `Q(Q² − 1) = −√β`.
pub fn extrema(beta: f64) -> Result<Extrema> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 0")));
    }
    let roots = real_cubic_roots(0.0, -1.0, beta.sqrt());
    let mut points: Vec<FixedPoint> = roots
        .into_iter()
        .map(|q| {
            let point = PhasePoint::new(q, 0.0);
            let eigs = eigenvalues_2x2(flow_jacobian(point, 0.0));
            FixedPoint {
                point,
                stability: classify_flow(&eigs),
                amplitude: q.abs(),
                branch: Branch::Low,
                jacobian_eigenvalues: eigs,
                extremum: Some(hessian_kind(q)),
            }
        })
        .collect();
    label_branches(&mut points, beta, 0.0);
    let warning = if beta > 0.0 && beta < BETA_MAX_UNDAMPED {
        None
    } else {
        Some(Error::OutsideBistableWindow { beta })
    };
    Ok(Extrema { points, warning })
}

/// Assigns amplitude-ordered branch labels.
fn label_branches(points: &mut [FixedPoint], beta: f64, eta: f64) {
    points.sort_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap());
    match points.len() {
        3 => {
            points[0].branch = Branch::Low;
            points[1].branch = Branch::Unstable;
            points[2].branch = Branch::High;
        }
        1 => points[0].branch = single_branch_label(beta, eta, points[0].amplitude),
        _ => {
            // saddle-node point: the degenerate one is the merging pair
            for fp in points.iter_mut() {
                fp.branch = match fp.stability {
                    Stability::Unstable => Branch::Unstable,
                    _ if fp.extremum == Some(ExtremumKind::Degenerate) => Branch::Unstable,
                    _ => single_branch_label(beta, eta, fp.amplitude),
                };
            }
        }
    }
}

/// Label of the lone fixed point outside the bistable window: below the
/// window it continues the low-amplitude branch, above it the high one.
fn single_branch_label(beta: f64, eta: f64, amplitude: f64) -> Branch {
    match bifurcation_window(eta) {
        Ok(w) if beta <= w.beta1 => Branch::Low,
        Ok(_) => Branch::High,
        // past the cusp the response is single-valued; split at the cusp amplitude r² = 2/3
        Err(_) => {
            if amplitude * amplitude > 2.0 / 3.0 {
                Branch::High
            } else {
                Branch::Low
            }
        }
    }
}

/// All fixed points of the damped flow, amplitude-ordered and classified.
pub fn damped_fixed_points(beta: f64, eta: f64) -> Result<Vec<FixedPoint>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be > 0")));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("eta = {eta} must be >= 0")));
    }
    let sqrt_beta = beta.sqrt();
    // x((x−1)² + η²) = β  →  x³ − 2x² + (1+η²)x − β = 0
    let roots = real_cubic_roots(-2.0, 1.0 + eta * eta, -beta);
    let mut points: Vec<FixedPoint> = roots
        .into_iter()
        .filter(|x| *x > 0.0)
        .map(|x| {
            let u = x - 1.0;
            let den = u * u + eta * eta;
            let guess = PhasePoint::new(-u * sqrt_beta / den, -eta * sqrt_beta / den);
            let point = newton_refine(guess, beta, eta);
            let eigs = eigenvalues_2x2(flow_jacobian(point, eta));
            FixedPoint {
                point,
                stability: classify_flow(&eigs),
                amplitude: point.amplitude(),
                branch: Branch::Low,
                jacobian_eigenvalues: eigs,
                extremum: (eta == 0.0).then(|| hessian_kind(point.q)),
            }
        })
        .collect();
    label_branches(&mut points, beta, eta);
    Ok(points)
}

fn newton_refine(mut p: PhasePoint, beta: f64, eta: f64) -> PhasePoint {
    let residual = |p: PhasePoint| {
        let (a, b) = flow(p, beta, eta);
        a.abs().max(b.abs())
    };
    for _ in 0..4 {
        let (f1, f2) = flow(p, beta, eta);
        let j = flow_jacobian(p, eta);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            break;
        }
        let dq = (j[1][1] * f1 - j[0][1] * f2) / det;
        let dp = (-j[1][0] * f1 + j[0][0] * f2) / det;
        let next = PhasePoint::new(p.q - dq, p.p - dp);
        if residual(next) >= residual(p) {
            break;
        }
        p = next;
    }
    p
}

/// The stable fixed point on `branch` at `(β, η)`, if the branch exists there.
pub fn stable_point_on_branch(beta: f64, eta: f64, branch: Branch) -> Option<PhasePoint> {
    damped_fixed_points(beta, eta)
        .ok()?
        .into_iter()
        .find(|fp| fp.branch == branch && fp.stability == Stability::Stable)
        .map(|fp| fp.point)
}

/// `β⁽¹,²⁾ = 2(1 + 9η² ∓ (1 − 3η²)^{3/2}) / 27`.
pub fn bifurcation_window(eta: f64) -> Result<BifurcationWindow> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("eta = {eta} must be >= 0")));
    }
    let mut s = 1.0 - 3.0 * eta * eta;
    if s < 0.0 {
        if s > -1e-12 {
            s = 0.0;
        } else {
            return Err(Error::OverdampedRegime { eta });
        }
    }
    let root = s.powf(1.5);
    let base = 1.0 + 9.0 * eta * eta;
    Ok(BifurcationWindow { beta1: 2.0 * (base - root) / 27.0, beta2: 2.0 * (base + root) / 27.0 })
}

/// Fixed-step classical RK4 integration of the damped flow. Returns the
/// `n_steps + 1` visited points including the start.
pub fn integrate_flow(start: PhasePoint, beta: f64, eta: f64, dt: f64, n_steps: usize) -> Result<Vec<PhasePoint>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
    }
    let rhs = |p: PhasePoint| flow(p, beta, eta);
    let mut traj = Vec::with_capacity(n_steps + 1);
    let mut cur = start;
    traj.push(cur);
    for step in 1..=n_steps {
        let k1 = rhs(cur);
        let k2 = rhs(PhasePoint::new(cur.q + 0.5 * dt * k1.0, cur.p + 0.5 * dt * k1.1));
        let k3 = rhs(PhasePoint::new(cur.q + 0.5 * dt * k2.0, cur.p + 0.5 * dt * k2.1));
        let k4 = rhs(PhasePoint::new(cur.q + dt * k3.0, cur.p + dt * k3.1));
        cur = PhasePoint::new(
            cur.q + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            cur.p + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        if !(cur.amplitude() <= ESCAPE_RADIUS) {
            return Err(Error::TrajectoryEscaped { step });
        }
        traj.push(cur);
    }
    Ok(traj)
}

/// One row of the branch table; `fixed_point` is `None` where the branch
/// does not exist at this damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub eta: f64,
    pub branch: Branch,
    pub fixed_point: Option<FixedPoint>,
}

/// Fixed points for every damping of the grid, three rows per `η`
/// (low, unstable, high).
pub fn branch_curves(beta: f64, eta_grid: &[f64]) -> Result<Vec<BranchRow>> {
    let mut rows = Vec::with_capacity(3 * eta_grid.len());
    for &eta in eta_grid {
        let fps = damped_fixed_points(beta, eta)?;
        for branch in [Branch::Low, Branch::Unstable, Branch::High] {
            rows.push(BranchRow { eta, branch, fixed_point: fps.iter().find(|f| f.branch == branch).copied() });
        }
    }
    Ok(rows)
}
