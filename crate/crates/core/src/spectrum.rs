//! Quasienergy levels `g|n⟩ = g_n|n⟩`, their position-space densities, the
//! assignment of levels to the wells of the classical landscape, and scans
//! for anticrossings between the small-amplitude well and the outer torus.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{self, ExtremumKind, PhasePoint, BETA_MAX_UNDAMPED};
use crate::error::{Error, Result};
use crate::fock::{self, FockOperator, HERMITIAN_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub g: f64,
    /// Eigenvector in the Fock basis, phase-fixed so that its largest
    /// component is real and positive.
    pub state: DVector<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasienergySpectrum {
    pub dim: usize,
    /// Ascending in `g`.
    pub levels: Vec<Level>,
}

impl QuasienergySpectrum {
    /// Builds and diagonalizes `g` for the given scale and drive.
    pub fn compute(n: usize, lambda: f64, beta: f64) -> Result<Self> {
        diagonalize(&fock::quasienergy_operator(n, lambda, beta)?)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.g).collect()
    }

    /// `⟨n̂⟩` of a level.
    pub fn mean_number(&self, index: usize) -> f64 {
        mean_number(&self.levels[index].state)
    }

    /// `⟨Q² + P²⟩ = λ(2⟨n̂⟩ + 1)` of a level.
    pub fn mean_r2(&self, index: usize, lambda: f64) -> f64 {
        lambda * (2.0 * self.mean_number(index) + 1.0)
    }
}

pub fn mean_number(state: &DVector<Complex64>) -> f64 {
    state.iter().enumerate().map(|(k, c)| k as f64 * c.norm_sqr()).sum()
}

/// Fixes the global phase so the largest-magnitude component is real positive.
pub(crate) fn fix_phase(v: &mut DVector<Complex64>) {
    let (imax, _) = v.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
        let m = z.norm_sqr();
        if m > acc.1 + 1e-14 {
            (i, m)
        } else {
            acc
        }
    });
    let z = v[imax];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|c| *c *= phase);
    }
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let n = m.nrows();
    let real = m.iter().all(|z| z.im == 0.0);
    let (values, vectors): (Vec<f64>, Vec<DVector<Complex64>>) = if real {
        let eig = SymmetricEigen::new(m.map(|z| z.re));
        (
            eig.eigenvalues.iter().copied().collect(),
            (0..n).map(|k| eig.eigenvectors.column(k).map(|x| Complex64::new(x, 0.0))).collect(),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), (0..n).map(|k| eig.eigenvectors.column(k).into_owned()).collect())
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut sorted_vectors = Vec::with_capacity(n);
    for &k in &order {
        let mut v = vectors[k].clone();
        fix_phase(&mut v);
        sorted_vectors.push(v);
    }
    (order.iter().map(|&k| values[k]).collect(), sorted_vectors)
}

pub fn diagonalize(gop: &FockOperator) -> Result<QuasienergySpectrum> {
    let deviation = gop.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { deviation });
    }
    let (values, vectors) = hermitian_eigen(gop.matrix());
    let levels = values.into_iter().zip(vectors).map(|(g, state)| Level { g, state }).collect();
    Ok(QuasienergySpectrum { dim: gop.dim(), levels })
}

const RESCALE: f64 = 1e150;

/// Orthonormal Hermite functions `h_0(x) … h_{n_max}(x)` via the three-term
/// recurrence, carried in scaled form with a separate log-magnitude so the
/// Gaussian factor never underflows mid-recurrence.
pub fn hermite_functions(n_max: usize, x: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max + 1);
    // h_k = s_k · exp(log_scale)
    let mut log_scale = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let emit = |s: f64, log_scale: f64, k: usize| -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let log_mag = s.abs().ln() + log_scale;
        if log_mag > 700.0 {
            return Err(Error::RecurrenceOverflow { n: k, x });
        }
        Ok(s.signum() * log_mag.exp())
    };
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(emit(cur, log_scale, 0)?);
    for k in 1..=n_max {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * x * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(emit(cur, log_scale, k)?);
    }
    Ok(out)
}

/// `|φ(Q)|²` with `φ(Q) = Σ c_n h_n(Q/√λ) / λ^{1/4}`.
pub fn position_density(state: &DVector<Complex64>, lambda: f64, q_grid: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be > 0")));
    }
    let norm = lambda.powf(-0.25);
    let n_max = state.len().saturating_sub(1);
    q_grid
        .iter()
        .map(|&q| {
            let h = hermite_functions(n_max, q / lambda.sqrt())?;
            let phi: Complex64 = state.iter().zip(&h).map(|(c, hk)| c * *hk).sum();
            Ok((phi * norm).norm_sqr())
        })
        .collect()
}

/// Default position grid: 800 points spanning `Q ∈ [−2, 2]`.
pub fn default_q_grid() -> Vec<f64> {
    linspace(-2.0, 2.0, 800)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Grid positions of the local maxima of `density` that exceed
/// `rel_threshold` times the global maximum.
pub fn density_peaks(q_grid: &[f64], density: &[f64], rel_threshold: f64) -> Vec<f64> {
    let max = density.iter().copied().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for i in 0..density.len() {
        let left = if i == 0 { f64::NEG_INFINITY } else { density[i - 1] };
        let right = if i + 1 == density.len() { f64::NEG_INFINITY } else { density[i + 1] };
        if density[i] > left && density[i] >= right && density[i] > rel_threshold * max {
            peaks.push(q_grid[i]);
        }
    }
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Inside the well around the local maximum of `g` (small amplitude).
    NearMax,
    /// Inside the well around the minimum of `g` (large amplitude).
    NearMin,
    OuterTorus,
    /// Straddling the separatrix, or too close to the truncation edge.
    Unclassified,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::NearMax => "near-max",
            Region::NearMin => "near-min",
            Region::OuterTorus => "outer-torus",
            Region::Unclassified => "unclassified",
        }
    }
}

/// Classical landmarks of the landscape used to sort levels into wells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub g_max: f64,
    pub g_saddle: f64,
    pub g_min: f64,
    pub saddle: PhasePoint,
    pub max: PhasePoint,
    pub min: PhasePoint,
}

impl Landmarks {
    /// `None` outside the bistable window, where only one well exists.
    pub fn new(beta: f64) -> Option<Self> {
        if !(beta > 0.0 && beta < BETA_MAX_UNDAMPED) {
            return None;
        }
        let ex = classical::extrema(beta).ok()?;
        let max = ex.find(ExtremumKind::Maximum)?.point;
        let saddle = ex.find(ExtremumKind::Saddle)?.point;
        let min = ex.find(ExtremumKind::Minimum)?.point;
        Some(Self {
            g_max: classical::quasienergy(max, beta),
            g_saddle: classical::quasienergy(saddle, beta),
            g_min: classical::quasienergy(min, beta),
            saddle,
            max,
            min,
        })
    }

    pub fn saddle_r2(&self) -> f64 {
        self.saddle.q * self.saddle.q
    }

    /// Width of the band around `g(s)` in which levels are left unclassified.
    pub fn separatrix_band(lambda: f64) -> f64 {
        0.25 * lambda
    }
}

/// Fock-weight fraction in the last tenth of the basis above which a level
/// is considered truncation-limited.
pub const TAIL_WEIGHT_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelClassification {
    pub regions: Vec<Region>,
    pub mean_r2: Vec<f64>,
    /// Whether a level is far enough from the truncation edge to trust.
    pub reliable: Vec<bool>,
}

impl LevelClassification {
    pub fn indices(&self, region: Region) -> Vec<usize> {
        (0..self.regions.len()).filter(|&i| self.regions[i] == region).collect()
    }
}

fn tail_weight(state: &DVector<Complex64>) -> f64 {
    let n = state.len();
    let start = n - (n / 10).max(1);
    state.iter().skip(start).map(|c| c.norm_sqr()).sum()
}

/// Sorts every level into a well of the classical landscape.
///
/// | condition                                   | region        |
/// |---------------------------------------------|---------------|
/// | tail weight above cutoff                    | unclassified  |
/// | `|g_n − g(s)| < λ/4`                        | unclassified  |
/// | `g_n < g(s)`                                | near-min      |
/// | `g(s) < g_n < g(M)`, `⟨r²⟩ < r(s)²`          | near-max      |
/// | `g(s) < g_n < g(M)`, `⟨r²⟩ > r(s)²`          | outer-torus   |
/// | `g_n > g(M)`                                | outer-torus   |
///
/// Outside the bistable window there is a single well and every reliable
/// level is reported as near-min.
pub fn classify_levels(spec: &QuasienergySpectrum, lambda: f64, beta: f64) -> LevelClassification {
    let landmarks = Landmarks::new(beta);
    let band = Landmarks::separatrix_band(lambda);
    let mut regions = Vec::with_capacity(spec.levels.len());
    let mut mean_r2 = Vec::with_capacity(spec.levels.len());
    let mut reliable = Vec::with_capacity(spec.levels.len());
    for (i, level) in spec.levels.iter().enumerate() {
        let r2 = spec.mean_r2(i, lambda);
        let ok = tail_weight(&level.state) <= TAIL_WEIGHT_CUTOFF;
        mean_r2.push(r2);
        reliable.push(ok);
        let region = match (&landmarks, ok) {
            (_, false) => Region::Unclassified,
            (None, true) => Region::NearMin,
            (Some(lm), true) => {
                let g = level.g;
                if (g - lm.g_saddle).abs() < band {
                    Region::Unclassified
                } else if g < lm.g_saddle {
                    Region::NearMin
                } else if g <= lm.g_max && r2 < lm.saddle_r2() {
                    Region::NearMax
                } else {
                    Region::OuterTorus
                }
            }
        };
        regions.push(region);
    }
    LevelClassification { regions, mean_r2, reliable }
}

/// Levels singled out for plotting: the ones nearest each classical extremum
/// and the outer-torus level closest in quasienergy to the near-max level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturedLevels {
    pub near_max: Option<usize>,
    pub near_min: Option<usize>,
    pub near_saddle: Option<usize>,
    pub outer_partner: Option<usize>,
}

pub fn featured_levels(spec: &QuasienergySpectrum, class: &LevelClassification, beta: f64) -> FeaturedLevels {
    let closest = |indices: Vec<usize>, target: f64| {
        indices.into_iter().min_by(|&a, &b| {
            (spec.levels[a].g - target).abs().partial_cmp(&(spec.levels[b].g - target).abs()).unwrap()
        })
    };
    let Some(lm) = Landmarks::new(beta) else {
        let near_min = class.indices(Region::NearMin).first().copied();
        return FeaturedLevels { near_max: None, near_min, near_saddle: None, outer_partner: None };
    };
    let near_max = closest(class.indices(Region::NearMax), lm.g_max);
    let near_min = closest(class.indices(Region::NearMin), lm.g_min);
    let reliable: Vec<usize> = (0..spec.levels.len()).filter(|&i| class.reliable[i]).collect();
    let near_saddle = closest(reliable, lm.g_saddle);
    let outer_partner = near_max.and_then(|m| closest(class.indices(Region::OuterTorus), spec.levels[m].g));
    FeaturedLevels { near_max, near_min, near_saddle, outer_partner }
}

/// An avoided crossing between a level of the small-amplitude well and an
/// outer-torus level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anticrossing {
    pub beta: f64,
    pub gap: f64,
    /// Position of the inner level counted from the well's extremum.
    pub inner_rank: usize,
    pub inner_index: usize,
    pub outer_index: usize,
    /// Fock weight inside the saddle radius for the two states.
    pub inner_weight: [f64; 2],
}

/// Fock weight of a state inside the saddle radius, `λ(2n+1) < r(s)²`.
pub fn inner_weight(state: &DVector<Complex64>, lambda: f64, saddle_r2: f64) -> f64 {
    state
        .iter()
        .enumerate()
        .filter(|(k, _)| lambda * ((2 * k + 1) as f64) < saddle_r2)
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

/// Gap between the `rank`-th level of the small-amplitude well (counted down
/// from its extremum) and the nearest adjacent outer level.
#[derive(Debug, Clone, Copy)]
struct PairGap {
    gap: f64,
    inner: usize,
    outer: usize,
    weights: [f64; 2],
}

fn pair_gap(spec: &QuasienergySpectrum, lambda: f64, lm: &Landmarks, rank: usize) -> Option<PairGap> {
    let weights: Vec<f64> = spec.levels.iter().map(|l| inner_weight(&l.state, lambda, lm.saddle_r2())).collect();
    let band = Landmarks::separatrix_band(lambda);
    let mut inner: Vec<usize> = (0..spec.levels.len())
        .filter(|&i| spec.levels[i].g > lm.g_saddle + band && weights[i] >= 0.5)
        .collect();
    inner.sort_by(|&a, &b| spec.levels[b].g.partial_cmp(&spec.levels[a].g).unwrap());
    let i = *inner.get(rank)?;
    [i.checked_sub(1), Some(i + 1)]
        .into_iter()
        .flatten()
        .filter(|&j| j < spec.levels.len() && weights[j] < 0.5 && tail_weight(&spec.levels[j].state) <= TAIL_WEIGHT_CUTOFF)
        .map(|j| PairGap { gap: (spec.levels[i].g - spec.levels[j].g).abs(), inner: i, outer: j, weights: [weights[i], weights[j]] })
        .min_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap())
}

fn gap_at(n: usize, lambda: f64, beta: f64, rank: usize) -> Option<PairGap> {
    let lm = Landmarks::new(beta)?;
    let spec = QuasienergySpectrum::compute(n, lambda, beta).ok()?;
    pair_gap(&spec, lambda, &lm, rank)
}

/// Scans `β` for local minima of the gap between small-amplitude-well levels
/// and outer-torus levels, refining each coarse minimum by golden section.
pub fn degeneracy_scan(lambda: f64, beta_lo: f64, beta_hi: f64, n_points: usize, n: usize) -> Result<Vec<Anticrossing>> {
    if !(beta_lo > 0.0 && beta_hi < BETA_MAX_UNDAMPED && beta_lo < beta_hi) {
        return Err(Error::InvalidParameter(format!(
            "scan window [{beta_lo}, {beta_hi}] must lie inside (0, 4/27)"
        )));
    }
    if n_points < 3 {
        return Err(Error::InvalidParameter("degeneracy scan needs at least 3 points".into()));
    }
    let betas = linspace(beta_lo, beta_hi, n_points);
    let coarse: Vec<Vec<Option<PairGap>>> = betas
        .par_iter()
        .map(|&beta| {
            let Some(lm) = Landmarks::new(beta) else { return Vec::new() };
            let Ok(spec) = QuasienergySpectrum::compute(n, lambda, beta) else { return Vec::new() };
            (0..).map_while(|rank| pair_gap(&spec, lambda, &lm, rank).map(Some)).collect()
        })
        .collect();
    let max_rank = coarse.iter().map(Vec::len).max().unwrap_or(0);
    let mut found = Vec::new();
    for rank in 0..max_rank {
        let gaps: Vec<Option<f64>> = coarse.iter().map(|row| row.get(rank).copied().flatten().map(|p| p.gap)).collect();
        for j in 1..n_points - 1 {
            let (Some(l), Some(c), Some(r)) = (gaps[j - 1], gaps[j], gaps[j + 1]) else { continue };
            if !(c < l && c < r) {
                continue;
            }
            let objective = |b: f64| gap_at(n, lambda, b, rank).map_or(f64::INFINITY, |p| p.gap);
            let beta = golden_section_min(objective, betas[j - 1], betas[j + 1], 1e-10 * beta_hi);
            if let Some(p) = gap_at(n, lambda, beta, rank) {
                found.push(Anticrossing {
                    beta,
                    gap: p.gap,
                    inner_rank: rank,
                    inner_index: p.inner,
                    outer_index: p.outer,
                    inner_weight: p.weights,
                });
            }
        }
    }
    found.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap());
    Ok(found)
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
