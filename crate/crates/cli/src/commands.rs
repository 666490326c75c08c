use std::path::PathBuf;

use duffing_core::classical::{self, ExtremumKind, FixedPoint, PhasePoint, Stability};
use duffing_core::fock;
use duffing_core::lindblad::SteadyStateOptions;
use duffing_core::metastable::{self, RowStatus, TableSettings};
use duffing_core::spectrum::{self, QuasienergySpectrum};

use crate::config::RunConfig;
use crate::output::{write_table, Cell, Format, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{failed} of {total} sweep cells failed")]
    PartialSweep { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::PartialSweep { .. } => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<duffing_core::Error> for CliError {
    fn from(e: duffing_core::Error) -> Self {
        CliError::Solver(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn stability_label(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Neutral => "neutral",
        Stability::Unstable => "unstable",
    }
}

fn truncation(cfg: &RunConfig) -> usize {
    cfg.truncation.unwrap_or_else(|| fock::default_truncation(cfg.params.lambda))
}

fn emit(cfg: &RunConfig, stem: &str, table: &Table, written: &mut Vec<PathBuf>) -> CliResult<()> {
    written.push(write_table(&cfg.output_dir, stem, table, cfg.format, &cfg.hash)?);
    Ok(())
}

fn fixed_point_kind(fp: &FixedPoint) -> String {
    format!("fixed-point-{}", fp.branch.as_str())
}

pub fn landscape(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let grid = cfg
        .grids
        .phase_space
        .ok_or_else(|| CliError::Config("landscape needs grids.phase_space".into()))?;
    let beta = cfg.params.beta;
    let mut table = Table::new(&["kind", "Q", "P", "g"]);
    let qs = spectrum::linspace(grid.q_min, grid.q_max, grid.nq);
    let ps = spectrum::linspace(grid.p_min, grid.p_max, grid.np);
    for &q in &qs {
        for &p in &ps {
            let g = classical::quasienergy(PhasePoint::new(q, p), beta);
            table.push(vec!["grid".into(), q.into(), p.into(), g.into()]);
        }
    }
    let extrema = classical::extrema(beta)?;
    if let Some(w) = &extrema.warning {
        eprintln!("warning: {w}");
    }
    for fp in &extrema.points {
        let kind = fp.extremum.unwrap_or(ExtremumKind::Degenerate).as_str();
        let g = classical::quasienergy(fp.point, beta);
        table.push(vec![kind.into(), fp.point.q.into(), fp.point.p.into(), g.into()]);
    }
    if cfg.params.eta > 0.0 && beta > 0.0 {
        for fp in classical::damped_fixed_points(beta, cfg.params.eta)? {
            let g = classical::quasienergy(fp.point, beta);
            table.push(vec![fixed_point_kind(&fp).into(), fp.point.q.into(), fp.point.p.into(), g.into()]);
        }
    }
    table.provenance = vec![("beta", beta.into()), ("eta", cfg.params.eta.into())];
    let mut written = Vec::new();
    emit(cfg, "landscape", &table, &mut written)?;
    Ok(written)
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let (lambda, beta) = (cfg.params.lambda, cfg.params.beta);
    let n = truncation(cfg);
    let spec = QuasienergySpectrum::compute(n, lambda, beta)?;
    let class = spectrum::classify_levels(&spec, lambda, beta);
    let featured = spectrum::featured_levels(&spec, &class, beta);
    let q_grid = spectrum::default_q_grid();
    let mut written = Vec::new();

    let mut cut = Table::new(&["Q", "g"]);
    for &q in &q_grid {
        cut.push(vec![q.into(), classical::quasienergy(PhasePoint::new(q, 0.0), beta).into()]);
    }
    cut.provenance = vec![("beta", beta.into())];
    emit(cfg, "potential_cut", &cut, &mut written)?;

    let mut levels = Table::new(&["index", "g_n", "region"]);
    for (i, level) in spec.levels.iter().enumerate() {
        levels.push(vec![i.into(), level.g.into(), class.regions[i].as_str().into()]);
    }
    levels.provenance = vec![("N", n.into()), ("lambda", lambda.into()), ("beta", beta.into())];
    emit(cfg, "levels", &levels, &mut written)?;

    let single_well = spectrum::Landmarks::new(beta).is_none();
    if single_well {
        eprintln!("note: beta = {beta} is outside (0, 4/27); single-well spectrum, only the near-min density is written");
    }
    let picks = [
        ("density_near_max", featured.near_max),
        ("density_near_min", featured.near_min),
        ("density_near_saddle", featured.near_saddle),
        ("density_outer_torus", featured.outer_partner),
    ];
    for (stem, index) in picks {
        let Some(i) = index else {
            if !single_well {
                eprintln!("note: no level available for {stem}");
            }
            continue;
        };
        let density = spectrum::position_density(&spec.levels[i].state, lambda, &q_grid)?;
        let mut table = Table::new(&["Q", "density"]);
        for (q, d) in q_grid.iter().zip(density) {
            table.push(vec![(*q).into(), d.into()]);
        }
        table.provenance = vec![
            ("index", i.into()),
            ("g_n", spec.levels[i].g.into()),
            ("region", class.regions[i].as_str().into()),
        ];
        emit(cfg, stem, &table, &mut written)?;
    }

    if let Some(scan) = cfg.degeneracy_scan {
        let found = spectrum::degeneracy_scan(lambda, scan.beta_lo, scan.beta_hi, scan.points, n)?;
        let mut table =
            Table::new(&["beta", "gap", "inner_rank", "inner_index", "outer_index", "inner_weight", "outer_weight"]);
        for a in &found {
            table.push(vec![
                a.beta.into(),
                a.gap.into(),
                a.inner_rank.into(),
                a.inner_index.into(),
                a.outer_index.into(),
                a.inner_weight[0].into(),
                a.inner_weight[1].into(),
            ]);
        }
        table.provenance = vec![("N", n.into()), ("lambda", lambda.into())];
        emit(cfg, "anticrossings", &table, &mut written)?;
    }
    Ok(written)
}

fn eta_list(cfg: &RunConfig) -> Vec<f64> {
    cfg.grids.eta.as_ref().map_or_else(|| vec![cfg.params.eta], |g| g.values())
}

pub fn fixed_points(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let beta = cfg.params.beta;
    let etas = eta_list(cfg);
    let rows = classical::branch_curves(beta, &etas)?;
    let mut table = Table::new(&["eta", "branch", "Q", "P", "r", "stable"]);
    for row in &rows {
        let cells = match &row.fixed_point {
            Some(fp) => vec![
                row.eta.into(),
                row.branch.as_str().into(),
                fp.point.q.into(),
                fp.point.p.into(),
                fp.amplitude.into(),
                stability_label(fp.stability).into(),
            ],
            None => vec![row.eta.into(), row.branch.as_str().into(), Cell::Empty, Cell::Empty, Cell::Empty, "absent".into()],
        };
        table.push(cells);
    }
    table.provenance = vec![("beta", beta.into())];
    let mut written = Vec::new();
    emit(cfg, "fixed_points", &table, &mut written)?;
    Ok(written)
}

/// Temperatures in units of Ω: the configured grid, else the lab-frame
/// temperature, else the one implied by `n̄`.
fn temperature_list(cfg: &RunConfig) -> Vec<f64> {
    if let Some(g) = &cfg.grids.temperature {
        return g.values();
    }
    if let Some(t) = cfg.temperature {
        return vec![t];
    }
    let nbar = cfg.params.nbar;
    vec![if nbar > 0.0 { 1.0 / (1.0 + 1.0 / nbar).ln() } else { 0.0 }]
}

pub fn eta_eff(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let n = truncation(cfg);
    let settings = TableSettings {
        lambda: cfg.params.lambda,
        beta: cfg.params.beta,
        n,
        steady: SteadyStateOptions::new(cfg.method, cfg.tol),
    };
    let etas = eta_list(cfg);
    let temps = temperature_list(cfg);
    let rows = metastable::eta_eff_table(&settings, &etas, &temps);

    let mut columns = vec!["eta", "T", "branch", "Q", "P", "eta_eff", "delta_eta", "weight", "status"];
    if cfg.format == Format::Json {
        columns.extend(["distance", "N", "residual"]);
    }
    let mut table = Table::new(&columns);
    for row in &rows {
        let mut cells = vec![
            row.eta.into(),
            row.t.into(),
            row.branch.as_str().into(),
            row.q.into(),
            row.p.into(),
            row.eta_eff.into(),
            row.delta_eta.into(),
            row.weight.into(),
            row.status.label().into(),
        ];
        if cfg.format == Format::Json {
            cells.extend([row.distance.into(), row.dim.into(), row.residual.into()]);
        }
        table.push(cells);
    }
    table.provenance = vec![
        ("lambda", settings.lambda.into()),
        ("beta", settings.beta.into()),
        ("N", n.into()),
        ("method", cfg.method.as_str().into()),
        ("tol", cfg.tol.into()),
    ];
    let mut written = Vec::new();
    emit(cfg, "eta_eff", &table, &mut written)?;

    // two rows per cell
    let total = rows.len() / 2;
    let failed = rows
        .chunks(2)
        .filter(|cell| cell.iter().any(|r| matches!(r.status, RowStatus::Error(_))))
        .count();
    if failed == total && total > 0 {
        let first = rows.iter().find_map(|r| match &r.status {
            RowStatus::Error(msg) => Some(msg.clone()),
            _ => None,
        });
        return Err(CliError::Solver(first.unwrap_or_default()));
    }
    if failed > 0 {
        return Err(CliError::PartialSweep { failed, total });
    }
    Ok(written)
}
