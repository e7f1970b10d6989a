//! Subcommand implementations. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use coupled_susy::linalg::{max_abs_c, RMatrix};
use coupled_susy::models::PresetName;
use coupled_susy::oracle::{bound_state_scan, oracle_jost, IntegrationConfig, PotentialTable};
use coupled_susy::scattering::{track_eigenphases, DEFAULT_S_TOLERANCE};
use coupled_susy::Transform;
use serde::Serialize;

use crate::config::{self, Format, Run};
use crate::error::CliError;
use crate::output::{self, Cell, Fixed, Table};

pub const ORACLE_TOLERANCE: f64 = 1e-6;
pub const BOUND_STATE_GRID: usize = 4000;
/// Below this ratio of the predicted rate the fitted tail is considered too slow.
pub const TAIL_RATE_FRACTION: f64 = 0.9;

pub fn potential_table(run: &Run, transform: &Transform) -> Result<Table, CliError> {
    let n = run.spec.n_channels();
    let mut columns = vec!["r".to_string()];
    for i in 0..n {
        for j in i..n {
            columns.push(format!("V{}{}", i + 1, j + 1));
        }
    }
    let mut rows = Vec::new();
    for r in run.radii() {
        let v = transform.potential(r)?;
        let mut row = vec![Cell::float(r)];
        for i in 0..n {
            for j in i..n {
                row.push(Cell::float(v[(i, j)]));
            }
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

pub fn smatrix_table(run: &Run, transform: &Transform) -> Result<Table, CliError> {
    if run.spec.n_channels() != 2 {
        return Err(CliError::Validation(format!(
            "smatrix: eigenphase tables need 2 channels, config has {}",
            run.spec.n_channels()
        )));
    }
    let rows = track_eigenphases(|e| transform.s_matrix(e), &run.energies(), DEFAULT_S_TOLERANCE)?
        .into_iter()
        .map(|row| {
            vec![
                Cell::float(row.energy),
                Cell::maybe(row.delta1),
                Cell::maybe(row.delta2),
                Cell::maybe(row.epsilon),
                Cell::Count(row.open_channels),
            ]
        })
        .collect();
    Ok(Table {
        columns: ["E", "delta1", "delta2", "epsilon", "open_channels"].map(String::from).to_vec(),
        rows,
    })
}

/// Bound-state energies below the lowest threshold. For `E < Delta_min - |U(0)|^2`
/// every wave number exceeds `|U(0)|`, so `U(0) + kappa(E)` is positive definite
/// and the scan can stop there.
pub fn bound_states(run: &Run, transform: &Transform) -> Result<Vec<f64>, CliError> {
    let channels = run.spec.channels();
    let norm = transform.u0().norm();
    let upper = channels.min_threshold() - 1e-9;
    let lower = channels.min_threshold() - norm * norm - 1.0;
    Ok(bound_state_scan(|e| transform.jost_at_energy(e), channels, lower, upper, BOUND_STATE_GRID)?)
}

pub fn bound_state_table(run: &Run, transform: &Transform) -> Result<Table, CliError> {
    let rows = bound_states(run, transform)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| vec![Cell::Count(i), Cell::float(e)])
        .collect();
    Ok(Table {
        columns: vec!["index".into(), "E".into()],
        rows,
    })
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub value: Option<Fixed>,
    pub limit: Fixed,
    pub passed: bool,
}

impl Check {
    fn below(value: f64, limit: f64) -> Self {
        Self {
            value: Some(Fixed(value)),
            limit: Fixed(limit),
            passed: value < limit,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OracleSummary {
    pub energies: usize,
    pub r_max: Fixed,
    pub step: Fixed,
    pub jost_deviation: Check,
    pub s_deviation: Check,
}

#[derive(Debug, Serialize)]
pub struct TailSummary {
    pub fitted_slope: Option<Fixed>,
    pub predicted_slope: Fixed,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub config: config::RunConfig,
    pub rank: usize,
    pub u_at_infinity: Vec<Vec<Fixed>>,
    pub oracle: OracleSummary,
    pub unitarity_defect: Check,
    pub symmetry_defect: Check,
    pub tail_decay: TailSummary,
    pub bound_states: Vec<Fixed>,
    pub passed: bool,
}

fn fixed_matrix(m: &RMatrix) -> Vec<Vec<Fixed>> {
    m.row_iter().map(|row| row.iter().map(|&x| Fixed(x)).collect()).collect()
}

pub fn verify_report(run: &Run, transform: &Transform) -> Result<VerifyReport, CliError> {
    let channels = run.spec.channels();
    let energies = run.energies();
    let above: Vec<f64> = energies.iter().copied().filter(|&e| e > channels.max_threshold()).collect();
    if above.is_empty() {
        return Err(CliError::Validation(
            "e_grid: verify needs energies above every threshold".into(),
        ));
    }
    let e_top = above.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // four times finer than the default keeps free-wave errors near 1e-12
    let step = IntegrationConfig::default_step(run.spec.kappa_max(), e_top) / 4.0;
    let r_max = transform.scan_radius().max(20.0);
    let cfg = IntegrationConfig::new(r_max, step)?;
    let table = PotentialTable::new(|r| transform.potential(r), &cfg)?;
    let (mut jost_dev, mut s_dev) = (0.0f64, 0.0f64);
    for &e in &above {
        let oracle = oracle_jost(&table, channels, e)?;
        jost_dev = jost_dev.max(max_abs_c(&(&oracle.plus - transform.jost_at_energy(e))));
        let s = oracle.s_matrix(channels)?;
        s_dev = s_dev.max(max_abs_c(&(s.s - transform.s_matrix(e)?.s)));
    }
    let (mut unitarity, mut symmetry) = (0.0f64, 0.0f64);
    for &e in &energies {
        let s = transform.s_matrix(e)?;
        if s.n_open() > 0 {
            unitarity = unitarity.max(s.unitarity_defect());
            symmetry = symmetry.max(s.symmetry_defect());
        }
    }
    let predicted = -transform.canonical().decay_rate(&run.spec);
    let fitted = transform.tail_decay_slope(transform.scan_radius(), 400);
    let tail = TailSummary {
        fitted_slope: fitted.map(Fixed),
        predicted_slope: Fixed(predicted),
        passed: fitted.is_none_or(|s| s <= TAIL_RATE_FRACTION * predicted),
    };
    let oracle = OracleSummary {
        energies: above.len(),
        r_max: Fixed(r_max),
        step: Fixed(cfg.actual_step()),
        jost_deviation: Check::below(jost_dev, ORACLE_TOLERANCE),
        s_deviation: Check::below(s_dev, ORACLE_TOLERANCE),
    };
    let unitarity_defect = Check::below(unitarity, DEFAULT_S_TOLERANCE);
    let symmetry_defect = Check::below(symmetry, DEFAULT_S_TOLERANCE);
    let passed = oracle.jost_deviation.passed
        && oracle.s_deviation.passed
        && unitarity_defect.passed
        && symmetry_defect.passed
        && tail.passed;
    Ok(VerifyReport {
        config: run.effective.clone(),
        rank: transform.rank(),
        u_at_infinity: fixed_matrix(transform.u_at_infinity()),
        oracle,
        unitarity_defect,
        symmetry_defect,
        tail_decay: tail,
        bound_states: bound_states(run, transform)?.into_iter().map(Fixed).collect(),
        passed,
    })
}

fn write_config(dir: &Path, name: &str, run: &Run) -> Result<PathBuf, CliError> {
    output::write_file(dir, name, &output::to_json(&run.effective)?)
}

pub fn potential(run: &Run, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    let table = potential_table(run, &run.transform()?)?;
    let mut written = output::write_table(dir, "potential", "potential", &table, formats, &run.effective)?;
    written.push(write_config(dir, "config.json", run)?);
    Ok(written)
}

pub fn smatrix(run: &Run, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    let table = smatrix_table(run, &run.transform()?)?;
    let mut written = output::write_table(dir, "smatrix", "smatrix", &table, formats, &run.effective)?;
    written.push(write_config(dir, "config.json", run)?);
    Ok(written)
}

pub fn boundstates(run: &Run, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    let table = bound_state_table(run, &run.transform()?)?;
    let mut written = output::write_table(dir, "boundstates", "boundstates", &table, formats, &run.effective)?;
    written.push(write_config(dir, "config.json", run)?);
    Ok(written)
}

/// Writes the report; a failed check becomes [`CliError::Verification`] after the file exists.
pub fn verify(run: &Run, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let report = verify_report(run, &run.transform()?)?;
    let path = output::write_file(dir, "verify.json", &output::to_json(&report)?)?;
    if !report.passed {
        return Err(CliError::Verification(format!("see {}", path.display())));
    }
    Ok(vec![path])
}

/// Potential and eigenphase tables of a named preset, plus its expanded configuration.
pub fn figdata(name: PresetName, run: &Run, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    let transform = run.transform()?;
    let stem = name.as_str();
    let mut written = output::write_table(
        dir,
        &format!("{stem}_potential"),
        "potential",
        &potential_table(run, &transform)?,
        formats,
        &run.effective,
    )?;
    written.extend(output::write_table(
        dir,
        &format!("{stem}_smatrix"),
        "smatrix",
        &smatrix_table(run, &transform)?,
        formats,
        &run.effective,
    )?);
    written.push(write_config(dir, &format!("{stem}_config.json"), run)?);
    Ok(written)
}

/// Run of a preset with default grids and outputs.
pub fn preset_run(name: PresetName) -> Result<Run, CliError> {
    config::resolve(&config::preset_config(name))
}
