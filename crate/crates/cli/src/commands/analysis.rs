//! `calibrate` and `extract`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use casimir_core::io::{parse_trace, Table};
use casimir_core::pipeline::{
    analyze_runs, average_grids, combine_hydro, fit_hydro_calibration, prepare_trace,
    range_sensitivity, AlignOptions, AnalysisConfig, CalibrationFit, DeflectionTrace, GridSeries,
    HistogramRequest, PrepareOptions, TripletTraces,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{file_stem, tag, Ctx};
use crate::config::{check_range, read_input};
use crate::error::{core, CliError, Result};

/// Calibration as written to and read from `calibration.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub force_constant_nn_v: f64,
    pub force_constant_err: f64,
    pub contact_offset_nm: f64,
    pub contact_offset_err: f64,
    pub fit_range_nm: (f64, f64),
    pub residual_rms_pn: f64,
    pub iterations: usize,
    /// Velocity of the fitted hydrodynamic signal, nm/s.
    pub velocity_nm_s: f64,
}

impl CalibrationRecord {
    fn new(fit: &CalibrationFit, velocity: f64) -> Self {
        Self {
            force_constant_nn_v: fit.force_constant,
            force_constant_err: fit.uncertainties.0,
            contact_offset_nm: fit.contact_offset,
            contact_offset_err: fit.uncertainties.1,
            fit_range_nm: fit.fit_range,
            residual_rms_pn: fit.residual_rms,
            iterations: fit.iterations,
            velocity_nm_s: velocity,
        }
    }

    fn to_fit(&self) -> CalibrationFit {
        CalibrationFit {
            force_constant: self.force_constant_nn_v,
            contact_offset: self.contact_offset_nm,
            fit_range: self.fit_range_nm,
            residual_rms: self.residual_rms_pn,
            uncertainties: (self.force_constant_err, self.contact_offset_err),
            residuals: Vec::new(),
            iterations: self.iterations,
        }
    }
}

/// Traces keyed by velocity (bit pattern, so grouping is exact), in file
/// order within each group.
struct VelocityGroups {
    groups: BTreeMap<u64, Vec<(PathBuf, DeflectionTrace)>>,
}

impl VelocityGroups {
    fn read(files: &[PathBuf]) -> Result<Self> {
        if files.is_empty() {
            return Err(CliError::Config("no trace files given".into()));
        }
        let mut groups: BTreeMap<u64, Vec<(PathBuf, DeflectionTrace)>> = BTreeMap::new();
        for f in files {
            let mut t = parse_trace(&read_input(f)?).map_err(core)?;
            if t.label.is_empty() {
                t.label = file_stem(f);
            }
            groups
                .entry(t.velocity().to_bits())
                .or_default()
                .push((f.clone(), t));
        }
        Ok(Self { groups })
    }

    /// Velocities ordered by increasing speed.
    fn by_speed(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.groups.keys().map(|&b| f64::from_bits(b)).collect();
        v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        v
    }

    fn traces(&self, v: f64) -> Vec<&DeflectionTrace> {
        self.groups[&v.to_bits()].iter().map(|(_, t)| t).collect()
    }
}

fn prepare_options(grid_step: f64, window: f64) -> Result<PrepareOptions> {
    if !(grid_step > 0.0 && window >= 0.0) {
        return Err(CliError::Config(format!(
            "grid step {grid_step} must be positive and compensation window {window} >= 0"
        )));
    }
    Ok(PrepareOptions {
        align: AlignOptions::default(),
        grid_step,
        compensation_window: window,
    })
}

/// Hydrodynamic signal and its velocity. One velocity is fitted directly;
/// with several, each slowest-velocity trace is subtracted from the
/// fastest-velocity trace of the same position in file order.
fn hydro_signal(groups: &VelocityGroups, opts: &PrepareOptions) -> Result<(GridSeries, f64)> {
    let speeds = groups.by_speed();
    let prep = |ts: Vec<&DeflectionTrace>| {
        ts.par_iter()
            .map(|t| prepare_trace(t, opts).map(|p| p.1))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(core)
    };
    if speeds.len() == 1 {
        let v = speeds[0];
        let grids: Vec<GridSeries> = prep(groups.traces(v))?
            .into_iter()
            .map(|r| r.grid)
            .collect();
        return Ok((average_grids(&grids).map_err(core)?, v));
    }
    let slow = prep(groups.traces(speeds[0]))?;
    let fast = prep(groups.traces(speeds[speeds.len() - 1]))?;
    if slow.len() != fast.len() {
        return Err(CliError::Data(format!(
            "{} traces at {} nm/s but {} at {} nm/s",
            slow.len(),
            speeds[0],
            fast.len(),
            speeds[speeds.len() - 1]
        )));
    }
    let combined = fast
        .iter()
        .zip(&slow)
        .map(|(f, s)| combine_hydro(f, s))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(core)?;
    let velocity = combined[0].velocity;
    let grids: Vec<GridSeries> = combined.into_iter().map(|c| c.grid).collect();
    Ok((average_grids(&grids).map_err(core)?, velocity))
}

fn grid_table(g: &GridSeries, value: &str) -> Table {
    let mut t = Table::new(&["x_nm", value]);
    t.rows = g.iter().map(|(x, v)| vec![x, v]).collect();
    t
}

pub fn calibrate(ctx: &Ctx, files: &[PathBuf]) -> Result<()> {
    let c = &ctx.cfg.calibrate;
    check_range("calibrate.fit_range_nm", c.fit_range_nm)?;
    for &r in &c.compare_ranges_nm {
        check_range("calibrate.compare_ranges_nm", r)?;
    }
    let groups = VelocityGroups::read(files)?;
    let opts = prepare_options(c.grid_step_nm, c.compensation_window_nm)?;
    let (hydro, velocity) = hydro_signal(&groups, &opts)?;
    let radius = c.radius_um * 1e-6;
    let fit = fit_hydro_calibration(
        &hydro,
        c.viscosity_pa_s,
        radius,
        velocity * 1e-9,
        c.fit_range_nm,
    )
    .map_err(core)?;

    let record = CalibrationRecord::new(&fit, velocity);
    let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Data(e.to_string()))?;
    ctx.write("calibration.json", &json)?;

    let mut report = Table::new(&[
        "range_min_nm",
        "range_max_nm",
        "C_nN_per_V",
        "C_err",
        "d0_nm",
        "d0_err",
    ])
    .meta("traces", files.len())
    .meta("velocities_nm_s", format!("{:?}", groups.by_speed()))
    .meta("hydro_velocity_nm_s", velocity)
    .meta("force_constant_nN_per_V", fit.force_constant)
    .meta("force_constant_err", fit.uncertainties.0)
    .meta("contact_offset_nm", fit.contact_offset)
    .meta("contact_offset_err", fit.uncertainties.1)
    .meta("residual_rms_pN", fit.residual_rms);
    for r in range_sensitivity(
        &hydro,
        c.viscosity_pa_s,
        radius,
        velocity * 1e-9,
        &c.compare_ranges_nm,
    ) {
        match r.fit {
            Ok(f) => report.rows.push(vec![
                r.range.0,
                r.range.1,
                f.force_constant,
                f.uncertainties.0,
                f.contact_offset,
                f.uncertainties.1,
            ]),
            Err(e) => {
                log::warn!("fit over {:?} nm failed: {e}", r.range);
                report.rows.push(vec![
                    r.range.0,
                    r.range.1,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                ]);
            }
        }
    }
    ctx.write("calibration.txt", &report.render("  "))?;
    ctx.write("hydro.txt", &grid_table(&hydro, "signal_V").render("  "))?;
    let mut residuals = Table::new(&["x_nm", "residual_pN"]);
    residuals.rows = fit.residuals.iter().map(|&(x, r)| vec![x, r]).collect();
    ctx.write("calibration_residuals.txt", &residuals.render("  "))?;
    Ok(())
}

/// Splits the traces into runs of (v₁, 2v₁, v₂): v₁ is the slowest velocity,
/// 2v₁ its double and v₂ the remaining one.
fn triplets(groups: &VelocityGroups) -> Result<(Vec<TripletTraces>, [f64; 3])> {
    let speeds = groups.by_speed();
    if speeds.len() != 3 {
        return Err(CliError::Data(format!(
            "need traces at exactly three velocities, found {speeds:?}"
        )));
    }
    let v1 = speeds[0];
    let double = speeds[1..]
        .iter()
        .copied()
        .find(|v| (v - 2.0 * v1).abs() <= 1e-6 * v.abs())
        .ok_or_else(|| CliError::Data(format!("no velocity equal to 2 × {v1} nm/s")))?;
    let v2 = speeds[1..]
        .iter()
        .copied()
        .find(|&v| v != double)
        .unwrap_or(double);
    let (a, b, c) = (groups.traces(v1), groups.traces(double), groups.traces(v2));
    if a.len() != b.len() || a.len() != c.len() {
        return Err(CliError::Data(format!(
            "unequal trace counts {} / {} / {} at {v1} / {double} / {v2} nm/s",
            a.len(),
            b.len(),
            c.len()
        )));
    }
    let runs = (0..a.len())
        .map(|i| TripletTraces {
            v1: a[i].clone(),
            v1_double: b[i].clone(),
            v2: c[i].clone(),
        })
        .collect();
    Ok((runs, [v1, double, v2]))
}

pub fn extract(ctx: &Ctx, files: &[PathBuf], calibration: Option<&Path>) -> Result<()> {
    let c = &ctx.cfg.extract;
    check_range("extract.fit_range_nm", c.fit_range_nm)?;
    check_range("extract.far_range_nm", c.far_range_nm)?;
    let cal_path = match (calibration, &c.calibration) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(p)) => Some(ctx.cfg.resolve(p)),
        (None, None) => None,
    };
    let calibration = match cal_path {
        None => None,
        Some(p) => {
            let rec: CalibrationRecord = serde_json::from_str(&read_input(&p)?)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Some(rec.to_fit())
        }
    };
    let histograms = c
        .histograms
        .iter()
        .map(|h| HistogramRequest {
            separation: h.separation_nm,
            half_window: h.half_window_nm,
            centered: h.centered,
            n_bins: h.bins,
        })
        .collect();
    let cfg = AnalysisConfig {
        prepare: prepare_options(c.grid_step_nm, c.compensation_window_nm)?,
        viscosity: c.viscosity_pa_s,
        radius: c.radius_um * 1e-6,
        fit_range: c.fit_range_nm,
        far_range: c.far_range_nm,
        histograms,
        calibration,
    };
    let groups = VelocityGroups::read(files)?;
    let (runs, velocities) = triplets(&groups)?;
    let report = analyze_runs(&runs, &cfg).map_err(core)?;
    let cal = &report.calibration;
    let ens = &report.ensemble;

    let n = runs.len() as f64;
    let bg_slope = report.backgrounds.iter().map(|b| b.slope).sum::<f64>() / n;
    let bg_offset = report.backgrounds.iter().map(|b| b.offset).sum::<f64>() / n;
    let sensitivity = report
        .alignments
        .iter()
        .map(|a| a[0].sensitivity)
        .sum::<f64>()
        / n;
    let summary = Table::new(&[])
        .meta("runs", runs.len())
        .meta("velocities_nm_s", format!("{velocities:?}"))
        .meta("hydro_velocity_nm_s", report.hydro_velocity)
        .meta("force_constant_nN_per_V", cal.force_constant)
        .meta("force_constant_err", cal.uncertainties.0)
        .meta("contact_offset_nm", cal.contact_offset)
        .meta("contact_offset_err", cal.uncertainties.1)
        .meta("mean_background_slope_pN_per_nm", bg_slope)
        .meta("mean_background_offset_pN", bg_offset)
        .meta("mean_sensitivity_nm_per_V", sensitivity);
    ctx.write("extract.txt", &summary.render("  "))?;

    let mut table = Table::new(&["d_nm", "separation_nm", "mean_pN", "std_pN"])
        .meta("runs", ens.n_runs)
        .meta("force_constant_nN_per_V", cal.force_constant)
        .meta("contact_offset_nm", cal.contact_offset);
    for i in 0..ens.distances.len() {
        table.rows.push(vec![
            ens.distances[i],
            ens.separations[i],
            ens.mean[i],
            ens.std[i],
        ]);
    }
    ctx.write("ensemble.txt", &table.render("  "))?;
    ctx.write(
        "hydro.txt",
        &grid_table(&report.hydro, "signal_V").render("  "),
    )?;

    for h in &ens.histograms {
        let m = &h.moments;
        let mut t = Table::new(&["force_pN", "count"])
            .meta("separation_nm", h.separation)
            .meta("bin_width_pN", h.width)
            .meta("samples", m.n)
            .meta("mean_pN", m.mean)
            .meta("std_pN", m.std)
            .meta("skewness", m.skewness)
            .meta("excess_kurtosis", m.excess_kurtosis);
        t.rows = h
            .bin_centers()
            .zip(&h.counts)
            .map(|(x, &n)| vec![x, n as f64])
            .collect();
        ctx.write(
            &format!("histogram_{}nm.txt", tag(h.separation)),
            &t.render("  "),
        )?;
    }
    Ok(())
}
