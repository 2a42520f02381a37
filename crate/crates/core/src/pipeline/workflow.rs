//! Glue for the per-trace and per-run processing chains.

use rayon::prelude::*;

use super::{
    align_contact_zero, average_ensemble, combine_hydro, combine_static, compensate_bending,
    fit_hydro_calibration, resample, subtract_linear_background, AlignOptions, AlignedTrace,
    BackgroundFit, CalibrationFit, DeflectionTrace, EnsembleAverage, ForceSeries, GridSeries,
    HistogramRequest, PipelineError, ResampledTrace, Result, RunEnsemble,
    DEFAULT_COMPENSATION_WINDOW, DEFAULT_FAR_RANGE, DEFAULT_FIT_RANGE,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepareOptions {
    pub align: AlignOptions,
    /// Resampling grid spacing, nm.
    pub grid_step: f64,
    /// Half-width of the signal average used for bending compensation, nm.
    pub compensation_window: f64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            align: AlignOptions::default(),
            grid_step: 0.5,
            compensation_window: DEFAULT_COMPENSATION_WINDOW,
        }
    }
}

/// Align, compensate and resample one trace.
pub fn prepare_trace(
    trace: &DeflectionTrace,
    opts: &PrepareOptions,
) -> Result<(AlignedTrace, ResampledTrace)> {
    let aligned = align_contact_zero(trace, &opts.align)?;
    let resampled = resample(
        &compensate_bending(&aligned, opts.compensation_window),
        opts.grid_step,
    )?;
    Ok((aligned, resampled))
}

/// Pointwise mean of several grids over their common range.
pub fn average_grids(grids: &[GridSeries]) -> Result<GridSeries> {
    let refs: Vec<&GridSeries> = grids.iter().collect();
    let (lo, hi) = GridSeries::overlap(&refs)?;
    let n = (hi - lo + 1) as usize;
    let mut values = vec![0.0; n];
    for g in grids {
        for (acc, v) in values.iter_mut().zip(&g.slice(lo, hi).values) {
            *acc += v;
        }
    }
    let count = grids.len() as f64;
    values.iter_mut().for_each(|v| *v /= count);
    Ok(GridSeries {
        step: grids[0].step,
        first_index: lo,
        values,
    })
}

/// Converts a signal on the compensated axis into force (pN) against
/// separation d = x + d₀ (nm).
pub fn signal_to_force(series: &GridSeries, calibration: &CalibrationFit) -> ForceSeries {
    ForceSeries {
        points: series
            .iter()
            .map(|(x, v)| (x + calibration.contact_offset, calibration.force_pn(v)))
            .collect(),
    }
}

/// Static force of one run: combine the v₁ and 2v₁ traces, convert with the
/// calibration, and remove the linear background fitted over `far_range`.
pub fn static_force(
    trace_v1: &ResampledTrace,
    trace_2v1: &ResampledTrace,
    calibration: &CalibrationFit,
    far_range: (f64, f64),
) -> Result<(ForceSeries, BackgroundFit)> {
    let combined = combine_static(trace_v1, trace_2v1)?;
    let force = signal_to_force(&combined.grid, calibration);
    if force.is_empty() {
        return Err(PipelineError::InvalidInput("empty static series".into()));
    }
    subtract_linear_background(&force, far_range)
}

/// One run of the velocity triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletTraces {
    pub v1: DeflectionTrace,
    pub v1_double: DeflectionTrace,
    pub v2: DeflectionTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub prepare: PrepareOptions,
    /// Pa·s
    pub viscosity: f64,
    /// m
    pub radius: f64,
    /// Calibration range on the compensated axis, nm.
    pub fit_range: (f64, f64),
    /// Background range in separation, nm.
    pub far_range: (f64, f64),
    pub histograms: Vec<HistogramRequest>,
    /// Use this calibration instead of fitting one.
    pub calibration: Option<CalibrationFit>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            prepare: PrepareOptions::default(),
            viscosity: 1.17e-3,
            radius: 19.9e-6,
            fit_range: DEFAULT_FIT_RANGE,
            far_range: DEFAULT_FAR_RANGE,
            histograms: Vec::new(),
            calibration: None,
        }
    }
}

/// Alignment outcome for one trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentSummary {
    /// nm
    pub shift: f64,
    /// nm/V
    pub sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    /// Run-averaged hydrodynamic signal (V) on the compensated axis.
    pub hydro: GridSeries,
    /// nm/s
    pub hydro_velocity: f64,
    pub calibration: CalibrationFit,
    /// Background-subtracted static force of each run.
    pub static_forces: Vec<ForceSeries>,
    pub backgrounds: Vec<BackgroundFit>,
    /// (v₁, 2v₁, v₂) per run.
    pub alignments: Vec<[AlignmentSummary; 3]>,
    pub ensemble: EnsembleAverage,
}

/// Full analysis of a velocity-triplet ensemble: align and resample every
/// trace, calibrate on the run-averaged hydrodynamic combination, extract
/// each run's static force and average on the 1 nm grid.
pub fn analyze_runs(runs: &[TripletTraces], cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    if runs.len() < 2 {
        return Err(PipelineError::Ensemble(format!(
            "need at least 2 runs, got {}",
            runs.len()
        )));
    }
    let prepared: Vec<[(AlignedTrace, ResampledTrace); 3]> = runs
        .par_iter()
        .map(|r| {
            Ok([
                prepare_trace(&r.v1, &cfg.prepare)?,
                prepare_trace(&r.v1_double, &cfg.prepare)?,
                prepare_trace(&r.v2, &cfg.prepare)?,
            ])
        })
        .collect::<Result<_>>()?;

    let hydro_runs = prepared
        .iter()
        .map(|p| combine_hydro(&p[2].1, &p[0].1))
        .collect::<Result<Vec<_>>>()?;
    let hydro_velocity = hydro_runs[0].velocity;
    if hydro_runs
        .iter()
        .any(|h| (h.velocity - hydro_velocity).abs() > 1e-6 * hydro_velocity.abs())
    {
        return Err(PipelineError::InvalidInput(
            "runs use different velocity pairs".into(),
        ));
    }
    let grids: Vec<GridSeries> = hydro_runs.into_iter().map(|h| h.grid).collect();
    let hydro = average_grids(&grids)?;
    let calibration = match &cfg.calibration {
        Some(c) => c.clone(),
        None => fit_hydro_calibration(
            &hydro,
            cfg.viscosity,
            cfg.radius,
            hydro_velocity * 1e-9,
            cfg.fit_range,
        )?,
    };

    let (static_forces, backgrounds): (Vec<ForceSeries>, Vec<BackgroundFit>) = prepared
        .iter()
        .map(|p| static_force(&p[0].1, &p[1].1, &calibration, cfg.far_range))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let ensemble = average_ensemble(&RunEnsemble::from_runs(&static_forces)?, &cfg.histograms)?;
    let alignments = prepared
        .iter()
        .map(|p| {
            p.each_ref().map(|(a, _)| AlignmentSummary {
                shift: a.shift,
                sensitivity: a.sensitivity,
            })
        })
        .collect();
    Ok(AnalysisReport {
        hydro,
        hydro_velocity,
        calibration,
        static_forces,
        backgrounds,
        alignments,
        ensemble,
    })
}
