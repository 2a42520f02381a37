//! Force-curve analysis: raw deflection traces in, calibrated
//! force-against-separation curves and ensemble statistics out.
//!
//! Distances are in nm, detector signals in V, forces in pN and velocities
//! in nm/s throughout this module.
//!
//! The processing order for one trace is [`align_contact_zero`] →
//! [`compensate_bending`] → [`resample`]; traces taken at different
//! velocities are then combined on their common grid.

mod align;
mod background;
mod calibrate;
mod combine;
mod ensemble;
mod resample;
mod workflow;

pub use align::{align_contact_zero, AlignOptions};
pub use background::{subtract_linear_background, BackgroundFit, DEFAULT_FAR_RANGE};
pub use calibrate::{
    fit_hydro_calibration, range_sensitivity, CalibrationFit, RangeResult, DEFAULT_FIT_RANGE,
};
pub use combine::{combine_hydro, combine_static, CombinedSeries};
pub use ensemble::{
    average_ensemble, moments, EnsembleAverage, Histogram, HistogramRequest, Moments, RunEnsemble,
};
pub use resample::{
    compensate_bending, resample, CompensatedTrace, GridSeries, ResampledTrace,
    DEFAULT_COMPENSATION_WINDOW,
};
pub use workflow::{
    analyze_runs, average_grids, prepare_trace, signal_to_force, static_force, AlignmentSummary,
    AnalysisConfig, AnalysisReport, PrepareOptions, TripletTraces,
};

use thiserror::Error;

use crate::fitting::LmStep;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PipelineError {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("no contact region found: {0}")]
    NoContact(String),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("velocity ratio {ratio} is not 2 within 1%")]
    VelocityRatio { ratio: f64 },
    #[error("range [{lo}, {hi}] nm is outside the data [{data_lo}, {data_hi}] nm or too sparse")]
    RangeOutsideData {
        lo: f64,
        hi: f64,
        data_lo: f64,
        data_hi: f64,
    },
    #[error("calibration fit failed: {message}")]
    FitFailed { message: String, steps: Vec<LmStep> },
    #[error("calibration produced a negative contact offset d0 = {d0} nm")]
    NegativeOffset { d0: f64 },
    #[error("ensemble error: {0}")]
    Ensemble(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Raw deflection data: piezo displacement against detector signal, in
/// acquisition order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionTrace {
    piezo: Vec<f64>,
    signal: Vec<f64>,
    velocity: f64,
    sample_rate: f64,
    pub label: String,
}

pub const MIN_SAMPLES: usize = 100;
/// Largest allowed mean sample spacing, nm (2 samples per nm).
pub const MAX_SPACING: f64 = 0.5;

impl DeflectionTrace {
    pub fn new(
        piezo: Vec<f64>,
        signal: Vec<f64>,
        velocity: f64,
        sample_rate: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = piezo.len();
        if n != signal.len() {
            return Err(PipelineError::InvalidTrace(format!(
                "{n} piezo samples but {} signal samples",
                signal.len()
            )));
        }
        if n < MIN_SAMPLES {
            return Err(PipelineError::InvalidTrace(format!(
                "need at least {MIN_SAMPLES} samples, got {n}"
            )));
        }
        if let Some(i) = (0..n).find(|&i| !(piezo[i].is_finite() && signal[i].is_finite())) {
            return Err(PipelineError::InvalidTrace(format!(
                "non-finite sample at index {i}"
            )));
        }
        if !(velocity.is_finite() && sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(PipelineError::InvalidTrace(format!(
                "bad velocity {velocity} or sample rate {sample_rate}"
            )));
        }
        let increasing = piezo.windows(2).all(|w| w[1] >= w[0]);
        let decreasing = piezo.windows(2).all(|w| w[1] <= w[0]);
        if !(increasing || decreasing) {
            return Err(PipelineError::InvalidTrace(
                "piezo displacement is not monotone".into(),
            ));
        }
        let spacing = (piezo[n - 1] - piezo[0]).abs() / (n - 1) as f64;
        if spacing > MAX_SPACING * (1.0 + 1e-9) {
            return Err(PipelineError::InvalidTrace(format!(
                "mean sample spacing {spacing} nm exceeds {MAX_SPACING} nm"
            )));
        }
        if spacing == 0.0 {
            return Err(PipelineError::InvalidTrace(
                "piezo displacement is constant".into(),
            ));
        }
        Ok(Self {
            piezo,
            signal,
            velocity,
            sample_rate,
            label: label.into(),
        })
    }

    /// nm
    pub fn piezo(&self) -> &[f64] {
        &self.piezo
    }

    /// V
    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    /// nm/s, negative on approach.
    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// Hz
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.piezo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.piezo.is_empty()
    }

    fn shifted(&self, shift: f64) -> Self {
        Self {
            piezo: self.piezo.iter().map(|x| x - shift).collect(),
            ..self.clone()
        }
    }
}

/// A trace whose piezo axis has been shifted so that the undeflected contact
/// point sits at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTrace {
    pub trace: DeflectionTrace,
    /// Amount subtracted from the raw piezo axis, nm.
    pub shift: f64,
    /// Deflection sensitivity 1/|contact slope|, nm/V.
    pub sensitivity: f64,
    /// Slope of the contact line, V/nm.
    pub contact_slope: f64,
    /// Largest aligned piezo position belonging to the contact line, nm.
    /// Samples at or below it are excluded downstream.
    pub contact_end: f64,
    /// RMS residual of a line fit to the far-field samples, V.
    pub far_noise_rms: f64,
}

impl AlignedTrace {
    /// Wraps a trace that is already aligned and whose sensitivity is known,
    /// e.g. a rigid-cantilever synthetic with no contact line.
    pub fn assume_aligned(trace: DeflectionTrace, sensitivity: f64) -> Self {
        let contact_end = trace.piezo.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
        Self {
            trace,
            shift: 0.0,
            sensitivity,
            contact_slope: f64::NEG_INFINITY,
            contact_end,
            far_noise_rms: 0.0,
        }
    }
}

/// Force against separation, ascending in separation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSeries {
    /// (nm, pN)
    pub points: Vec<(f64, f64)>,
}

impl ForceSeries {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
            return Err(PipelineError::InvalidInput(
                "non-finite force series point".into(),
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
