//! Linear background removal. Far from the surface the velocity-independent
//! force vanishes, so a line fitted there is the background A·d + B.

use super::{ForceSeries, PipelineError, Result};
use crate::fitting::linear_fit;

/// 1.0 to 2.5 μm, in nm.
pub const DEFAULT_FAR_RANGE: (f64, f64) = (1000.0, 2500.0);

const MIN_FAR_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundFit {
    /// A, pN/nm
    pub slope: f64,
    /// B, pN
    pub offset: f64,
    /// Residual RMS of the far-range fit, pN.
    pub residual_rms: f64,
}

/// Fits a line to the points with separation in `far_range` (nm) and
/// subtracts it everywhere.
pub fn subtract_linear_background(
    series: &ForceSeries,
    far_range: (f64, f64),
) -> Result<(ForceSeries, BackgroundFit)> {
    let (lo, hi) = far_range;
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .points
        .iter()
        .copied()
        .filter(|p| p.0 >= lo && p.0 <= hi)
        .unzip();
    if x.len() < MIN_FAR_SAMPLES || !(hi > lo) {
        let data_lo = series.points.first().map_or(f64::NAN, |p| p.0);
        let data_hi = series.points.last().map_or(f64::NAN, |p| p.0);
        return Err(PipelineError::RangeOutsideData {
            lo,
            hi,
            data_lo,
            data_hi,
        });
    }
    let line = linear_fit(&x, &y).map_err(|e| PipelineError::InvalidInput(e.to_string()))?;
    let points = series
        .points
        .iter()
        .map(|&(d, f)| (d, f - line.eval(d)))
        .collect();
    Ok((
        ForceSeries { points },
        BackgroundFit {
            slope: line.slope,
            offset: line.intercept,
            residual_rms: line.residual_rms,
        },
    ))
}
