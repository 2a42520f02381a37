//! Cantilever-bending compensation and resampling onto a uniform grid.

use std::collections::BTreeMap;

use super::{AlignedTrace, PipelineError, Result};

/// Aligned trace whose displacement axis includes the cantilever bending,
/// x = d_piezo + S·V̄, where V̄ is the signal averaged over a short window.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedTrace {
    /// Compensated axis, nm.
    pub position: Vec<f64>,
    /// Aligned piezo axis before compensation, nm.
    pub piezo: Vec<f64>,
    /// V
    pub signal: Vec<f64>,
    /// nm/s
    pub velocity: f64,
    /// nm/V
    pub sensitivity: f64,
    /// Samples with aligned piezo position at or below this are in contact.
    pub contact_end: f64,
    pub label: String,
}

/// Half-width of the signal average used for the bending correction, nm.
pub const DEFAULT_COMPENSATION_WINDOW: f64 = 1.0;

/// Adds d_cantilever = S·V̄ to every piezo sample. V̄ is the mean signal of
/// the samples within ±`half_window` nm of piezo travel on the same side of
/// the contact boundary; with a window of zero the raw signal is used.
///
/// Using the raw signal would put the detector noise on the position axis
/// as well, correlated with the signal noise, and resampling then turns that
/// correlation into an offset of the resampled signal.
pub fn compensate_bending(aligned: &AlignedTrace, half_window: f64) -> CompensatedTrace {
    let s = aligned.sensitivity;
    let t = &aligned.trace;
    let (piezo, signal) = (t.piezo(), t.signal());
    let n = piezo.len();
    let span = (piezo[0] - piezo[n - 1]).abs();
    let h = if n > 1 && span > 0.0 && half_window > 0.0 {
        (half_window * (n - 1) as f64 / span).round() as usize
    } else {
        0
    };
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in signal {
        prefix.push(prefix.last().unwrap() + v);
    }
    let contact = |i: usize| piezo[i] <= aligned.contact_end;
    let position = (0..n)
        .map(|i| {
            let (mut lo, mut hi) = (i.saturating_sub(h), (i + h + 1).min(n));
            while lo < i && contact(lo) != contact(i) {
                lo += 1;
            }
            while hi > i + 1 && contact(hi - 1) != contact(i) {
                hi -= 1;
            }
            piezo[i] + s * (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    CompensatedTrace {
        position,
        piezo: piezo.to_vec(),
        signal: signal.to_vec(),
        velocity: t.velocity(),
        sensitivity: s,
        contact_end: aligned.contact_end,
        label: t.label.clone(),
    }
}

/// Values on the uniform grid x_i = (first_index + i)·step.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSeries {
    pub step: f64,
    pub first_index: i64,
    pub values: Vec<f64>,
}

impl GridSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        (self.first_index + i as i64) as f64 * self.step
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.values.len() as i64 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.x(i), v))
    }

    pub fn value_at_index(&self, index: i64) -> Option<f64> {
        let off = index - self.first_index;
        if off < 0 {
            return None;
        }
        self.values.get(off as usize).copied()
    }

    /// Common index range `[lo, hi]` of several grids with identical steps.
    pub fn overlap(grids: &[&GridSeries]) -> Result<(i64, i64)> {
        let first = grids
            .first()
            .ok_or_else(|| PipelineError::IncompatibleGrids("no grids given".into()))?;
        if grids.iter().any(|g| g.step != first.step) {
            return Err(PipelineError::IncompatibleGrids("grid steps differ".into()));
        }
        let lo = grids.iter().map(|g| g.first_index).max().unwrap_or(0);
        let hi = grids.iter().map(|g| g.last_index()).min().unwrap_or(-1);
        if grids.iter().any(|g| g.is_empty()) || lo > hi {
            return Err(PipelineError::IncompatibleGrids(
                "grids do not overlap".into(),
            ));
        }
        Ok((lo, hi))
    }

    /// Restriction to indices `[lo, hi]`, which must lie inside the grid.
    pub fn slice(&self, lo: i64, hi: i64) -> GridSeries {
        let a = (lo - self.first_index) as usize;
        let b = (hi - self.first_index) as usize;
        GridSeries {
            step: self.step,
            first_index: lo,
            values: self.values[a..=b].to_vec(),
        }
    }
}

/// A compensated trace interpolated onto a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledTrace {
    /// Detector signal in V on the compensated axis.
    pub grid: GridSeries,
    /// nm/s
    pub velocity: f64,
    /// nm/V
    pub sensitivity: f64,
    pub label: String,
}

/// Resamples the non-contact samples onto the grid of spacing `step` (nm).
/// Samples are first averaged within each grid cell (mean position and mean
/// signal), then the cell means are linearly interpolated onto the grid
/// points. Averaging position and signal together keeps the noise that the
/// compensated axis inherits from the signal from biasing the result.
pub fn resample(trace: &CompensatedTrace, step: f64) -> Result<ResampledTrace> {
    if !(step.is_finite() && step > 0.0) {
        return Err(PipelineError::InvalidInput(format!(
            "grid step {step} must be positive"
        )));
    }
    let mut cells: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for ((&x, &v), &p) in trace.position.iter().zip(&trace.signal).zip(&trace.piezo) {
        if p <= trace.contact_end {
            continue;
        }
        let c = cells
            .entry((x / step).round() as i64)
            .or_insert((0.0, 0.0, 0));
        c.0 += x;
        c.1 += v;
        c.2 += 1;
    }
    let xs: Vec<f64> = cells.values().map(|c| c.0 / c.2 as f64).collect();
    let vs: Vec<f64> = cells.values().map(|c| c.1 / c.2 as f64).collect();
    if xs.len() < 2 {
        return Err(PipelineError::InvalidTrace(
            "fewer than 2 samples outside the contact region".into(),
        ));
    }
    let first = (xs[0] / step).ceil() as i64;
    let last = (xs[xs.len() - 1] / step).floor() as i64;
    if last < first {
        return Err(PipelineError::InvalidTrace(
            "samples span less than one grid step".into(),
        ));
    }
    let mut values = Vec::with_capacity((last - first + 1) as usize);
    let mut j = 0;
    for idx in first..=last {
        let x = idx as f64 * step;
        while j + 2 < xs.len() && xs[j + 1] < x {
            j += 1;
        }
        let (x0, x1) = (xs[j], xs[j + 1]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        values.push(vs[j] + t * (vs[j + 1] - vs[j]));
    }
    Ok(ResampledTrace {
        grid: GridSeries {
            step,
            first_index: first,
            values,
        },
        velocity: trace.velocity,
        sensitivity: trace.sensitivity,
        label: trace.label.clone(),
    })
}
