//! Hydrodynamic calibration: fit V·𝒞 = −6πηvR²/(x + d₀) to the combined
//! hydrodynamic signal, where x is the bending-compensated piezo axis.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use super::{GridSeries, PipelineError, Result};
use crate::fitting::{levenberg_marquardt, FitError, LmOptions};

/// 0.1 to 1.5 μm, in nm.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (100.0, 1500.0);

/// pN per (nN/V · V).
const PN_PER_NN: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    /// 𝒞, nN/V
    pub force_constant: f64,
    /// d₀, nm
    pub contact_offset: f64,
    /// nm, on the compensated piezo axis
    pub fit_range: (f64, f64),
    /// pN
    pub residual_rms: f64,
    /// One-sigma uncertainties of (𝒞 nN/V, d₀ nm), widened for correlation
    /// between neighbouring grid points.
    pub uncertainties: (f64, f64),
    /// (x nm, residual pN) for every fitted point.
    pub residuals: Vec<(f64, f64)>,
    pub iterations: usize,
}

impl CalibrationFit {
    /// Converts a detector signal in V to a force in pN.
    pub fn force_pn(&self, signal: f64) -> f64 {
        signal * self.force_constant * PN_PER_NN
    }
}

/// Fits (𝒞, d₀) to `hydro_signal` (V against compensated x in nm) produced
/// at velocity `velocity` (m/s), using points with x in `fit_range` (nm).
pub fn fit_hydro_calibration(
    hydro_signal: &GridSeries,
    viscosity: f64,
    radius: f64,
    velocity: f64,
    fit_range: (f64, f64),
) -> Result<CalibrationFit> {
    let (lo, hi) = fit_range;
    if !(viscosity > 0.0 && radius > 0.0 && velocity.is_finite() && velocity != 0.0) {
        return Err(PipelineError::InvalidInput(format!(
            "need positive viscosity and radius and a nonzero velocity, got {viscosity}, {radius}, {velocity}"
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = hydro_signal
        .iter()
        .filter(|&(x, _)| x >= lo && x <= hi)
        .unzip();
    let data_lo = hydro_signal.x(0);
    let data_hi = hydro_signal.x(hydro_signal.len().saturating_sub(1));
    if !(lo > 0.0 && hi > lo) || x.len() < 10 || lo < data_lo || hi > data_hi {
        return Err(PipelineError::RangeOutsideData {
            lo,
            hi,
            data_lo,
            data_hi,
        });
    }
    static WARNED: AtomicBool = AtomicBool::new(false);
    if hi > radius * 1e9 / 20.0 && !WARNED.swap(true, Ordering::Relaxed) {
        log::warn!(
            "calibration range extends to {hi} nm, beyond R/20 = {:.0} nm where the lubrication form is approximate",
            radius * 1e9 / 20.0
        );
    }

    // −6πηvR² in pN·nm
    let k = -6.0 * PI * viscosity * velocity * radius * radius * 1e21;
    // Far half of the range with d₀ = 0: V ≈ (k/(1000 𝒞)) / x, linear in 1/𝒞.
    let half = x.len() / 2;
    let (num, den) = x[half..]
        .iter()
        .zip(&y[half..])
        .fold((0.0, 0.0), |(n, d), (&xi, &yi)| {
            let g = k / (PN_PER_NN * xi);
            (n + g * yi, d + g * g)
        });
    let c0 = den / num;
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(PipelineError::FitFailed {
            message: format!("far-field signal gives no positive initial force constant ({c0})"),
            steps: Vec::new(),
        });
    }
    let model = |xi: f64, p: &[f64], grad: &mut [f64]| {
        let sep = xi + p[1];
        if sep <= 0.0 {
            grad[0] = 0.0;
            grad[1] = 0.0;
            return f64::NAN;
        }
        let v = k / (PN_PER_NN * p[0] * sep);
        grad[0] = -v / p[0];
        grad[1] = -v / sep;
        v
    };
    let res = levenberg_marquardt(&x, &y, &[c0, 0.0], model, &LmOptions::default()).map_err(
        |e| match e {
            FitError::NotConverged { steps, .. } => PipelineError::FitFailed {
                message: "Levenberg-Marquardt did not converge".into(),
                steps,
            },
            other => PipelineError::FitFailed {
                message: other.to_string(),
                steps: Vec::new(),
            },
        },
    )?;
    let (c, d0) = (res.params[0], res.params[1]);
    if !(c > 0.0) {
        return Err(PipelineError::FitFailed {
            message: format!("non-positive force constant {c}"),
            steps: res.steps,
        });
    }
    if d0 < 0.0 {
        return Err(PipelineError::NegativeOffset { d0 });
    }
    let residuals: Vec<(f64, f64)> = x
        .iter()
        .zip(&res.residuals)
        .map(|(&xi, &r)| (xi, r * c * PN_PER_NN))
        .collect();
    let residual_rms =
        (residuals.iter().map(|r| r.1 * r.1).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(CalibrationFit {
        force_constant: c,
        contact_offset: d0,
        fit_range,
        residual_rms,
        uncertainties: {
            let f = correlation_inflation(&res.residuals);
            (f * res.stderr(0), f * res.stderr(1))
        },
        residuals,
        iterations: res.iterations,
    })
}

/// Maximum lag used when summing residual autocorrelations.
const MAX_LAG: usize = 20;

/// √(1 + 2Σρ_k) from the residual autocorrelation ρ_k, summed over positive
/// lags until the first non-positive ρ. Never below 1.
fn correlation_inflation(residuals: &[f64]) -> f64 {
    let n = residuals.len();
    if n < 4 {
        return 1.0;
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let c0: f64 = residuals.iter().map(|r| (r - mean).powi(2)).sum();
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..MAX_LAG.min(n / 4) {
        let ck: f64 = residuals
            .windows(k + 1)
            .map(|w| (w[0] - mean) * (w[k] - mean))
            .sum();
        let rho = ck / c0;
        if rho <= 0.0 {
            break;
        }
        sum += rho;
    }
    (1.0 + 2.0 * sum).sqrt()
}

/// Outcome of one fit in a range-sensitivity study.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeResult {
    pub range: (f64, f64),
    pub fit: std::result::Result<CalibrationFit, PipelineError>,
}

/// Repeats the calibration over several fit ranges.
pub fn range_sensitivity(
    hydro_signal: &GridSeries,
    viscosity: f64,
    radius: f64,
    velocity: f64,
    ranges: &[(f64, f64)],
) -> Vec<RangeResult> {
    ranges
        .iter()
        .map(|&range| RangeResult {
            range,
            fit: fit_hydro_calibration(hydro_signal, viscosity, radius, velocity, range),
        })
        .collect()
}
