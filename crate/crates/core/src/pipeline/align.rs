//! Contact-point detection and drift alignment.
//!
//! The contact line is the steepest linear segment near the close end of the
//! trace. Sliding-window line fits over the closest 20% of samples find the
//! steepest (most negative) slope; windows whose slope is within tolerance of
//! it are accepted, and the longest contiguous run of accepted windows is
//! refit as the contact line. Its V = 0 crossing defines the zero of the
//! piezo axis.

use super::{AlignedTrace, DeflectionTrace, PipelineError, Result};
use crate::fitting::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignOptions {
    /// Fraction of samples, from the closest end, searched for the contact line.
    pub terminal_fraction: f64,
    /// Samples per sliding window.
    pub window: usize,
    /// Relative slope tolerance against the steepest window.
    pub slope_tolerance: f64,
    /// Noise band in multiples of the far-field RMS.
    pub noise_band: f64,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            terminal_fraction: 0.2,
            window: 40,
            slope_tolerance: 0.05,
            noise_band: 3.0,
        }
    }
}

/// Running sums for O(1) window line fits.
struct Prefix {
    x: Vec<f64>,
    y: Vec<f64>,
    xx: Vec<f64>,
    xy: Vec<f64>,
}

impl Prefix {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut p = Self {
            x: vec![0.0; n + 1],
            y: vec![0.0; n + 1],
            xx: vec![0.0; n + 1],
            xy: vec![0.0; n + 1],
        };
        for i in 0..n {
            p.x[i + 1] = p.x[i] + x[i];
            p.y[i + 1] = p.y[i] + y[i];
            p.xx[i + 1] = p.xx[i] + x[i] * x[i];
            p.xy[i + 1] = p.xy[i] + x[i] * y[i];
        }
        p
    }

    /// Slope and Σ(x − x̄)² over samples [a, b).
    fn slope(&self, a: usize, b: usize) -> (f64, f64) {
        let n = (b - a) as f64;
        let sx = self.x[b] - self.x[a];
        let sy = self.y[b] - self.y[a];
        let sxx = self.xx[b] - self.xx[a] - sx * sx / n;
        let sxy = self.xy[b] - self.xy[a] - sx * sy / n;
        (sxy / sxx, sxx)
    }
}

/// Shifts the piezo axis so that the contact line crosses V = 0 at zero and
/// records the deflection sensitivity S = 1/|contact slope|.
pub fn align_contact_zero(trace: &DeflectionTrace, opts: &AlignOptions) -> Result<AlignedTrace> {
    let n = trace.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| trace.piezo()[a].total_cmp(&trace.piezo()[b]));
    let x: Vec<f64> = order.iter().map(|&i| trace.piezo()[i]).collect();
    let y: Vec<f64> = order.iter().map(|&i| trace.signal()[i]).collect();

    let tail = ((opts.terminal_fraction * n as f64).round() as usize).clamp(1, n);
    let far = linear_fit(&x[n - tail..], &y[n - tail..])
        .map_err(|e| PipelineError::NoContact(format!("far-field fit failed: {e}")))?;
    let sigma_far = far.residual_rms;

    let w = opts.window.clamp(5, (tail / 3).max(5));
    if tail < w + 1 {
        return Err(PipelineError::NoContact(format!(
            "terminal segment of {tail} samples is shorter than the {w}-sample window"
        )));
    }
    // Centered sums keep the window fits well conditioned.
    let x0 = x[tail / 2];
    let xc: Vec<f64> = x[..tail].iter().map(|v| v - x0).collect();
    let prefix = Prefix::new(&xc, &y[..tail]);
    let windows: Vec<(f64, f64)> = (0..=tail - w).map(|a| prefix.slope(a, a + w)).collect();
    let (steep, steep_sxx) = windows
        .iter()
        .copied()
        .filter(|s| s.0.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| PipelineError::NoContact("no finite window slope".into()))?;
    let noise_slope = |sxx: f64| sigma_far / sxx.sqrt();
    if !(steep < 0.0) || steep.abs() <= 10.0 * far.slope.abs() + 5.0 * noise_slope(steep_sxx) {
        return Err(PipelineError::NoContact(format!(
            "steepest window slope {steep:e} V/nm is not clearly steeper than the far field \
             (slope {:e} V/nm, noise {sigma_far:e} V)",
            far.slope
        )));
    }

    // Both slopes carry noise, hence the √2.
    let accepted = |s: (f64, f64)| {
        let tol = opts.slope_tolerance * steep.abs()
            + opts.noise_band * std::f64::consts::SQRT_2 * noise_slope(s.1);
        (s.0 - steep).abs() <= tol
    };
    // Longest run of accepted windows, bridging gaps of up to a quarter
    // window caused by noise.
    let gap = w / 4;
    let mut best = (0, 0);
    let mut current: Option<(usize, usize)> = None;
    for (i, &s) in windows.iter().enumerate() {
        if !accepted(s) {
            continue;
        }
        current = match current {
            Some((a, last)) if i - last - 1 <= gap => Some((a, i)),
            Some((a, last)) => {
                if last + 1 - a > best.1 - best.0 {
                    best = (a, last + 1);
                }
                Some((i, i))
            }
            None => Some((i, i)),
        };
    }
    if let Some((a, last)) = current {
        if last + 1 - a > best.1 - best.0 {
            best = (a, last + 1);
        }
    }
    let (lo, mut hi) = (best.0, best.1 - 1 + w);
    let fit = |hi: usize| {
        linear_fit(&x[lo..hi], &y[lo..hi])
            .map_err(|e| PipelineError::NoContact(format!("contact-line fit failed: {e}")))
    };
    let mut line = fit(hi)?;
    // Windows straddling the end of contact pass the slope test; drop the
    // off-line samples they drag in, at most one window's worth.
    let scale = y[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let band = opts.noise_band * sigma_far + 1e-9 * scale;
    let min_hi = (hi - w).max(lo + w);
    loop {
        let mut h = hi;
        while h > min_hi && (y[h - 1] - line.eval(x[h - 1])).abs() > band {
            h -= 1;
        }
        if h == hi {
            break;
        }
        hi = h;
        line = fit(hi)?;
    }
    if !(line.slope < 0.0) {
        return Err(PipelineError::NoContact(format!(
            "refit contact slope {:e} V/nm is not negative",
            line.slope
        )));
    }
    let zero = -line.intercept / line.slope;
    let (seg_lo, seg_hi) = (x[lo], x[hi - 1]);
    // Repulsive forces push the cantilever into contact before the zero
    // crossing, so the crossing may lie beyond the contact samples.
    let reach = 2.0 * (seg_hi - seg_lo) + opts.noise_band * sigma_far / line.slope.abs();
    if !(zero >= seg_lo - reach && zero <= seg_hi + reach) {
        return Err(PipelineError::NoContact(format!(
            "contact line [{seg_lo:.2}, {seg_hi:.2}] nm crosses zero at {zero:.2} nm, too far away"
        )));
    }
    Ok(AlignedTrace {
        trace: trace.shifted(zero),
        shift: zero,
        sensitivity: 1.0 / line.slope.abs(),
        contact_slope: line.slope,
        contact_end: seg_hi - zero,
        far_noise_rms: sigma_far,
    })
}
