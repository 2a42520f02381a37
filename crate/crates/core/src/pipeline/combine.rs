//! Velocity combinations that separate the hydrodynamic force from the
//! velocity-independent force plus background.
//!
//! With F_total(d, v) = F₀(d) + F_hydro(d, v) + A·d + B and F_hydro linear
//! in v:
//!
//! * F_total(d, v₂) − F_total(d, v₁) = F_hydro(d, v₂ − v₁)
//! * 2·F_total(d, v₁) − F_total(d, 2v₁) = F₀(d) + A·d + B

use super::{GridSeries, PipelineError, ResampledTrace, Result};

/// A combined detector signal (V) on the common grid of its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSeries {
    pub grid: GridSeries,
    /// Effective velocity of the combination, nm/s (0 for the static part).
    pub velocity: f64,
}

fn combine(
    a: &ResampledTrace,
    wa: f64,
    b: &ResampledTrace,
    wb: f64,
    velocity: f64,
) -> Result<CombinedSeries> {
    let (lo, hi) = GridSeries::overlap(&[&a.grid, &b.grid])?;
    let ga = a.grid.slice(lo, hi);
    let gb = b.grid.slice(lo, hi);
    let values = ga
        .values
        .iter()
        .zip(&gb.values)
        .map(|(x, y)| wa * x + wb * y)
        .collect();
    Ok(CombinedSeries {
        grid: GridSeries {
            step: ga.step,
            first_index: lo,
            values,
        },
        velocity,
    })
}

/// Signal at v₂ minus signal at v₁: the pure hydrodynamic signal at v₂ − v₁.
pub fn combine_hydro(
    trace_v2: &ResampledTrace,
    trace_v1: &ResampledTrace,
) -> Result<CombinedSeries> {
    combine(
        trace_v2,
        1.0,
        trace_v1,
        -1.0,
        trace_v2.velocity - trace_v1.velocity,
    )
}

/// Twice the signal at v₁ minus the signal at 2v₁: the velocity-independent
/// force plus background. The velocities must be in ratio 2 within 1%.
pub fn combine_static(
    trace_v1: &ResampledTrace,
    trace_2v1: &ResampledTrace,
) -> Result<CombinedSeries> {
    let ratio = trace_2v1.velocity / trace_v1.velocity;
    if !(ratio.is_finite() && (ratio - 2.0).abs() <= 0.02) {
        return Err(PipelineError::VelocityRatio { ratio });
    }
    combine(trace_v1, 2.0, trace_2v1, -1.0, 0.0)
}
