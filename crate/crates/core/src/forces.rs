//! Closed-form auxiliary forces and electrolyte utilities: sphere-plate
//! hydrodynamic drag, Debye-screened electrostatics, Debye length and the
//! conductivity power-law fit.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::constants::{EPSILON_0, E_CHARGE, K_B, N_A};
use crate::fitting::{linear_fit, FitError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ForceError {
    #[error("{name} must be positive, got {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

type Result<T> = std::result::Result<T, ForceError>;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ForceError::Domain { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProps {
    /// Pa·s
    pub viscosity: f64,
    pub static_dielectric: f64,
    /// K
    pub temperature: f64,
}

impl FluidProps {
    pub fn new(viscosity: f64, static_dielectric: f64, temperature: f64) -> Result<Self> {
        Ok(Self {
            viscosity: positive("viscosity", viscosity)?,
            static_dielectric: positive("static dielectric constant", static_dielectric)?,
            temperature: positive("temperature", temperature)?,
        })
    }

    /// η = 1.17 mPa·s, ε = 24.3, T = 294.15 K.
    pub fn ethanol() -> Self {
        Self {
            viscosity: 1.17e-3,
            static_dielectric: 24.3,
            temperature: 294.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrolyteSpec {
    /// mol/m³ (1 mM = 1 mol/m³)
    pub concentration: f64,
    pub charge_number: f64,
}

impl ElectrolyteSpec {
    pub fn new(concentration: f64, charge_number: f64) -> Result<Self> {
        if !(concentration.is_finite() && concentration >= 0.0) {
            return Err(ForceError::InvalidInput(format!(
                "concentration must be >= 0, got {concentration}"
            )));
        }
        if !(charge_number.is_finite() && charge_number >= 1.0) {
            return Err(ForceError::InvalidInput(format!(
                "charge number must be >= 1, got {charge_number}"
            )));
        }
        Ok(Self {
            concentration,
            charge_number,
        })
    }

    /// Symmetric 1:1 salt at `millimolar` mM.
    pub fn monovalent_mm(millimolar: f64) -> Result<Self> {
        Self::new(millimolar, 1.0)
    }
}

/// Hydrodynamic drag F = −6πηvR²/d in the lubrication limit R ≫ d.
///
/// Approach (v < 0) gives a positive (repulsive) force. Logs one warning per
/// process when d > R/20.
pub fn hydro_force(d: f64, v: f64, viscosity: f64, radius: f64) -> Result<f64> {
    positive("separation", d)?;
    positive("radius", radius)?;
    positive("viscosity", viscosity)?;
    static WARNED: AtomicBool = AtomicBool::new(false);
    if d > radius / 20.0 && !WARNED.swap(true, Ordering::Relaxed) {
        log::warn!(
            "hydrodynamic force evaluated at d = {d:e} m > R/20; the lubrication form assumes R >> d"
        );
    }
    Ok(-6.0 * PI * viscosity * v * radius * radius / d)
}

/// Screened sphere-plate electrostatic force −(πRεε₀V₀²/d)·e^{−d/λ_D}.
/// An infinite `debye_length` gives the unscreened force.
pub fn electrostatic_force(
    d: f64,
    v0: f64,
    radius: f64,
    static_dielectric: f64,
    debye_length: f64,
) -> Result<f64> {
    positive("separation", d)?;
    positive("radius", radius)?;
    positive("static dielectric constant", static_dielectric)?;
    if !(debye_length > 0.0) {
        return Err(ForceError::Domain {
            name: "Debye length",
            value: debye_length,
        });
    }
    let unscreened = -PI * radius * static_dielectric * EPSILON_0 * v0 * v0 / d;
    Ok(unscreened * (-d / debye_length).exp())
}

/// Debye screening length, or `Unscreened` for a salt-free fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScreeningLength {
    Finite(f64),
    Unscreened,
}

impl ScreeningLength {
    /// Length in m; `Unscreened` maps to infinity.
    pub fn meters(self) -> f64 {
        match self {
            Self::Finite(l) => l,
            Self::Unscreened => f64::INFINITY,
        }
    }

    /// κ = 1/λ_D in 1/m (0 when unscreened).
    pub fn inverse(self) -> f64 {
        match self {
            Self::Finite(l) => 1.0 / l,
            Self::Unscreened => 0.0,
        }
    }
}

/// λ_D = √(ε ε₀ k_B T / (2 N_A e² z² c)) for a symmetric z:z electrolyte.
pub fn debye_length(spec: &ElectrolyteSpec, fluid: &FluidProps) -> ScreeningLength {
    if spec.concentration == 0.0 {
        return ScreeningLength::Unscreened;
    }
    let z = spec.charge_number;
    let num = fluid.static_dielectric * EPSILON_0 * K_B * fluid.temperature;
    let den = 2.0 * N_A * E_CHARGE * E_CHARGE * z * z * spec.concentration;
    ScreeningLength::Finite((num / den).sqrt())
}

/// Normalized conductivity against molarity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivitySeries {
    points: Vec<(f64, f64)>,
}

impl ConductivitySeries {
    /// `(molarity mol/L, normalized conductivity)`, molarity strictly increasing.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(c, s)) in points.iter().enumerate() {
            positive("molarity", c)?;
            positive("conductivity", s)?;
            if i > 0 && c <= points[i - 1].0 {
                return Err(ForceError::InvalidInput(
                    "molarity must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// Least-squares line through (log₁₀ molarity, log₁₀ conductivity).
pub fn fit_conductivity_loglog(series: &ConductivitySeries) -> Result<PowerLawFit> {
    if series.points.len() < 3 {
        return Err(ForceError::InvalidInput(format!(
            "need at least 3 points, got {}",
            series.points.len()
        )));
    }
    let x: Vec<f64> = series.points.iter().map(|p| p.0.log10()).collect();
    let y: Vec<f64> = series.points.iter().map(|p| p.1.log10()).collect();
    let line = linear_fit(&x, &y)?;
    Ok(PowerLawFit {
        slope: line.slope,
        intercept: line.intercept,
        residual_rms: line.residual_rms,
    })
}
