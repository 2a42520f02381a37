//! Dielectric permittivities evaluated on the imaginary frequency axis.
//!
//! Every model maps an imaginary frequency ξ (rad/s) to the real value
//! ε(iξ). Photon energies in eV are converted to rad/s once, when a model is
//! constructed; nothing downstream works in eV.
//!
//! Metals (Drude and tabulated-with-Drude-tail) diverge at ξ = 0. Those
//! models refuse ξ = 0 and report [`StaticResponse::Metallic`] instead; the
//! Lifshitz code takes the ε → ∞ limit explicitly.

use std::f64::consts::PI;

use thiserror::Error;

use crate::constants::{ev_to_rad_s, EPSILON_0, E_CHARGE, HBAR, K_B, N_A};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DielectricError {
    #[error("permittivity diverges at xi = {xi} rad/s for this model")]
    Divergent { xi: f64 },
    #[error("invalid frequency {xi} rad/s")]
    InvalidFrequency { xi: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

type Result<T> = std::result::Result<T, DielectricError>;

/// Tabulated absorption spectrum: Im ε at real photon frequencies.
///
/// Frequencies are stored in rad/s and are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalDataTable {
    omega: Vec<f64>,
    im_eps: Vec<f64>,
}

impl OpticalDataTable {
    /// Builds a table from `(photon_energy_eV, im_eps)` rows.
    pub fn from_ev_rows(rows: &[(f64, f64)]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(DielectricError::InvalidInput(format!(
                "optical table needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let mut omega = Vec::with_capacity(rows.len());
        let mut im_eps = Vec::with_capacity(rows.len());
        for (i, &(energy, im)) in rows.iter().enumerate() {
            if !(energy.is_finite() && energy > 0.0) {
                return Err(DielectricError::InvalidInput(format!(
                    "row {i}: photon energy {energy} must be finite and positive"
                )));
            }
            if !(im.is_finite() && im >= 0.0) {
                return Err(DielectricError::InvalidInput(format!(
                    "row {i}: Im eps {im} must be finite and non-negative"
                )));
            }
            if let Some(&prev) = omega.last() {
                if ev_to_rad_s(energy) <= prev {
                    return Err(DielectricError::InvalidInput(format!(
                        "row {i}: energies must be strictly increasing"
                    )));
                }
            }
            omega.push(ev_to_rad_s(energy));
            im_eps.push(im);
        }
        Ok(Self { omega, im_eps })
    }

    /// Parses the two-column `energy_eV  im_eps` text format. `#` starts a
    /// comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace().map(str::parse::<f64>);
            let parsed = match (cols.next(), cols.next(), cols.next()) {
                (Some(Ok(e)), Some(Ok(v)), None) => (e, v),
                _ => {
                    return Err(DielectricError::Parse {
                        line: n + 1,
                        message: format!("expected two numeric columns, got {line:?}"),
                    })
                }
            };
            rows.push(parsed);
        }
        Self::from_ev_rows(&rows)
    }

    /// Bundled gold absorption spectrum (0.125 to 9184 eV).
    pub fn gold() -> Self {
        Self::parse(include_str!("../data/gold_im_eps.txt")).expect("bundled gold table is valid")
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Tabulated frequencies, rad/s.
    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn im_eps(&self) -> &[f64] {
        &self.im_eps
    }

    pub fn min_frequency(&self) -> f64 {
        self.omega[0]
    }

    pub fn max_frequency(&self) -> f64 {
        self.omega[self.omega.len() - 1]
    }

    /// Linear interpolation of Im ε inside the table range.
    fn interpolate(&self, x: f64) -> f64 {
        let i = self
            .omega
            .partition_point(|&w| w <= x)
            .clamp(1, self.len() - 1);
        let (a, b) = (self.omega[i - 1], self.omega[i]);
        let (fa, fb) = (self.im_eps[i - 1], self.im_eps[i]);
        fa + (fb - fa) * (x - a) / (b - a)
    }
}

/// Drude free-electron parameters, stored in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    plasma_freq: f64,
    damping: f64,
}

impl DrudeParams {
    pub fn new(plasma_freq: f64, damping: f64) -> Result<Self> {
        if !(plasma_freq.is_finite() && plasma_freq > 0.0 && damping.is_finite() && damping > 0.0) {
            return Err(DielectricError::InvalidInput(format!(
                "Drude parameters must be positive, got plasma {plasma_freq}, damping {damping}"
            )));
        }
        Ok(Self {
            plasma_freq,
            damping,
        })
    }

    pub fn from_ev(plasma_ev: f64, damping_ev: f64) -> Result<Self> {
        Self::new(ev_to_rad_s(plasma_ev), ev_to_rad_s(damping_ev))
    }

    /// ω_p = 7.50 eV, γ = 0.061 eV.
    pub fn gold() -> Self {
        Self::from_ev(7.50, 0.061).expect("gold Drude parameters are valid")
    }

    pub fn plasma_freq(&self) -> f64 {
        self.plasma_freq
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Im ε(ω) of the Drude model on the real axis.
    pub fn im_eps_real_axis(&self, omega: f64) -> f64 {
        let wp2 = self.plasma_freq * self.plasma_freq;
        wp2 * self.damping / (omega * (omega * omega + self.damping * self.damping))
    }
}

/// ε(iξ) = 1 + ω_p² / (ξ(ξ + γ)).
pub fn eps_drude(xi: f64, params: &DrudeParams) -> Result<f64> {
    check_positive_frequency(xi)?;
    let wp = params.plasma_freq;
    Ok(1.0 + wp * wp / (xi * (xi + params.damping)))
}

/// Two-oscillator (infrared + ultraviolet) model for a polar liquid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorModel {
    pub c_ir: f64,
    pub c_uv: f64,
    /// rad/s
    pub omega_ir: f64,
    /// rad/s
    pub omega_uv: f64,
}

impl OscillatorModel {
    pub fn new(c_ir: f64, c_uv: f64, omega_ir: f64, omega_uv: f64) -> Result<Self> {
        let all = [c_ir, c_uv, omega_ir, omega_uv];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DielectricError::InvalidInput(format!(
                "oscillator parameters must be positive, got {all:?}"
            )));
        }
        Ok(Self {
            c_ir,
            c_uv,
            omega_ir,
            omega_uv,
        })
    }

    /// Ethanol: C_IR = 23.84, C_UV = 0.852, ω_IR = 6.60×10¹⁴ rad/s,
    /// ω_UV = 1.14×10¹⁶ rad/s.
    pub fn ethanol() -> Self {
        Self::new(23.84, 0.852, 6.60e14, 1.14e16).expect("ethanol parameters are valid")
    }
}

/// ε(iξ) = 1 + C_IR/(1 + (ξ/ω_IR)²) + C_UV/(1 + (ξ/ω_UV)²). Total for ξ ≥ 0.
pub fn eps_oscillator(xi: f64, model: &OscillatorModel) -> f64 {
    let ir = xi / model.omega_ir;
    let uv = xi / model.omega_uv;
    1.0 + model.c_ir / (1.0 + ir * ir) + model.c_uv / (1.0 + uv * uv)
}

/// One dissolved ionic species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    /// mol/m³
    pub concentration: f64,
    pub charge_number: f64,
    /// kg
    pub mass: f64,
}

impl IonSpecies {
    /// Free-ion plasma frequency ω² = n z² e² / (ε₀ m). This treats the ions
    /// as an unscreened free-carrier gas, a first-order approximation.
    pub fn plasma_freq(&self) -> f64 {
        let n = self.concentration * N_A;
        let q = self.charge_number * E_CHARGE;
        (n * q * q / (EPSILON_0 * self.mass)).sqrt()
    }
}

pub const SODIUM_MASS_AMU: f64 = 22.989_769;
pub const IODINE_MASS_AMU: f64 = 126.904_47;

/// Plasma-term correction for dissolved ions: adds Σ ω²_ion / ξ².
#[derive(Debug, Clone, PartialEq)]
pub struct IonCorrection {
    plasma_freqs: Vec<f64>,
}

impl IonCorrection {
    pub fn from_plasma_frequencies(plasma_freqs: Vec<f64>) -> Result<Self> {
        if plasma_freqs.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(DielectricError::InvalidInput(
                "ionic plasma frequencies must be finite and non-negative".into(),
            ));
        }
        Ok(Self { plasma_freqs })
    }

    pub fn from_species(species: &[IonSpecies]) -> Result<Self> {
        for s in species {
            if !(s.concentration >= 0.0 && s.charge_number >= 1.0 && s.mass > 0.0) {
                return Err(DielectricError::InvalidInput(format!(
                    "invalid ion species {s:?}"
                )));
            }
        }
        Self::from_plasma_frequencies(species.iter().map(IonSpecies::plasma_freq).collect())
    }

    /// Fully dissociated NaI at `concentration` mol/m³.
    pub fn sodium_iodide(concentration: f64) -> Result<Self> {
        let amu = crate::constants::CODATA_2018.atomic_mass;
        Self::from_species(&[
            IonSpecies {
                concentration,
                charge_number: 1.0,
                mass: SODIUM_MASS_AMU * amu,
            },
            IonSpecies {
                concentration,
                charge_number: 1.0,
                mass: IODINE_MASS_AMU * amu,
            },
        ])
    }

    pub fn plasma_freqs(&self) -> &[f64] {
        &self.plasma_freqs
    }

    /// Σ ω²_ion, (rad/s)².
    pub fn plasma_freq_sq(&self) -> f64 {
        self.plasma_freqs.iter().map(|w| w * w).sum()
    }
}

/// Permittivity at ξ = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticResponse {
    Finite(f64),
    /// ε(iξ) → ∞ as ξ → 0.
    Metallic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DielectricModel {
    Constant(f64),
    Drude(DrudeParams),
    TabulatedWithDrudeTail {
        table: OpticalDataTable,
        drude: DrudeParams,
        /// rad/s
        crossover: f64,
    },
    Oscillator(OscillatorModel),
    WithIons {
        base: Box<DielectricModel>,
        ions: IonCorrection,
    },
}

/// Default crossover between the Drude extrapolation and tabulated data.
pub const DEFAULT_CROSSOVER_EV: f64 = 0.125;

impl DielectricModel {
    pub fn constant(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 1.0) {
            return Err(DielectricError::InvalidInput(format!(
                "constant permittivity must be finite and >= 1, got {eps}"
            )));
        }
        Ok(Self::Constant(eps))
    }

    pub fn vacuum() -> Self {
        Self::Constant(1.0)
    }

    pub fn tabulated(table: OpticalDataTable, drude: DrudeParams, crossover: f64) -> Result<Self> {
        if !(crossover.is_finite() && crossover > 0.0 && crossover <= table.max_frequency()) {
            return Err(DielectricError::InvalidInput(format!(
                "crossover {crossover} rad/s must lie below the table maximum {}",
                table.max_frequency()
            )));
        }
        Ok(Self::TabulatedWithDrudeTail {
            table,
            drude,
            crossover,
        })
    }

    /// Bundled gold spectrum with the Drude extrapolation below 0.125 eV.
    pub fn gold() -> Self {
        Self::tabulated(
            OpticalDataTable::gold(),
            DrudeParams::gold(),
            ev_to_rad_s(DEFAULT_CROSSOVER_EV),
        )
        .expect("bundled gold model is valid")
    }

    pub fn ethanol() -> Self {
        Self::Oscillator(OscillatorModel::ethanol())
    }

    pub fn with_ions(self, ions: IonCorrection) -> Self {
        Self::WithIons {
            base: Box::new(self),
            ions,
        }
    }

    pub fn is_metal(&self) -> bool {
        match self {
            Self::Drude(_) | Self::TabulatedWithDrudeTail { .. } => true,
            Self::Constant(_) | Self::Oscillator(_) => false,
            Self::WithIons { base, .. } => base.is_metal(),
        }
    }

    /// The ξ = 0 response. Ionic contributions at zero frequency are handled
    /// by screening, not here, so `WithIons` reports its base response.
    pub fn static_response(&self) -> StaticResponse {
        match self {
            Self::Constant(c) => StaticResponse::Finite(*c),
            Self::Oscillator(m) => StaticResponse::Finite(eps_oscillator(0.0, m)),
            Self::Drude(_) | Self::TabulatedWithDrudeTail { .. } => StaticResponse::Metallic,
            Self::WithIons { base, .. } => base.static_response(),
        }
    }

    /// ε(iξ). Models that diverge at ξ = 0 return [`DielectricError::Divergent`].
    pub fn eval(&self, xi: f64) -> Result<f64> {
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(DielectricError::InvalidFrequency { xi });
        }
        match self {
            Self::Constant(c) => Ok(*c),
            Self::Drude(p) => eps_drude(xi, p),
            Self::TabulatedWithDrudeTail {
                table,
                drude,
                crossover,
            } => eps_kramers_kronig(table, drude, *crossover, xi),
            Self::Oscillator(m) => Ok(eps_oscillator(xi, m)),
            Self::WithIons { base, ions } => eps_with_ions(xi, base, ions),
        }
    }
}

/// ε(iξ) = base(iξ) + Σ ω²_ion / ξ².
pub fn eps_with_ions(xi: f64, base: &DielectricModel, ions: &IonCorrection) -> Result<f64> {
    check_positive_frequency(xi)?;
    Ok(base.eval(xi)? + ions.plasma_freq_sq() / (xi * xi))
}

fn check_positive_frequency(xi: f64) -> Result<()> {
    if xi == 0.0 {
        Err(DielectricError::Divergent { xi })
    } else if !(xi.is_finite() && xi > 0.0) {
        Err(DielectricError::InvalidFrequency { xi })
    } else {
        Ok(())
    }
}

/// Kramers-Kronig transform to the imaginary axis:
/// ε(iξ) = 1 + (2/π) ∫₀^∞ x Im ε(x) / (x² + ξ²) dx,
/// with Im ε from the Drude model below `crossover` (rad/s), the table above
/// it, and an x⁻³ decay matched at the last tabulated point.
///
/// If the crossover lies below the table's first point the Drude spectrum
/// fills the gap.
pub fn eps_kramers_kronig(
    table: &OpticalDataTable,
    tail: &DrudeParams,
    crossover: f64,
    xi: f64,
) -> Result<f64> {
    check_positive_frequency(xi)?;
    if table.is_empty() {
        return Err(DielectricError::InvalidInput("empty optical table".into()));
    }
    let start = crossover.max(table.min_frequency());
    let drude = drude_kk_integral(tail, start, xi);
    let tabulated = table_kk_integral(table, start, xi);
    Ok(1.0 + 2.0 / PI * (drude + tabulated))
}

/// Kramers-Kronig transform of the table alone (Im ε = 0 below the first
/// tabulated point, x⁻³ closure above the last).
pub fn eps_kramers_kronig_table_only(table: &OpticalDataTable, xi: f64) -> Result<f64> {
    check_positive_frequency(xi)?;
    if table.is_empty() {
        return Err(DielectricError::InvalidInput("empty optical table".into()));
    }
    Ok(1.0 + 2.0 / PI * table_kk_integral(table, table.min_frequency(), xi))
}

/// ∫₀^{upper} x Im ε_Drude(x)/(x²+ξ²) dx = ω_p²γ ∫₀^{upper} dx / ((x²+γ²)(x²+ξ²)).
fn drude_kk_integral(p: &DrudeParams, upper: f64, xi: f64) -> f64 {
    let g = p.damping;
    let wp2 = p.plasma_freq * p.plasma_freq;
    // atan(upper/s)/s, whose divided difference in s² gives the integral
    let h = |s: f64| (upper / s).atan() / s;
    let rel = (xi - g).abs() / g;
    if rel < 1e-5 {
        // limit ξ → γ: -h'(s) / (2s)
        let s = 0.5 * (xi + g);
        let dh = -upper / (s * (s * s + upper * upper)) - (upper / s).atan() / (s * s);
        wp2 * g * (-dh) / (2.0 * s)
    } else {
        wp2 * g * (h(g) - h(xi)) / (xi * xi - g * g)
    }
}

/// t - atan(t), accurate for small t.
fn t_minus_atan(t: f64) -> f64 {
    if t < 0.1 {
        let t2 = t * t;
        let mut term = t * t2;
        let mut sum = 0.0;
        let mut sign = 1.0;
        let mut k = 3.0;
        while k < 40.0 {
            sum += sign * term / k;
            term *= t2;
            sign = -sign;
            k += 2.0;
        }
        sum
    } else {
        t - t.atan()
    }
}

/// ∫_a^b x² / (x² + ξ²) dx.
fn segment_quadratic_moment(a: f64, b: f64, xi: f64) -> f64 {
    if b / xi < 0.1 {
        xi * (t_minus_atan(b / xi) - t_minus_atan(a / xi))
    } else {
        (b - a) - xi * (xi * (b - a) / (xi * xi + a * b)).atan()
    }
}

/// ∫_a^b x / (x² + ξ²) dx.
fn segment_linear_moment(a: f64, b: f64, xi: f64) -> f64 {
    0.5 * ((b - a) * (b + a) / (a * a + xi * xi)).ln_1p()
}

/// Integral over one segment with Im ε linear between (a, fa) and (b, fb).
fn segment_kk(a: f64, b: f64, fa: f64, fb: f64, xi: f64) -> f64 {
    let slope = (fb - fa) / (b - a);
    let lin = segment_linear_moment(a, b, xi);
    let quad = segment_quadratic_moment(a, b, xi);
    // Im ε = fa + slope (x - a)
    fa * lin + slope * (quad - a * lin)
}

fn table_kk_integral(table: &OpticalDataTable, start: f64, xi: f64) -> f64 {
    let w = table.frequencies();
    let f = table.im_eps();
    let n = w.len();
    let mut sum = 0.0;
    if start < w[n - 1] {
        let first = w.partition_point(|&x| x <= start).max(1);
        let mut a = start.max(w[0]);
        let mut fa = table.interpolate(a);
        for i in first..n {
            let b = w[i];
            let fb = f[i];
            if b > a {
                sum += segment_kk(a, b, fa, fb, xi);
            }
            a = b;
            fa = fb;
        }
    }
    // x⁻³ closure: I_last ∫_{x_max}^∞ (x_max/x)³ x/(x²+ξ²) dx = I_last (t - atan t)/t³
    let t = xi / w[n - 1];
    let closure = if t < 0.1 {
        let t2 = t * t;
        1.0 / 3.0 - t2 / 5.0 + t2 * t2 / 7.0 - t2 * t2 * t2 / 9.0
    } else {
        t_minus_atan(t) / (t * t * t)
    };
    sum + f[n - 1] * closure
}

/// Matsubara frequencies ξ_m = m · 2π k_B T / ħ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsubaraGrid {
    temperature: f64,
    spacing: f64,
    m_max: usize,
}

impl MatsubaraGrid {
    pub fn new(temperature: f64, m_max: usize) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(DielectricError::InvalidInput(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if m_max < 1 {
            return Err(DielectricError::InvalidInput(
                "m_max must be at least 1".into(),
            ));
        }
        Ok(Self {
            temperature,
            spacing: matsubara_spacing(temperature),
            m_max,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// ξ₁, rad/s.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn frequency(&self, m: usize) -> f64 {
        m as f64 * self.spacing
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..=self.m_max).map(|m| self.frequency(m)).collect()
    }
}

pub fn matsubara_spacing(temperature: f64) -> f64 {
    2.0 * PI * K_B * temperature / HBAR
}

pub fn matsubara_grid(temperature: f64, m_max: usize) -> Result<MatsubaraGrid> {
    MatsubaraGrid::new(temperature, m_max)
}
