//! Sphere-plate Casimir-Lifshitz force in the proximity form
//!
//! F(d) = k_B T R Σ'_m ∫ k [ln(1 − r₁ᵀᴱr₂ᵀᴱ e^{−2k₃d}) + ln(1 − r₁ᵀᴹr₂ᵀᴹ e^{−2k₃d})] dk
//!
//! with the m = 0 term at half weight, optional ionic screening of that term,
//! and roughness averaging over displacement histograms. Negative forces are
//! attractive.
//!
//! The k-integral is taken in u = 2k₃d, where k dk = u du / (4d²) and the
//! integrand decays like e^{−u}; the range is cut at u = 60.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::constants::{C_LIGHT, K_B};
use crate::dielectric::{matsubara_spacing, DielectricError, DielectricModel, StaticResponse};
use crate::fitting::{linear_fit, FitError};
use crate::quadrature::{integrate_adaptive, QuadratureError, QuadratureOptions};

/// Upper cutoff of the u integration.
pub const U_MAX: f64 = 60.0;

pub const DEFAULT_TEMPERATURE: f64 = 294.15;
pub const DEFAULT_RADIUS: f64 = 19.9e-6;

/// Passed as a permittivity to [`fresnel_te`]/[`fresnel_tm`] to request the
/// ideal-metal limit ε → ∞.
pub const IDEAL_METAL: f64 = f64::INFINITY;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LifshitzError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("reflection amplitude is indeterminate at k = 0, xi = 0")]
    Indeterminate,
    #[error(transparent)]
    Dielectric(#[from] DielectricError),
    #[error("k-integral failed at d = {d:e} m, m = {m}: {source}")]
    Quadrature {
        d: f64,
        m: usize,
        source: QuadratureError,
    },
    #[error(
        "Matsubara sum not converged at d = {d:e} m after {terms} terms (sum {sum:e} N, tail estimate {tail:e} N)"
    )]
    NotConverged {
        d: f64,
        terms: usize,
        sum: f64,
        tail: f64,
    },
    #[error(
        "roughness shift leaves a non-positive separation {separation:e} m (sphere bin {sphere_bin}, plate bin {plate_bin})"
    )]
    RoughnessDomain {
        sphere_bin: usize,
        plate_bin: usize,
        separation: f64,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
}

type Result<T> = std::result::Result<T, LifshitzError>;

/// Sphere, plate and intervening medium, plus temperature and sphere radius.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSystem {
    pub sphere: DielectricModel,
    pub plate: DielectricModel,
    pub medium: DielectricModel,
    /// K
    pub temperature: f64,
    /// m
    pub radius: f64,
}

impl LayerSystem {
    pub fn new(
        sphere: DielectricModel,
        plate: DielectricModel,
        medium: DielectricModel,
        temperature: f64,
        radius: f64,
    ) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(LifshitzError::InvalidInput(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(LifshitzError::InvalidInput(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        if medium.is_metal() {
            return Err(LifshitzError::InvalidInput(
                "the intervening medium cannot be a metal".into(),
            ));
        }
        Ok(Self {
            sphere,
            plate,
            medium,
            temperature,
            radius,
        })
    }

    /// Gold sphere and plate in ethanol at 294.15 K, R = 19.9 μm.
    pub fn gold_ethanol() -> Self {
        Self::new(
            DielectricModel::gold(),
            DielectricModel::gold(),
            DielectricModel::ethanol(),
            DEFAULT_TEMPERATURE,
            DEFAULT_RADIUS,
        )
        .expect("default system is valid")
    }

    pub fn matsubara_spacing(&self) -> f64 {
        matsubara_spacing(self.temperature)
    }
}

/// Ionic screening of the zero-frequency term, κ = 1/λ_D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaltScreening {
    kappa: f64,
}

impl SaltScreening {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(LifshitzError::InvalidInput(format!(
                "inverse Debye length must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Self { kappa })
    }

    /// An infinite Debye length means no screening.
    pub fn from_debye_length(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(LifshitzError::InvalidInput(format!(
                "Debye length must be positive, got {lambda}"
            )));
        }
        Self::new(1.0 / lambda)
    }

    pub fn none() -> Self {
        Self { kappa: 0.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessBin {
    pub fraction: f64,
    /// m
    pub displacement: f64,
}

/// Fraction of the surface area at each height displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessDistribution {
    bins: Vec<RoughnessBin>,
}

impl RoughnessDistribution {
    pub fn new(bins: Vec<RoughnessBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(LifshitzError::InvalidInput(
                "roughness distribution is empty".into(),
            ));
        }
        for (i, b) in bins.iter().enumerate() {
            if !(b.fraction.is_finite() && b.fraction >= 0.0 && b.displacement.is_finite()) {
                return Err(LifshitzError::InvalidInput(format!(
                    "roughness bin {i} is invalid: {b:?}"
                )));
            }
        }
        let total: f64 = bins.iter().map(|b| b.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(LifshitzError::InvalidInput(format!(
                "roughness fractions sum to {total}, expected 1"
            )));
        }
        Ok(Self { bins })
    }

    /// Normalizes raw `(displacement, count)` pairs, e.g. pixel counts.
    pub fn from_counts(counts: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = counts.iter().map(|c| c.1).sum();
        if !(total.is_finite() && total > 0.0) || counts.iter().any(|c| c.1 < 0.0) {
            return Err(LifshitzError::InvalidInput(
                "roughness counts must be non-negative with a positive total".into(),
            ));
        }
        Self::new(
            counts
                .iter()
                .map(|&(displacement, n)| RoughnessBin {
                    fraction: n / total,
                    displacement,
                })
                .collect(),
        )
    }

    pub fn smooth() -> Self {
        Self {
            bins: vec![RoughnessBin {
                fraction: 1.0,
                displacement: 0.0,
            }],
        }
    }

    pub fn bins(&self) -> &[RoughnessBin] {
        &self.bins
    }

    pub fn max_displacement(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| b.displacement)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Force against separation, both SI.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceCurve {
    points: Vec<(f64, f64)>,
    pub metadata: Vec<(String, String)>,
}

impl ForceCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.0.is_finite() && p.0 > 0.0 && p.1.is_finite()) {
                return Err(LifshitzError::InvalidInput(format!(
                    "curve point {i} is invalid: {p:?}"
                )));
            }
            if i > 0 && p.0 <= points[i - 1].0 {
                return Err(LifshitzError::InvalidInput(
                    "curve separations must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            points,
            metadata: Vec::new(),
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn separations(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn forces(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }
}

/// `n` geometrically spaced separations from `d_min` to `d_max` inclusive.
pub fn geometric_grid(d_min: f64, d_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(d_min > 0.0 && d_max > d_min && d_max.is_finite()) || n < 2 {
        return Err(LifshitzError::InvalidInput(format!(
            "bad grid: {d_min} to {d_max} with {n} points"
        )));
    }
    let ratio = (d_max / d_min).ln();
    let mut grid: Vec<f64> = (0..n)
        .map(|i| d_min * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = d_min;
    grid[n - 1] = d_max;
    Ok(grid)
}

/// 20 to 100 nm, 81 points.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(20e-9, 100e-9, 81).expect("default grid is valid")
}

fn check_fresnel_args(k: f64, xi: f64, eps_i: f64, eps_3: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0 && xi.is_finite() && xi >= 0.0) {
        return Err(LifshitzError::InvalidInput(format!(
            "wavevector {k} and frequency {xi} must be finite and >= 0"
        )));
    }
    if k == 0.0 && xi == 0.0 {
        return Err(LifshitzError::Indeterminate);
    }
    if !(eps_i >= 1.0 && eps_3.is_finite() && eps_3 >= 1.0) {
        return Err(LifshitzError::InvalidInput(format!(
            "permittivities must be >= 1, got {eps_i} and {eps_3}"
        )));
    }
    Ok(())
}

/// TE reflection amplitude (k_i − k₃)/(k_i + k₃), k_j² = k² + ε_j ξ²/c².
///
/// `eps_i = IDEAL_METAL` gives +1 for ξ > 0 and 0 at ξ = 0.
pub fn fresnel_te(k: f64, xi: f64, eps_i: f64, eps_3: f64) -> Result<f64> {
    check_fresnel_args(k, xi, eps_i, eps_3)?;
    if eps_i.is_infinite() {
        return Ok(if xi > 0.0 { 1.0 } else { 0.0 });
    }
    let w2 = (xi / C_LIGHT).powi(2);
    let k3 = (k * k + eps_3 * w2).sqrt();
    let ki = (k * k + eps_i * w2).sqrt();
    // (k_i − k₃)(k_i + k₃) = (ε_i − ε₃) ξ²/c²
    Ok((eps_i - eps_3) * w2 / ((ki + k3) * (ki + k3)))
}

/// TM reflection amplitude (k_i ε₃ − k₃ ε_i)/(k_i ε₃ + k₃ ε_i).
///
/// `eps_i = IDEAL_METAL` gives −1.
pub fn fresnel_tm(k: f64, xi: f64, eps_i: f64, eps_3: f64) -> Result<f64> {
    check_fresnel_args(k, xi, eps_i, eps_3)?;
    if eps_i.is_infinite() {
        return Ok(-1.0);
    }
    let w2 = (xi / C_LIGHT).powi(2);
    let k3 = (k * k + eps_3 * w2).sqrt();
    let ki = (k * k + eps_i * w2).sqrt();
    Ok((ki * eps_3 - k3 * eps_i) / (ki * eps_3 + k3 * eps_i))
}

/// How many Matsubara terms to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatsubaraCutoff {
    /// Stop once the geometric tail estimate drops below `tail_tol` of the
    /// partial sum, but never before m = ceil(10 c / (2 d ξ₁)).
    Auto,
    /// Sum m = 0..=m_max.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceOptions {
    pub cutoff: MatsubaraCutoff,
    pub quadrature: QuadratureOptions,
    pub tail_tol: f64,
    /// Hard cap on the number of terms under [`MatsubaraCutoff::Auto`].
    pub max_terms: usize,
}

impl Default for ForceOptions {
    fn default() -> Self {
        Self {
            cutoff: MatsubaraCutoff::Auto,
            quadrature: QuadratureOptions::default(),
            tail_tol: 1e-8,
            max_terms: 1_000_000,
        }
    }
}

/// Force decomposition at one separation, N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceBreakdown {
    pub total: f64,
    /// Half-weighted m = 0 term.
    pub zero_frequency: f64,
    /// Σ over m ≥ 1.
    pub nonzero_frequencies: f64,
    /// Highest Matsubara index included.
    pub m_max: usize,
}

/// Permittivities (sphere, plate, medium) at one Matsubara frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
struct EpsTriplet {
    sphere: f64,
    plate: f64,
    medium: f64,
}

const BREAKPOINTS: [f64; 3] = [1.0, 4.0, 12.0];
const BLOCK: usize = 64;

/// Evaluates the force for one layer system, caching the permittivities at
/// the Matsubara frequencies that a set of separations will need.
#[derive(Debug, Clone)]
pub struct LifshitzSolver {
    sys: LayerSystem,
    opts: ForceOptions,
    xi1: f64,
    spectrum: Vec<EpsTriplet>,
}

impl LifshitzSolver {
    pub fn new(sys: LayerSystem, opts: ForceOptions) -> Self {
        let xi1 = sys.matsubara_spacing();
        Self {
            sys,
            opts,
            xi1,
            spectrum: Vec::new(),
        }
    }

    /// Like [`LifshitzSolver::new`], with permittivities precomputed for every
    /// term the smallest separation `d_min` is expected to need.
    pub fn with_cache_for(sys: LayerSystem, opts: ForceOptions, d_min: f64) -> Result<Self> {
        let mut solver = Self::new(sys, opts);
        let n = match opts.cutoff {
            MatsubaraCutoff::Fixed(m) => m,
            MatsubaraCutoff::Auto => solver.expected_terms(d_min),
        };
        solver.spectrum = (1..=n)
            .into_par_iter()
            .map(|m| solver.compute_eps(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(solver)
    }

    pub fn system(&self) -> &LayerSystem {
        &self.sys
    }

    pub fn options(&self) -> &ForceOptions {
        &self.opts
    }

    fn expected_terms(&self, d: f64) -> usize {
        if !(d > 0.0) {
            return 0;
        }
        let scale = C_LIGHT / (2.0 * d * self.xi1);
        ((30.0 * scale).ceil() as usize).clamp(1, 200_000)
    }

    fn floor_terms(&self, d: f64) -> usize {
        ((10.0 * C_LIGHT / (2.0 * d * self.xi1)).ceil() as usize).max(1)
    }

    fn compute_eps(&self, m: usize) -> Result<EpsTriplet> {
        let xi = m as f64 * self.xi1;
        Ok(EpsTriplet {
            sphere: self.sys.sphere.eval(xi)?,
            plate: self.sys.plate.eval(xi)?,
            medium: self.sys.medium.eval(xi)?,
        })
    }

    fn eps(&self, m: usize) -> Result<EpsTriplet> {
        match self.spectrum.get(m.wrapping_sub(1)) {
            Some(e) => Ok(*e),
            None => self.compute_eps(m),
        }
    }

    fn prefactor(&self, d: f64) -> f64 {
        K_B * self.sys.temperature * self.sys.radius / (4.0 * d * d)
    }

    /// The m-th Matsubara term (m ≥ 1) at full weight, N.
    pub fn matsubara_term(&self, d: f64, m: usize) -> Result<f64> {
        check_separation(d)?;
        if m == 0 {
            return Ok(2.0 * self.zero_frequency_term(d)?);
        }
        let eps = self.eps(m)?;
        let xi = m as f64 * self.xi1;
        let u_min = 2.0 * d * eps.medium.sqrt() * xi / C_LIGHT;
        if u_min >= U_MAX {
            return Ok(0.0);
        }
        let scale = (2.0 * d * xi / C_LIGHT).powi(2);
        let a1 = (eps.sphere - eps.medium) * scale;
        let a2 = (eps.plate - eps.medium) * scale;
        let e3 = eps.medium;
        let (e1, e2) = (eps.sphere, eps.plate);
        let integrand = |u: f64| {
            let k1 = (u * u + a1).sqrt();
            let k2 = (u * u + a2).sqrt();
            let te = (a1 / ((k1 + u) * (k1 + u))) * (a2 / ((k2 + u) * (k2 + u)));
            let tm = ((k1 * e3 - u * e1) / (k1 * e3 + u * e1))
                * ((k2 * e3 - u * e2) / (k2 * e3 + u * e2));
            let decay = (-u).exp();
            u * ((-te * decay).ln_1p() + (-tm * decay).ln_1p())
        };
        let breaks = BREAKPOINTS.map(|b| u_min + b);
        let res = integrate_adaptive(integrand, u_min, U_MAX, &breaks, &self.opts.quadrature)
            .map_err(|source| LifshitzError::Quadrature { d, m, source })?;
        Ok(self.prefactor(d) * res.value)
    }

    /// Static TM amplitude (ε₃ − ε_i)/(ε₃ + ε_i); −1 for metals.
    fn static_tm(&self, model: &DielectricModel, eps3: f64) -> f64 {
        match model.static_response() {
            StaticResponse::Metallic => -1.0,
            StaticResponse::Finite(e) => (eps3 - e) / (eps3 + e),
        }
    }

    fn static_medium(&self) -> Result<f64> {
        match self.sys.medium.static_response() {
            StaticResponse::Finite(e) => Ok(e),
            StaticResponse::Metallic => Err(LifshitzError::InvalidInput(
                "the intervening medium cannot be a metal".into(),
            )),
        }
    }

    /// The half-weighted m = 0 term of the Matsubara sum, N.
    ///
    /// At ξ = 0 the TE amplitudes vanish (for metals by the Drude limit) and
    /// k_i = k₃ = k, so only the static TM amplitudes survive.
    pub fn zero_frequency_term(&self, d: f64) -> Result<f64> {
        check_separation(d)?;
        let e3 = self.static_medium()?;
        let r = self.static_tm(&self.sys.sphere, e3) * self.static_tm(&self.sys.plate, e3);
        if r == 0.0 {
            return Ok(0.0);
        }
        let integrand = |u: f64| u * (-r * (-u).exp()).ln_1p();
        let res = integrate_adaptive(integrand, 0.0, U_MAX, &BREAKPOINTS, &self.opts.quadrature)
            .map_err(|source| LifshitzError::Quadrature { d, m: 0, source })?;
        Ok(0.5 * self.prefactor(d) * res.value)
    }

    /// Zero-frequency term with ionic screening, half weight included, N.
    ///
    /// Integrates in u = 2d√(k² + κ²) over [2dκ, 60].
    pub fn zero_frequency_screened(&self, d: f64, salt: SaltScreening) -> Result<f64> {
        check_separation(d)?;
        let e3 = self.static_medium()?;
        let kappa = salt.kappa;
        let u_lo = 2.0 * d * kappa;
        if u_lo >= U_MAX {
            return Ok(0.0);
        }
        let e1 = self.sys.sphere.static_response();
        let e2 = self.sys.plate.static_response();
        let delta = |eps: StaticResponse, k: f64, q: f64| match eps {
            StaticResponse::Metallic => 1.0,
            StaticResponse::Finite(e) => (e * k - e3 * q) / (e * k + e3 * q),
        };
        let kd = 2.0 * d * kappa;
        let integrand = |u: f64| {
            // 2dk and 2dq, with q = √(k² + κ²)
            let q = u;
            let k = ((u - kd) * (u + kd)).max(0.0).sqrt();
            let r = delta(e1, k, q) * delta(e2, k, q);
            u * (-r * (-u).exp()).ln_1p()
        };
        let breaks = BREAKPOINTS.map(|b| u_lo + b);
        let res = integrate_adaptive(integrand, u_lo, U_MAX, &breaks, &self.opts.quadrature)
            .map_err(|source| LifshitzError::Quadrature { d, m: 0, source })?;
        Ok(0.5 * self.prefactor(d) * res.value)
    }

    /// Σ_{m≥1} under the configured cutoff; returns (sum, last m).
    fn nonzero_sum(&self, d: f64, zero: f64) -> Result<(f64, usize)> {
        let terms = |lo: usize, hi: usize| -> Result<Vec<f64>> {
            (lo..=hi)
                .into_par_iter()
                .map(|m| self.matsubara_term(d, m))
                .collect()
        };
        match self.opts.cutoff {
            MatsubaraCutoff::Fixed(m_max) => {
                if m_max == 0 {
                    return Ok((0.0, 0));
                }
                let sum = terms(1, m_max)?.iter().sum();
                Ok((sum, m_max))
            }
            MatsubaraCutoff::Auto => {
                let floor = self.floor_terms(d);
                let mut sum = 0.0;
                let mut prev = f64::NAN;
                let mut m = 1;
                let mut batch_end = floor;
                loop {
                    for t in terms(m, batch_end)? {
                        sum += t;
                        if m >= floor {
                            if t == 0.0 {
                                return Ok((sum, m));
                            }
                            let q = t / prev;
                            if q > 0.0 && q < 1.0 {
                                let tail = t.abs() * q / (1.0 - q);
                                if tail < self.opts.tail_tol * (sum + zero).abs() {
                                    return Ok((sum, m));
                                }
                            }
                        }
                        prev = t;
                        m += 1;
                    }
                    if m > self.opts.max_terms {
                        return Err(LifshitzError::NotConverged {
                            d,
                            terms: m - 1,
                            sum: sum + zero,
                            tail: prev.abs(),
                        });
                    }
                    batch_end = (m + BLOCK.max(m / 8) - 1).min(self.opts.max_terms);
                }
            }
        }
    }

    pub fn force_breakdown(&self, d: f64) -> Result<ForceBreakdown> {
        check_separation(d)?;
        let zero = self.zero_frequency_term(d)?;
        let (nonzero, m_max) = self.nonzero_sum(d, zero)?;
        Ok(ForceBreakdown {
            total: zero + nonzero,
            zero_frequency: zero,
            nonzero_frequencies: nonzero,
            m_max,
        })
    }

    /// Sphere-plate force, N (negative = attractive).
    pub fn force(&self, d: f64) -> Result<f64> {
        Ok(self.force_breakdown(d)?.total)
    }

    /// Force with the m = 0 term replaced by its screened form, N.
    pub fn force_with_salt(&self, d: f64, salt: SaltScreening) -> Result<f64> {
        let zero = self.zero_frequency_term(d)?;
        let (nonzero, _) = self.nonzero_sum(d, zero)?;
        if salt.kappa == 0.0 {
            return Ok(nonzero + zero);
        }
        Ok(nonzero + self.zero_frequency_screened(d, salt)?)
    }

    /// Forces on a grid of separations, evaluated in parallel.
    pub fn curve(&self, separations: &[f64], salt: Option<SaltScreening>) -> Result<ForceCurve> {
        let forces = separations
            .par_iter()
            .map(|&d| match salt {
                Some(s) => self.force_with_salt(d, s),
                None => self.force(d),
            })
            .collect::<Result<Vec<f64>>>()?;
        let curve = ForceCurve::new(separations.iter().copied().zip(forces).collect())?;
        Ok(curve
            .with_metadata("temperature_K", self.sys.temperature)
            .with_metadata("radius_m", self.sys.radius)
            .with_metadata("kappa_per_m", salt.map_or(0.0, |s| s.kappa)))
    }

    /// Roughness-averaged forces on a grid. Each distinct shifted separation
    /// is evaluated once.
    pub fn rough_curve(
        &self,
        separations: &[f64],
        salt: Option<SaltScreening>,
        sphere: &RoughnessDistribution,
        plate: &RoughnessDistribution,
    ) -> Result<ForceCurve> {
        let pairs = roughness_pairs(sphere, plate);
        for &d in separations {
            check_roughness_domain(sphere, plate, d)?;
        }
        let mut needed: Vec<f64> = separations
            .iter()
            .flat_map(|&d| pairs.iter().map(move |p| d - p.0))
            .collect();
        needed.sort_by(f64::total_cmp);
        needed.dedup();
        let forces = needed
            .par_iter()
            .map(|&s| match salt {
                Some(k) => self.force_with_salt(s, k),
                None => self.force(s),
            })
            .collect::<Result<Vec<f64>>>()?;
        let lookup = |s: f64| {
            let i = needed
                .binary_search_by(|x| x.total_cmp(&s))
                .expect("every shifted separation was evaluated");
            forces[i]
        };
        let points = separations
            .iter()
            .map(|&d| {
                (
                    d,
                    pairs.iter().map(|&(shift, w)| w * lookup(d - shift)).sum(),
                )
            })
            .collect();
        Ok(ForceCurve::new(points)?
            .with_metadata("temperature_K", self.sys.temperature)
            .with_metadata("radius_m", self.sys.radius)
            .with_metadata("kappa_per_m", salt.map_or(0.0, |s| s.kappa))
            .with_metadata("roughness", "on"))
    }
}

fn check_separation(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(LifshitzError::InvalidInput(format!(
            "separation must be positive, got {d}"
        )))
    }
}

/// Sphere-plate force at one separation, N.
pub fn force_sphere_plate(sys: &LayerSystem, d: f64, cutoff: MatsubaraCutoff) -> Result<f64> {
    let opts = ForceOptions {
        cutoff,
        ..ForceOptions::default()
    };
    LifshitzSolver::with_cache_for(sys.clone(), opts, d)?.force(d)
}

/// Half-weighted, salt-screened zero-frequency term, N.
pub fn zero_freq_screened(sys: &LayerSystem, d: f64, salt: SaltScreening) -> Result<f64> {
    LifshitzSolver::new(sys.clone(), ForceOptions::default()).zero_frequency_screened(d, salt)
}

/// Force with the zero-frequency term replaced by its screened form, N.
pub fn force_with_salt(
    sys: &LayerSystem,
    d: f64,
    salt: SaltScreening,
    cutoff: MatsubaraCutoff,
) -> Result<f64> {
    let opts = ForceOptions {
        cutoff,
        ..ForceOptions::default()
    };
    LifshitzSolver::with_cache_for(sys.clone(), opts, d)?.force_with_salt(d, salt)
}

/// Combined shifts δ_i + δ_j with summed weights, in increasing shift order.
/// Shifts equal to within a femtometre are merged.
pub fn roughness_pairs(
    sphere: &RoughnessDistribution,
    plate: &RoughnessDistribution,
) -> Vec<(f64, f64)> {
    let mut merged: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for a in &sphere.bins {
        for b in &plate.bins {
            let shift = a.displacement + b.displacement;
            let w = a.fraction * b.fraction;
            let entry = merged
                .entry((shift * 1e15).round() as i64)
                .or_insert((shift, 0.0));
            entry.1 += w;
        }
    }
    merged.into_values().filter(|p| p.1 > 0.0).collect()
}

fn check_roughness_domain(
    sphere: &RoughnessDistribution,
    plate: &RoughnessDistribution,
    d: f64,
) -> Result<()> {
    for (i, a) in sphere.bins.iter().enumerate() {
        for (j, b) in plate.bins.iter().enumerate() {
            let s = d - (a.displacement + b.displacement);
            if !(s > 0.0) {
                return Err(LifshitzError::RoughnessDomain {
                    sphere_bin: i,
                    plate_bin: j,
                    separation: s,
                });
            }
        }
    }
    Ok(())
}

/// Σ_{i,j} σ_i σ_j F(d − (δ_i + δ_j)).
pub fn roughness_correct<F>(
    base_force: F,
    sphere: &RoughnessDistribution,
    plate: &RoughnessDistribution,
    d: f64,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    check_roughness_domain(sphere, plate, d)?;
    roughness_pairs(sphere, plate)
        .into_iter()
        .map(|(shift, w)| Ok(w * base_force(d - shift)?))
        .sum()
}

/// Least-squares slope of ln|F| against ln d over [d_min, d_max].
pub fn power_law_exponent(curve: &ForceCurve, d_min: f64, d_max: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .copied()
        .filter(|p| p.0 >= d_min && p.0 <= d_max)
        .collect();
    if pts.len() < 5 {
        return Err(LifshitzError::InvalidInput(format!(
            "need at least 5 points in range, got {}",
            pts.len()
        )));
    }
    let positive = pts[0].1 > 0.0;
    if pts.iter().any(|p| p.1 == 0.0 || (p.1 > 0.0) != positive) {
        return Err(LifshitzError::InvalidInput(
            "force changes sign or vanishes in the fit range".into(),
        ));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.abs().ln()).collect();
    Ok(linear_fit(&x, &y)?.slope)
}
