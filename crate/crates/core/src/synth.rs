//! Synthetic deflection traces from the forward model
//!
//! V_det = (F_total(d, v) + A·x + B)/𝒞 + noise,   d = x + d_cantilever + d₀,
//!
//! where x is the true piezo position, d_cantilever = F_total/k (Hooke's law)
//! is solved self-consistently per sample, and F_total includes the
//! hydrodynamic drag at the sphere's actual velocity. The piezo reading is
//! offset from x by the drift. Distances are in nm, forces in pN.
//!
//! Only approach traces (v < 0) are generated. Once the sphere touches the
//! plate (d = d₀) the trace continues as a contact line with
//! d_cantilever = −x.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifshitz::{geometric_grid, ForceOptions, LayerSystem, LifshitzError, LifshitzSolver};
use crate::pipeline::{DeflectionTrace, PipelineError, TripletTraces};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Lifshitz(#[from] LifshitzError),
    #[error(transparent)]
    Trace(#[from] PipelineError),
}

type Result<T> = std::result::Result<T, SynthError>;

/// Force table interpolated linearly in log|F| against log d, with power-law
/// extrapolation from the end segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedForce {
    /// nm
    pub separation: Vec<f64>,
    /// pN
    pub force: Vec<f64>,
}

impl TabulatedForce {
    pub fn new(separation: Vec<f64>, force: Vec<f64>) -> Result<Self> {
        let n = separation.len();
        if n < 2 || force.len() != n {
            return Err(SynthError::InvalidParams(
                "force table needs at least 2 matching rows".into(),
            ));
        }
        if separation.windows(2).any(|w| !(w[1] > w[0])) || !(separation[0] > 0.0) {
            return Err(SynthError::InvalidParams(
                "force table separations must be positive and increasing".into(),
            ));
        }
        let sign = force[0].signum();
        if force
            .iter()
            .any(|f| !(f.is_finite() && *f != 0.0 && f.signum() == sign))
        {
            return Err(SynthError::InvalidParams(
                "force table values must be nonzero with a single sign".into(),
            ));
        }
        Ok(Self { separation, force })
    }

    pub fn eval(&self, d: f64) -> f64 {
        let n = self.separation.len();
        let i = self.separation.partition_point(|&s| s <= d).clamp(1, n - 1);
        let (d0, d1) = (self.separation[i - 1], self.separation[i]);
        let (f0, f1) = (self.force[i - 1], self.force[i]);
        let p = (f1 / f0).ln() / (d1 / d0).ln();
        f0 * (d / d0).powf(p)
    }
}

/// Velocity-independent force F₀(d) used by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceModel {
    Zero,
    Tabulated(TabulatedForce),
    /// Screened sphere-plate electrostatics.
    Electrostatic {
        /// V
        v0: f64,
        static_dielectric: f64,
        /// nm
        debye_length: f64,
        /// m
        radius: f64,
    },
    Sum {
        terms: Vec<ForceModel>,
    },
}

impl ForceModel {
    /// pN at separation `d` nm.
    pub fn eval(&self, d: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Tabulated(t) => t.eval(d),
            Self::Electrostatic {
                v0,
                static_dielectric,
                debye_length,
                radius,
            } => {
                let eps0 = crate::constants::EPSILON_0;
                // πRεε₀V₀²/d with R and d in m, then to pN
                -PI * radius * static_dielectric * eps0 * v0 * v0 / (d * 1e-9)
                    * (-d / debye_length).exp()
                    * 1e12
            }
            Self::Sum { terms } => terms.iter().map(|t| t.eval(d)).sum(),
        }
    }
}

/// Tabulates the Lifshitz force of `sys` on a geometric grid (nm).
pub fn casimir_force_model(
    sys: &LayerSystem,
    d_min: f64,
    d_max: f64,
    points: usize,
) -> Result<ForceModel> {
    let grid = geometric_grid(d_min * 1e-9, d_max * 1e-9, points)?;
    let solver = LifshitzSolver::with_cache_for(sys.clone(), ForceOptions::default(), grid[0])?;
    let curve = solver.curve(&grid, None)?;
    let (d, f): (Vec<f64>, Vec<f64>) = curve
        .points()
        .iter()
        .map(|p| (p.0 * 1e9, p.1 * 1e12))
        .unzip();
    Ok(ForceModel::Tabulated(TabulatedForce::new(d, f)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineDrift {
    /// nm
    pub amplitude: f64,
    /// s
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub force_model: ForceModel,
    /// Pa·s
    pub viscosity: f64,
    /// m
    pub radius: f64,
    /// 𝒞, nN/V
    pub force_constant: f64,
    /// k, N/m; `None` is a rigid cantilever.
    pub spring_constant: Option<f64>,
    /// d₀, nm
    pub contact_offset: f64,
    /// A, pN/nm
    pub background_slope: f64,
    /// B, pN
    pub background_offset: f64,
    /// nm/s, negative on approach
    pub velocity: f64,
    /// pN
    pub noise_sigma: f64,
    /// Piezo reading minus true position, nm.
    pub drift_offset: f64,
    pub drift_sine: Option<SineDrift>,
    /// nm
    pub sample_spacing: f64,
    /// True piezo range (min, max), nm. Negative positions are in contact.
    pub range: (f64, f64),
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            force_model: ForceModel::Zero,
            viscosity: 1.17e-3,
            radius: 19.9e-6,
            force_constant: 14.5,
            spring_constant: Some(0.03),
            contact_offset: 12.0,
            background_slope: 0.0,
            background_offset: 0.0,
            velocity: -3600.0,
            noise_sigma: 110.0,
            drift_offset: 0.0,
            drift_sine: None,
            sample_spacing: 0.25,
            range: (-100.0, 3000.0),
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        if !(self.force_constant > 0.0 && self.radius > 0.0 && self.viscosity >= 0.0) {
            return bad("force constant and radius must be positive, viscosity >= 0".into());
        }
        if let Some(k) = self.spring_constant {
            if !(k.is_finite() && k > 0.0) {
                return bad(format!("spring constant must be positive, got {k}"));
            }
        } else if self.range.0 < 0.0 {
            return bad("a rigid cantilever cannot press into contact; use range min >= 0".into());
        }
        if !(self.sample_spacing > 0.0 && self.sample_spacing <= 0.5) {
            return bad(format!(
                "sample spacing must be in (0, 0.5] nm, got {}",
                self.sample_spacing
            ));
        }
        if !(self.velocity < 0.0 && self.velocity.is_finite()) {
            return bad(format!(
                "velocity must be negative (approach), got {}",
                self.velocity
            ));
        }
        if !(self.range.1 > self.range.0 && self.range.1 + self.contact_offset > 0.0) {
            return bad(format!("bad piezo range {:?}", self.range));
        }
        if !(self.contact_offset >= 0.0 && self.noise_sigma >= 0.0) {
            return bad("contact offset and noise must be >= 0".into());
        }
        let n = self.sample_count();
        if n < crate::pipeline::MIN_SAMPLES {
            return bad(format!("range yields only {n} samples"));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        ((self.range.1 - self.range.0) / self.sample_spacing).floor() as usize + 1
    }

    /// Hz
    pub fn sample_rate(&self) -> f64 {
        self.velocity.abs() / self.sample_spacing
    }

    /// −6πηR² in pN per (nm/s ÷ nm).
    fn hydro_coefficient(&self) -> f64 {
        -6.0 * PI * self.viscosity * self.radius * self.radius * 1e12
    }
}

/// Injected truth for one synthetic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub params: SynthParams,
    /// True piezo position of each sample, nm.
    pub piezo_true: Vec<f64>,
    /// True separation, nm.
    pub separation: Vec<f64>,
    /// Cantilever deflection, nm (positive away from the plate).
    pub deflection: Vec<f64>,
    /// Sphere velocity, nm/s.
    pub sphere_velocity: Vec<f64>,
    /// Force acting on the cantilever, pN.
    pub force: Vec<f64>,
    /// Index of the first sample in contact, if any.
    pub contact_index: Option<usize>,
    /// Set when the sphere jumped into contact because the force gradient
    /// exceeded the spring constant; holds the true piezo position.
    pub snap_in: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrace {
    pub trace: DeflectionTrace,
    pub truth: GroundTruth,
}

const FIXED_POINT_TOL: f64 = 1e-7;
const FIXED_POINT_MAX_ITER: usize = 400;

/// Solves the separation of one sample. `prev` is (d, x) of the previous
/// free sample; without it the sphere moves at the piezo velocity.
fn solve_sample(p: &SynthParams, kk: f64, x: f64, prev: Option<(f64, f64)>) -> Option<f64> {
    let h0 = p.hydro_coefficient() * p.velocity;
    let base = x + p.contact_offset;
    let mut d = prev.map_or(base, |(dp, xp)| dp + (x - xp));
    let mut last_step = 0.0;
    let mut damping = 1.0;
    for _ in 0..FIXED_POINT_MAX_ITER {
        if !(d > 0.0) {
            return None;
        }
        let f0 = p.force_model.eval(d);
        let h = h0 / d;
        let next = match prev {
            None => base + (f0 + h) / kk,
            Some((dp, xp)) => {
                let dx = x - xp;
                (base + (f0 - h * dp / dx) / kk) / (1.0 - h / (kk * dx))
            }
        };
        let step = next - d;
        if step * last_step < 0.0 {
            damping = 0.5;
        }
        d += damping * step;
        if step.abs() < FIXED_POINT_TOL {
            return Some(d);
        }
        last_step = step;
    }
    None
}

/// Generates one approach trace.
pub fn synth_trace(p: &SynthParams) -> Result<SynthTrace> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    synth_with_rng(p, &mut rng)
}

fn synth_with_rng(p: &SynthParams, rng: &mut ChaCha8Rng) -> Result<SynthTrace> {
    let n = p.sample_count();
    let c_pn = p.force_constant * 1e3;
    let noise = Normal::new(0.0, p.noise_sigma / c_pn)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let kk = p.spring_constant.map(|k| k * 1e3);
    let h0 = p.hydro_coefficient() * p.velocity;

    let mut truth = GroundTruth {
        params: p.clone(),
        piezo_true: Vec::with_capacity(n),
        separation: Vec::with_capacity(n),
        deflection: Vec::with_capacity(n),
        sphere_velocity: Vec::with_capacity(n),
        force: Vec::with_capacity(n),
        contact_index: None,
        snap_in: None,
    };
    let mut piezo = Vec::with_capacity(n);
    let mut signal = Vec::with_capacity(n);
    let mut prev: Option<(f64, f64)> = None;
    let mut in_contact = false;

    for i in 0..n {
        let x = p.range.1 - i as f64 * p.sample_spacing;
        let (d, force, speed) = match kk {
            None => {
                let d = x + p.contact_offset;
                (d, p.force_model.eval(d) + h0 / d, p.velocity)
            }
            Some(kk) => {
                let free = if in_contact {
                    None
                } else {
                    solve_sample(p, kk, x, prev)
                };
                match free {
                    Some(d) if d > p.contact_offset => {
                        let s = prev.map_or(1.0, |(dp, xp)| (d - dp) / (x - xp));
                        prev = Some((d, x));
                        (d, p.force_model.eval(d) + h0 * s / d, p.velocity * s)
                    }
                    other => {
                        if !in_contact {
                            in_contact = true;
                            truth.contact_index = Some(i);
                            if other.is_none() && x > 0.0 {
                                truth.snap_in = Some(x);
                            }
                        }
                        (p.contact_offset, -kk * x, 0.0)
                    }
                }
            }
        };
        let deflection = d - x - p.contact_offset;
        let background = p.background_slope * x + p.background_offset;
        let v: f64 = (force + background) / c_pn
            + if p.noise_sigma > 0.0 {
                noise.sample(rng)
            } else {
                0.0
            };
        let t = i as f64 * p.sample_spacing / p.velocity.abs();
        let drift = p.drift_offset
            + p.drift_sine
                .map_or(0.0, |s| s.amplitude * (2.0 * PI * t / s.period).sin());
        piezo.push(x + drift);
        signal.push(v);
        truth.piezo_true.push(x);
        truth.separation.push(d);
        truth.deflection.push(deflection);
        truth.sphere_velocity.push(speed);
        truth.force.push(force);
    }
    if truth.snap_in.is_some() {
        log::info!(
            "sphere snapped into contact at piezo {:.2} nm (spring constant too soft for the force gradient)",
            truth.snap_in.unwrap_or_default()
        );
    }
    let trace = DeflectionTrace::new(
        piezo,
        signal,
        p.velocity,
        p.sample_rate(),
        format!("v={} seed={}", p.velocity, p.seed),
    )?;
    Ok(SynthTrace { trace, truth })
}

/// Independent seed for the `index`-th trace of a generator seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trace_with_drift(p: &SynthParams, index: u64, drift: (f64, f64)) -> Result<SynthTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(p.seed, index));
    let z: f64 = StandardNormal.sample(&mut rng);
    let mut q = p.clone();
    q.drift_offset = p.drift_offset + drift.0 + drift.1 * z;
    q.seed = derive_seed(p.seed, index);
    q.validate()?;
    synth_with_rng(&q, &mut rng)
}

/// `n_runs` independent traces with drift offsets drawn from
/// N(`drift.0`, `drift.1`) nm on top of `p.drift_offset`.
pub fn synth_ensemble(
    p: &SynthParams,
    n_runs: usize,
    drift: (f64, f64),
) -> Result<Vec<SynthTrace>> {
    if n_runs == 0 {
        return Err(SynthError::InvalidParams(
            "n_runs must be at least 1".into(),
        ));
    }
    (0..n_runs)
        .into_par_iter()
        .map(|r| trace_with_drift(p, r as u64, drift))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionOrder {
    /// v₁, 2v₁, v₂, v₁, 2v₁, v₂, ...
    Alternating,
    /// All v₁ runs, then all 2v₁ runs, then all v₂ runs.
    Blocks,
}

/// Velocity triplet acquisition plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletPlan {
    /// nm/s (negative)
    pub v1: f64,
    /// nm/s (negative)
    pub v2: f64,
    pub n_runs: usize,
    /// Mean and standard deviation of the per-trace drift offset, nm.
    pub drift: (f64, f64),
    /// Additional drift per acquired trace, nm.
    pub drift_rate: f64,
    pub order: AcquisitionOrder,
}

impl Default for TripletPlan {
    fn default() -> Self {
        Self {
            v1: -450.0,
            v2: -3600.0,
            n_runs: 51,
            drift: (0.0, 2.0),
            drift_rate: 0.0,
            order: AcquisitionOrder::Alternating,
        }
    }
}

/// One run: traces at v₁, 2v₁ and v₂, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRun {
    pub run: usize,
    pub traces: [SynthTrace; 3],
}

impl SynthRun {
    pub fn triplet(&self) -> TripletTraces {
        TripletTraces {
            v1: self.traces[0].trace.clone(),
            v1_double: self.traces[1].trace.clone(),
            v2: self.traces[2].trace.clone(),
        }
    }
}

impl TripletPlan {
    pub fn velocities(&self) -> [f64; 3] {
        [self.v1, 2.0 * self.v1, self.v2]
    }

    /// Position of (run, velocity slot) in the acquisition sequence.
    pub fn acquisition_index(&self, run: usize, slot: usize) -> usize {
        match self.order {
            AcquisitionOrder::Alternating => 3 * run + slot,
            AcquisitionOrder::Blocks => slot * self.n_runs + run,
        }
    }
}

/// Velocity-triplet ensemble; every trace has its own noise stream and drift.
pub fn synth_triplet_ensemble(base: &SynthParams, plan: &TripletPlan) -> Result<Vec<SynthRun>> {
    if plan.n_runs == 0 {
        return Err(SynthError::InvalidParams(
            "n_runs must be at least 1".into(),
        ));
    }
    let velocities = plan.velocities();
    let traces: Vec<SynthTrace> = (0..plan.n_runs * 3)
        .into_par_iter()
        .map(|k| {
            let (run, slot) = (k / 3, k % 3);
            let a = plan.acquisition_index(run, slot);
            let mut p = base.clone();
            p.velocity = velocities[slot];
            let drift = (plan.drift.0 + plan.drift_rate * a as f64, plan.drift.1);
            trace_with_drift(&p, a as u64, drift)
        })
        .collect::<Result<_>>()?;
    let mut it = traces.into_iter();
    let mut runs = Vec::with_capacity(plan.n_runs);
    for run in 0..plan.n_runs {
        let (a, b, c) = (it.next(), it.next(), it.next());
        match (a, b, c) {
            (Some(a), Some(b), Some(c)) => runs.push(SynthRun {
                run,
                traces: [a, b, c],
            }),
            _ => unreachable!("three traces per run"),
        }
    }
    Ok(runs)
}

/// A uniformly distributed integer seed, for callers that want one.
pub fn random_seed<R: Rng>(rng: &mut R) -> u64 {
    rng.random()
}
