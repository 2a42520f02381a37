//! Job configuration. One TOML file may hold a section per command; every
//! table rejects keys it does not know. Relative paths inside a config file
//! are resolved against the file's directory.

use std::path::{Path, PathBuf};

use casimir_core::io::read_to_string;
use casimir_core::lifshitz::{DEFAULT_RADIUS, DEFAULT_TEMPERATURE};
use casimir_core::pipeline::{DEFAULT_FAR_RANGE, DEFAULT_FIT_RANGE};
use casimir_core::synth::{AcquisitionOrder, SynthParams, TripletPlan};
use serde::Deserialize;

use crate::error::{core, CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobConfig {
    pub eps: EpsConfig,
    pub force: ForceConfig,
    pub simulate: SimulateConfig,
    pub calibrate: CalibrateConfig,
    pub extract: ExtractConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl JobConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_to_string(path).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Resolves a path written in the config file.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsConfig {
    /// Built-in name (`gold`, `ethanol`, `vacuum`) or material file.
    pub material: Option<String>,
    /// Without an explicit range the Matsubara frequencies m = 0..terms at
    /// this temperature are tabulated.
    pub temperature_k: f64,
    pub terms: usize,
    pub xi_min_rad_s: Option<f64>,
    pub xi_max_rad_s: Option<f64>,
    pub points: usize,
    pub log_spacing: bool,
}

impl Default for EpsConfig {
    fn default() -> Self {
        Self {
            material: None,
            temperature_k: DEFAULT_TEMPERATURE,
            terms: 100,
            xi_min_rad_s: None,
            xi_max_rad_s: None,
            points: 100,
            log_spacing: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceConfig {
    pub sphere: String,
    pub plate: String,
    pub medium: String,
    pub temperature_k: f64,
    pub radius_um: f64,
    pub d_min_nm: f64,
    pub d_max_nm: f64,
    pub points: usize,
    /// One screened column per entry; `inf` gives κ = 0.
    pub debye_lengths_nm: Vec<f64>,
    pub roughness_sphere: Option<String>,
    pub roughness_plate: Option<String>,
    /// Range of the reported log-log slope.
    pub slope_range_nm: (f64, f64),
}

impl Default for ForceConfig {
    fn default() -> Self {
        Self {
            sphere: "gold".into(),
            plate: "gold".into(),
            medium: "ethanol".into(),
            temperature_k: DEFAULT_TEMPERATURE,
            radius_um: DEFAULT_RADIUS * 1e6,
            d_min_nm: 20.0,
            d_max_nm: 100.0,
            points: 81,
            debye_lengths_nm: Vec::new(),
            roughness_sphere: None,
            roughness_plate: None,
            slope_range_nm: (40.0, 100.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Single,
    Ensemble,
    Triplet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    Zero,
    /// Lifshitz force of gold/ethanol/gold at the configured radius.
    Casimir,
    /// `d_nm F_pN` table from `force_table`.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthDetail {
    /// Parameters, contact index and snap-in only.
    Summary,
    /// Every per-sample array as well.
    Full,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub mode: SimMode,
    /// Traces for `ensemble`, velocity triplets for `triplet`.
    pub runs: usize,
    pub force: ForceKind,
    pub force_table: Option<String>,
    pub casimir_d_min_nm: f64,
    pub casimir_d_max_nm: f64,
    pub casimir_points: usize,
    /// Adds a screened electrostatic term when set.
    pub electrostatic_v0_mv: Option<f64>,
    pub electrostatic_debye_nm: f64,
    pub static_dielectric: f64,
    pub viscosity_pa_s: f64,
    pub radius_um: f64,
    pub force_constant_nn_v: f64,
    /// N/m; `rigid = true` ignores it.
    pub spring_constant_n_m: f64,
    pub rigid: bool,
    pub contact_offset_nm: f64,
    pub background_slope_pn_nm: f64,
    pub background_offset_pn: f64,
    /// Approach velocity for `single` and `ensemble`.
    pub velocity_nm_s: f64,
    pub noise_pn: f64,
    pub sample_spacing_nm: f64,
    pub range_nm: (f64, f64),
    pub drift_offset_nm: f64,
    pub drift_mean_nm: f64,
    pub drift_sigma_nm: f64,
    pub drift_rate_nm: f64,
    pub drift_sine_amplitude_nm: Option<f64>,
    pub drift_sine_period_s: f64,
    pub v1_nm_s: f64,
    pub v2_nm_s: f64,
    pub order: AcquisitionOrder,
    pub seed: u64,
    pub truth: TruthDetail,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let p = SynthParams::default();
        let plan = TripletPlan::default();
        Self {
            mode: SimMode::Triplet,
            runs: plan.n_runs,
            force: ForceKind::Zero,
            force_table: None,
            casimir_d_min_nm: 5.0,
            casimir_d_max_nm: 4000.0,
            casimir_points: 120,
            electrostatic_v0_mv: None,
            electrostatic_debye_nm: 100.0,
            static_dielectric: 24.3,
            viscosity_pa_s: p.viscosity,
            radius_um: p.radius * 1e6,
            force_constant_nn_v: p.force_constant,
            spring_constant_n_m: p.spring_constant.unwrap_or(0.03),
            rigid: false,
            contact_offset_nm: p.contact_offset,
            background_slope_pn_nm: p.background_slope,
            background_offset_pn: p.background_offset,
            velocity_nm_s: p.velocity,
            noise_pn: p.noise_sigma,
            sample_spacing_nm: p.sample_spacing,
            range_nm: p.range,
            drift_offset_nm: p.drift_offset,
            drift_mean_nm: plan.drift.0,
            drift_sigma_nm: plan.drift.1,
            drift_rate_nm: plan.drift_rate,
            drift_sine_amplitude_nm: None,
            drift_sine_period_s: 1.0,
            v1_nm_s: plan.v1,
            v2_nm_s: plan.v2,
            order: plan.order,
            seed: 0,
            truth: TruthDetail::Summary,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub viscosity_pa_s: f64,
    pub radius_um: f64,
    pub fit_range_nm: (f64, f64),
    /// Extra fit ranges reported side by side.
    pub compare_ranges_nm: Vec<(f64, f64)>,
    pub grid_step_nm: f64,
    pub compensation_window_nm: f64,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            viscosity_pa_s: 1.17e-3,
            radius_um: DEFAULT_RADIUS * 1e6,
            fit_range_nm: DEFAULT_FIT_RANGE,
            compare_ranges_nm: vec![(50.0, 1000.0), (100.0, 1500.0), (150.0, 1500.0)],
            grid_step_nm: 0.5,
            compensation_window_nm: casimir_core::pipeline::DEFAULT_COMPENSATION_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramConfig {
    pub separation_nm: f64,
    pub half_window_nm: f64,
    /// Subtract the ensemble mean so the histogram centres on zero.
    pub centered: bool,
    pub bins: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            separation_nm: 30.0,
            half_window_nm: 2.0,
            centered: true,
            bins: 15,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    /// Calibration JSON from `calibrate`; fitted from the traces if absent.
    pub calibration: Option<String>,
    pub viscosity_pa_s: f64,
    pub radius_um: f64,
    pub fit_range_nm: (f64, f64),
    pub far_range_nm: (f64, f64),
    pub grid_step_nm: f64,
    pub compensation_window_nm: f64,
    pub histograms: Vec<HistogramConfig>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            calibration: None,
            viscosity_pa_s: 1.17e-3,
            radius_um: DEFAULT_RADIUS * 1e6,
            fit_range_nm: DEFAULT_FIT_RANGE,
            far_range_nm: DEFAULT_FAR_RANGE,
            grid_step_nm: 0.5,
            compensation_window_nm: casimir_core::pipeline::DEFAULT_COMPENSATION_WINDOW,
            histograms: vec![
                HistogramConfig::default(),
                HistogramConfig {
                    separation_nm: 60.0,
                    ..HistogramConfig::default()
                },
            ],
        }
    }
}

/// Material description file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub model: MaterialModel,
    #[serde(default)]
    pub ions: Option<IonConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialModel {
    Builtin {
        name: String,
    },
    Constant {
        eps: f64,
    },
    Drude {
        plasma_ev: f64,
        damping_ev: f64,
    },
    Oscillator {
        c_ir: f64,
        c_uv: f64,
        omega_ir_rad_s: f64,
        omega_uv_rad_s: f64,
    },
    /// Tabulated Im ε (eV, Im ε columns) joined to a Drude tail.
    Tabulated {
        table: String,
        plasma_ev: f64,
        damping_ev: f64,
        #[serde(default = "default_crossover")]
        crossover_ev: f64,
    },
}

fn default_crossover() -> f64 {
    casimir_core::dielectric::DEFAULT_CROSSOVER_EV
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonConfig {
    /// Dissolved NaI, mM.
    pub nai_mm: f64,
}

impl SimulateConfig {
    pub fn plan(&self) -> TripletPlan {
        TripletPlan {
            v1: self.v1_nm_s,
            v2: self.v2_nm_s,
            n_runs: self.runs,
            drift: (self.drift_mean_nm, self.drift_sigma_nm),
            drift_rate: self.drift_rate_nm,
            order: self.order,
        }
    }
}

pub fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if r.0.is_finite() && r.1.is_finite() && r.0 < r.1 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must be an increasing pair, got {r:?}"
        )))
    }
}

/// Reads a text file named in a config or on the command line.
pub fn read_input(path: &Path) -> Result<String> {
    read_to_string(path).map_err(core)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(JobConfig::parse("[force]\nd_min_nm = 10\n").is_ok());
        assert!(JobConfig::parse("[force]\nd_minimum = 10\n").is_err());
        assert!(JobConfig::parse("[forces]\n").is_err());
        let bad = "[[extract.histograms]]\nseparation_nm = 30\nwidth = 2\n";
        assert!(JobConfig::parse(bad).is_err());
    }

    #[test]
    fn material_kinds_parse() {
        let m: MaterialFile = toml::from_str(
            "[model]\nkind = \"oscillator\"\nc_ir = 23.84\nc_uv = 0.852\n\
             omega_ir_rad_s = 6.6e14\nomega_uv_rad_s = 1.14e16\n[ions]\nnai_mm = 10\n",
        )
        .unwrap();
        assert!(matches!(m.model, MaterialModel::Oscillator { .. }));
        assert!(
            toml::from_str::<MaterialFile>("[model]\nkind = \"constant\"\neps = 2\nx = 1\n")
                .is_err()
        );
    }

    #[test]
    fn infinite_debye_length_is_accepted() {
        let c = JobConfig::parse("[force]\ndebye_lengths_nm = [inf, 1.0]\n").unwrap();
        assert!(c.force.debye_lengths_nm[0].is_infinite());
    }
}
