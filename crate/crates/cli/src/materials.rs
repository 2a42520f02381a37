//! Material lookup: a built-in name or a TOML material file.

use std::path::Path;

use casimir_core::constants::ev_to_rad_s;
use casimir_core::dielectric::{
    DielectricModel, DrudeParams, IonCorrection, OpticalDataTable, OscillatorModel,
};

use crate::config::{read_input, MaterialFile, MaterialModel};
use crate::error::{core, CliError, Result};

pub fn builtin(name: &str) -> Option<DielectricModel> {
    match name {
        "gold" => Some(DielectricModel::gold()),
        "ethanol" => Some(DielectricModel::ethanol()),
        "vacuum" => Some(DielectricModel::vacuum()),
        _ => None,
    }
}

/// `spec` is a built-in name or a path; relative paths inside a material
/// file are resolved against that file's directory.
pub fn load(spec: &str, base: &Path) -> Result<DielectricModel> {
    if let Some(m) = builtin(spec) {
        return Ok(m);
    }
    let path = base.join(spec);
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "material `{spec}` is neither gold, ethanol, vacuum nor a file"
        )));
    }
    let text = read_input(&path)?;
    let file: MaterialFile =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    from_file(&file, dir)
}

pub fn from_file(file: &MaterialFile, dir: &Path) -> Result<DielectricModel> {
    let model = match &file.model {
        MaterialModel::Builtin { name } => builtin(name)
            .ok_or_else(|| CliError::Config(format!("unknown built-in material `{name}`")))?,
        MaterialModel::Constant { eps } => DielectricModel::constant(*eps).map_err(core)?,
        MaterialModel::Drude {
            plasma_ev,
            damping_ev,
        } => DielectricModel::Drude(DrudeParams::from_ev(*plasma_ev, *damping_ev).map_err(core)?),
        MaterialModel::Oscillator {
            c_ir,
            c_uv,
            omega_ir_rad_s,
            omega_uv_rad_s,
        } => DielectricModel::Oscillator(
            OscillatorModel::new(*c_ir, *c_uv, *omega_ir_rad_s, *omega_uv_rad_s).map_err(core)?,
        ),
        MaterialModel::Tabulated {
            table,
            plasma_ev,
            damping_ev,
            crossover_ev,
        } => {
            let text = read_input(&dir.join(table))?;
            DielectricModel::tabulated(
                OpticalDataTable::parse(&text).map_err(core)?,
                DrudeParams::from_ev(*plasma_ev, *damping_ev).map_err(core)?,
                ev_to_rad_s(*crossover_ev),
            )
            .map_err(core)?
        }
    };
    Ok(match &file.ions {
        Some(ions) if ions.nai_mm > 0.0 => {
            model.with_ions(IonCorrection::sodium_iodide(ions.nai_mm).map_err(core)?)
        }
        _ => model,
    })
}
