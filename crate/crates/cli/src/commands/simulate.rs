//! `simulate`: synthetic deflection traces with ground-truth sidecars.

use casimir_core::io::{parse_curve, render_trace, render_truth};
use casimir_core::lifshitz::LayerSystem;
use casimir_core::synth::{
    casimir_force_model, synth_ensemble, synth_trace, synth_triplet_ensemble, ForceModel,
    GroundTruth, SineDrift, SynthParams, SynthTrace, TabulatedForce,
};
use serde::Serialize;

use super::Ctx;
use crate::config::{read_input, ForceKind, SimMode, SimulateConfig, TruthDetail};
use crate::error::{core, CliError, Result};

/// Sidecar written when the full per-sample truth is not requested.
#[derive(Serialize)]
struct TruthSummary<'a> {
    params: &'a SynthParams,
    contact_index: Option<usize>,
    snap_in: Option<f64>,
}

fn force_model(ctx: &Ctx, c: &SimulateConfig) -> Result<ForceModel> {
    let base = match c.force {
        ForceKind::Zero => ForceModel::Zero,
        ForceKind::Casimir => {
            let mut sys = LayerSystem::gold_ethanol();
            sys.radius = c.radius_um * 1e-6;
            casimir_force_model(
                &sys,
                c.casimir_d_min_nm,
                c.casimir_d_max_nm,
                c.casimir_points,
            )
            .map_err(core)?
        }
        ForceKind::Table => {
            let file = c.force_table.as_deref().ok_or_else(|| {
                CliError::Config("simulate.force = \"table\" needs force_table".into())
            })?;
            let curve = parse_curve(&read_input(&ctx.cfg.resolve(file))?).map_err(core)?;
            let (d, f) = curve
                .points()
                .iter()
                .map(|p| (p.0 * 1e9, p.1 * 1e12))
                .unzip();
            ForceModel::Tabulated(TabulatedForce::new(d, f).map_err(core)?)
        }
    };
    Ok(match c.electrostatic_v0_mv {
        None => base,
        Some(mv) => ForceModel::Sum {
            terms: vec![
                base,
                ForceModel::Electrostatic {
                    v0: mv * 1e-3,
                    static_dielectric: c.static_dielectric,
                    debye_length: c.electrostatic_debye_nm,
                    radius: c.radius_um * 1e-6,
                },
            ],
        },
    })
}

fn params(ctx: &Ctx, c: &SimulateConfig) -> Result<SynthParams> {
    Ok(SynthParams {
        force_model: force_model(ctx, c)?,
        viscosity: c.viscosity_pa_s,
        radius: c.radius_um * 1e-6,
        force_constant: c.force_constant_nn_v,
        spring_constant: (!c.rigid).then_some(c.spring_constant_n_m),
        contact_offset: c.contact_offset_nm,
        background_slope: c.background_slope_pn_nm,
        background_offset: c.background_offset_pn,
        velocity: c.velocity_nm_s,
        noise_sigma: c.noise_pn,
        drift_offset: c.drift_offset_nm,
        drift_sine: c.drift_sine_amplitude_nm.map(|amplitude| SineDrift {
            amplitude,
            period: c.drift_sine_period_s,
        }),
        sample_spacing: c.sample_spacing_nm,
        range: c.range_nm,
        seed: ctx.seed.unwrap_or(c.seed),
    })
}

fn write_trace(ctx: &Ctx, stem: &str, t: &SynthTrace, detail: TruthDetail) -> Result<()> {
    let mut trace = t.trace.clone();
    trace.label = stem.to_string();
    ctx.write(&format!("{stem}.csv"), &render_trace(&trace))?;
    let truth = match detail {
        TruthDetail::Full => render_truth(&t.truth).map_err(core)?,
        TruthDetail::Summary => summary(&t.truth)?,
    };
    ctx.write(&format!("{stem}.truth.json"), &truth)?;
    Ok(())
}

fn summary(truth: &GroundTruth) -> Result<String> {
    serde_json::to_string_pretty(&TruthSummary {
        params: &truth.params,
        contact_index: truth.contact_index,
        snap_in: truth.snap_in,
    })
    .map_err(|e| CliError::Data(e.to_string()))
}

pub fn simulate(ctx: &Ctx) -> Result<()> {
    let c = &ctx.cfg.simulate;
    let p = params(ctx, c)?;
    match c.mode {
        SimMode::Single => {
            write_trace(ctx, "trace", &synth_trace(&p).map_err(core)?, c.truth)?;
        }
        SimMode::Ensemble => {
            let traces =
                synth_ensemble(&p, c.runs, (c.drift_mean_nm, c.drift_sigma_nm)).map_err(core)?;
            for (i, t) in traces.iter().enumerate() {
                write_trace(ctx, &format!("trace_{i:03}"), t, c.truth)?;
            }
        }
        SimMode::Triplet => {
            let runs = synth_triplet_ensemble(&p, &c.plan()).map_err(core)?;
            for r in &runs {
                for (t, slot) in r.traces.iter().zip(["v1", "2v1", "v2"]) {
                    write_trace(ctx, &format!("run_{:03}_{slot}", r.run), t, c.truth)?;
                }
            }
        }
    }
    Ok(())
}
