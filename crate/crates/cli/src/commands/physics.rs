//! `eps`, `force` and `conductivity-fit`.

use std::path::Path;

use casimir_core::dielectric::{matsubara_spacing, DielectricError};
use casimir_core::forces::fit_conductivity_loglog;
use casimir_core::io::{parse_conductivity, parse_roughness, Table};
use casimir_core::lifshitz::{
    geometric_grid, power_law_exponent, ForceOptions, LayerSystem, LifshitzSolver,
    RoughnessDistribution, SaltScreening,
};

use super::{tag, Ctx};
use crate::config::{read_input, EpsConfig};
use crate::error::{core, CliError, Result};
use crate::materials;

fn xi_grid(c: &EpsConfig) -> Result<Vec<f64>> {
    if c.xi_min_rad_s.is_none() && c.xi_max_rad_s.is_none() {
        if !(c.temperature_k > 0.0) {
            return Err(CliError::Config(
                "eps.temperature_k must be positive".into(),
            ));
        }
        let step = matsubara_spacing(c.temperature_k);
        return Ok((0..=c.terms).map(|m| m as f64 * step).collect());
    }
    let lo = c.xi_min_rad_s.unwrap_or(0.0);
    let hi = c
        .xi_max_rad_s
        .ok_or_else(|| CliError::Config("eps.xi_max_rad_s is required with xi_min_rad_s".into()))?;
    if !(lo >= 0.0 && hi > lo && c.points >= 2) {
        return Err(CliError::Config(format!(
            "bad ξ range {lo}..{hi} with {} points",
            c.points
        )));
    }
    let n = c.points - 1;
    if c.log_spacing {
        if lo <= 0.0 {
            return Err(CliError::Config(
                "log spacing needs xi_min_rad_s > 0".into(),
            ));
        }
        let r = (hi / lo).ln();
        Ok((0..=n)
            .map(|i| lo * (r * i as f64 / n as f64).exp())
            .collect())
    } else {
        Ok((0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect())
    }
}

/// ε(iξ) on a Matsubara or explicit ξ grid. Models that diverge at ξ = 0
/// (metals, dissolved ions) report `inf` there.
pub fn eps(ctx: &Ctx, material: Option<&str>) -> Result<()> {
    let c = &ctx.cfg.eps;
    let (spec, model) = match (material, &c.material) {
        (Some(m), _) => (m.to_string(), materials::load(m, Path::new(""))?),
        (None, Some(m)) => (m.clone(), materials::load(m, &ctx.cfg.base_dir)?),
        (None, None) => {
            return Err(CliError::Config(
                "no material: pass --material or set eps.material".into(),
            ))
        }
    };
    let mut table = Table::new(&["xi_rad_s", "eps"]).meta("material", &spec);
    for xi in xi_grid(c)? {
        let e = match model.eval(xi) {
            Ok(e) => e,
            Err(DielectricError::Divergent { .. }) => f64::INFINITY,
            Err(e) => return Err(core(e)),
        };
        table.rows.push(vec![xi, e]);
    }
    ctx.write("eps.txt", &table.render("  "))?;
    Ok(())
}

fn roughness(ctx: &Ctx, file: &Option<String>) -> Result<RoughnessDistribution> {
    match file {
        None => Ok(RoughnessDistribution::smooth()),
        Some(f) => parse_roughness(&read_input(&ctx.cfg.resolve(f))?).map_err(core),
    }
}

/// Sphere-plate force curve with optional screened and rough variants.
pub fn force(ctx: &Ctx) -> Result<()> {
    let c = &ctx.cfg.force;
    let base = &ctx.cfg.base_dir;
    let sys = LayerSystem::new(
        materials::load(&c.sphere, base)?,
        materials::load(&c.plate, base)?,
        materials::load(&c.medium, base)?,
        c.temperature_k,
        c.radius_um * 1e-6,
    )
    .map_err(core)?;
    let grid = geometric_grid(c.d_min_nm * 1e-9, c.d_max_nm * 1e-9, c.points).map_err(core)?;
    let solver =
        LifshitzSolver::with_cache_for(sys, ForceOptions::default(), grid[0]).map_err(core)?;

    let smooth = solver.curve(&grid, None).map_err(core)?;
    let mut columns = vec!["d_nm".to_string(), "F_pN".to_string()];
    let mut variants = Vec::new();
    for &lambda in &c.debye_lengths_nm {
        let salt = SaltScreening::from_debye_length(lambda * 1e-9).map_err(core)?;
        variants.push(solver.curve(&grid, Some(salt)).map_err(core)?);
        columns.push(format!("F_pN_debye_{}_nm", tag(lambda)));
    }
    if c.roughness_sphere.is_some() || c.roughness_plate.is_some() {
        let rs = roughness(ctx, &c.roughness_sphere)?;
        let rp = roughness(ctx, &c.roughness_plate)?;
        variants.push(solver.rough_curve(&grid, None, &rs, &rp).map_err(core)?);
        columns.push("F_pN_rough".into());
    }

    let names: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(&names)
        .meta("sphere", &c.sphere)
        .meta("plate", &c.plate)
        .meta("medium", &c.medium)
        .meta("temperature_K", c.temperature_k)
        .meta("radius_um", c.radius_um);
    let (lo, hi) = c.slope_range_nm;
    match power_law_exponent(&smooth, lo * 1e-9, hi * 1e-9) {
        Ok(slope) => table = table.meta(format!("loglog_slope_{lo}_{hi}nm"), slope),
        Err(e) => log::warn!("no log-log slope over {lo}..{hi} nm: {e}"),
    }
    for (i, &(d, f)) in smooth.points().iter().enumerate() {
        let mut row = vec![d * 1e9, f * 1e12];
        row.extend(variants.iter().map(|v| v.points()[i].1 * 1e12));
        table.rows.push(row);
    }
    ctx.write("force.txt", &table.render("  "))?;
    Ok(())
}

/// Power-law fit of normalized conductivity against molarity on log axes.
pub fn conductivity_fit(ctx: &Ctx, file: &Path) -> Result<()> {
    let series = parse_conductivity(&read_input(file)?).map_err(core)?;
    let fit = fit_conductivity_loglog(&series).map_err(core)?;
    let mut table = Table::new(&["log10_molarity", "log10_conductivity", "fit"])
        .meta("slope", fit.slope)
        .meta("intercept", fit.intercept)
        .meta("residual_rms", fit.residual_rms);
    for &(m, s) in series.points() {
        let x = m.log10();
        table
            .rows
            .push(vec![x, s.log10(), fit.intercept + fit.slope * x]);
    }
    ctx.write("conductivity.txt", &table.render("  "))?;
    Ok(())
}
