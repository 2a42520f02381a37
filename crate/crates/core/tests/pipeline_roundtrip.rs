//! Generator-to-pipeline round trips.

use casimir_core::lifshitz::LayerSystem;
use casimir_core::pipeline::{
    align_contact_zero, analyze_runs, combine_hydro, combine_static, compensate_bending,
    fit_hydro_calibration, prepare_trace, resample, AlignOptions, AlignedTrace, AnalysisConfig,
    GridSeries, PrepareOptions, ResampledTrace,
};
use casimir_core::synth::{
    casimir_force_model, synth_ensemble, synth_trace, synth_triplet_ensemble, ForceModel,
    SynthParams, TripletPlan,
};
use proptest::prelude::*;

fn rigid(force_model: ForceModel, a: f64, b: f64, velocity: f64) -> SynthParams {
    SynthParams {
        force_model,
        spring_constant: None,
        noise_sigma: 0.0,
        background_slope: a,
        background_offset: b,
        velocity,
        sample_spacing: 0.25,
        range: (0.0, 1500.0),
        ..SynthParams::default()
    }
}

fn rigid_grid(p: &SynthParams) -> ResampledTrace {
    let t = synth_trace(p).unwrap().trace;
    resample(
        &compensate_bending(&AlignedTrace::assume_aligned(t, 0.0), 0.0),
        0.5,
    )
    .unwrap()
}

fn electrostatic() -> ForceModel {
    ForceModel::Electrostatic {
        v0: 0.03,
        static_dielectric: 24.3,
        debye_length: 20.0,
        radius: 19.9e-6,
    }
}

fn max_abs_diff(a: &GridSeries, b: &GridSeries) -> f64 {
    assert_eq!((a.first_index, a.len()), (b.first_index, b.len()));
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn scale(g: &GridSeries) -> f64 {
    g.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[test]
fn drift_pair_aligns_to_common_contact() {
    let base = SynthParams {
        noise_sigma: 0.0,
        spring_constant: Some(3.0),
        ..SynthParams::default()
    };
    let shifted = SynthParams {
        drift_offset: 3.0,
        ..base.clone()
    };
    let opts = AlignOptions::default();
    let a = align_contact_zero(&synth_trace(&base).unwrap().trace, &opts).unwrap();
    let b = align_contact_zero(&synth_trace(&shifted).unwrap().trace, &opts).unwrap();
    assert!(
        (b.shift - a.shift - 3.0).abs() < 0.5,
        "{} {}",
        a.shift,
        b.shift
    );
    assert!(a.shift.abs() < 0.5);
}

#[test]
fn drifted_ensemble_collapses_onto_injected_contacts() {
    let p = SynthParams {
        spring_constant: Some(3.0),
        range: (-100.0, 1200.0),
        seed: 5,
        ..SynthParams::default()
    };
    let traces = synth_ensemble(&p, 51, (0.0, 2.0)).unwrap();
    let opts = AlignOptions::default();
    for t in &traces {
        let a = align_contact_zero(&t.trace, &opts).unwrap();
        let injected = t.truth.params.drift_offset;
        assert!(
            (a.shift - injected).abs() < 0.5,
            "{} vs {injected}",
            a.shift
        );
    }
}

#[test]
fn compensated_axis_tracks_true_tip_position() {
    let cas = casimir_force_model(&LayerSystem::gold_ethanol(), 5.0, 4000.0, 120).unwrap();
    let p = SynthParams {
        force_model: cas,
        noise_sigma: 0.0,
        spring_constant: Some(0.2),
        range: (-100.0, 1500.0),
        drift_offset: 4.0,
        ..SynthParams::default()
    };
    let s = synth_trace(&p).unwrap();
    let aligned = align_contact_zero(&s.trace, &AlignOptions::default()).unwrap();
    let comp = compensate_bending(&aligned, 0.0);
    let mut checked = 0;
    for (i, &x) in comp.position.iter().enumerate() {
        if comp.piezo[i] <= comp.contact_end || s.truth.separation[i] > 500.0 {
            continue;
        }
        let tip = s.truth.separation[i] - p.contact_offset;
        assert!((x - tip).abs() < 0.5, "sample {i}: {x} vs {tip}");
        checked += 1;
    }
    assert!(checked > 1000);
}

// A stiff cantilever keeps the sphere at the piezo velocity; softer ones slow
// it near contact and shift d₀ in proportion to 1/k.
#[test]
fn noiseless_calibration_to_four_figures() {
    let p = SynthParams {
        noise_sigma: 0.0,
        spring_constant: Some(300.0),
        velocity: -3150.0,
        ..SynthParams::default()
    };
    let (_, r) =
        prepare_trace(&synth_trace(&p).unwrap().trace, &PrepareOptions::default()).unwrap();
    let fit = fit_hydro_calibration(&r.grid, 1.17e-3, 19.9e-6, -3150e-9, (100.0, 1500.0)).unwrap();
    assert!(
        (fit.force_constant / 14.5 - 1.0).abs() < 5e-4,
        "{}",
        fit.force_constant
    );
    assert!(
        (fit.contact_offset / 12.0 - 1.0).abs() < 5e-4,
        "{}",
        fit.contact_offset
    );
}

// Each repetition carries the noise of a 51-run average.
#[test]
fn calibration_is_unbiased_over_repetitions() {
    let sigma = 110.0 / 51f64.sqrt();
    let base = SynthParams {
        spring_constant: Some(30.0),
        noise_sigma: sigma,
        velocity: -3150.0,
        range: (-100.0, 1600.0),
        seed: 77,
        ..SynthParams::default()
    };
    let traces = synth_ensemble(&base, 100, (0.0, 2.0)).unwrap();
    let fits: Vec<_> = traces
        .iter()
        .map(|t| {
            let (_, r) = prepare_trace(&t.trace, &PrepareOptions::default()).unwrap();
            fit_hydro_calibration(&r.grid, 1.17e-3, 19.9e-6, -3150e-9, (100.0, 1500.0)).unwrap()
        })
        .collect();
    let n = fits.len() as f64;
    let mean = |f: &dyn Fn(usize) -> f64| (0..fits.len()).map(f).sum::<f64>() / n;
    let c_err = mean(&|i| fits[i].force_constant - 14.5);
    let d_err = mean(&|i| fits[i].contact_offset - 12.0);
    let c_unc = mean(&|i| fits[i].uncertainties.0);
    let d_unc = mean(&|i| fits[i].uncertainties.1);
    assert!(c_err.abs() < 0.25 * c_unc, "C bias {c_err} vs {c_unc}");
    assert!(d_err.abs() < 0.25 * d_unc, "d0 bias {d_err} vs {d_unc}");
    // Two samples per 0.5 nm cell, then interpolation between neighbouring
    // cell means with weight w: variance σ²/2 · E[w² + (1 − w)²] = σ²/3.
    let rms = mean(&|i| fits[i].residual_rms);
    let expected = sigma / 3f64.sqrt();
    assert!((rms / expected - 1.0).abs() < 0.1, "{rms} vs {expected}");
}

#[test]
fn background_is_recovered_from_casimir_plus_line() {
    let cas = casimir_force_model(&LayerSystem::gold_ethanol(), 5.0, 4000.0, 120).unwrap();
    let (a, b) = (-0.02, 30.0);
    let base = SynthParams {
        force_model: cas,
        noise_sigma: 0.0,
        spring_constant: Some(3.0),
        background_slope: a,
        background_offset: b,
        ..SynthParams::default()
    };
    let plan = TripletPlan {
        n_runs: 2,
        drift: (0.0, 0.0),
        ..TripletPlan::default()
    };
    let runs: Vec<_> = synth_triplet_ensemble(&base, &plan)
        .unwrap()
        .iter()
        .map(|r| r.triplet())
        .collect();
    let report = analyze_runs(&runs, &AnalysisConfig::default()).unwrap();
    let d0 = report.calibration.contact_offset;
    for bg in &report.backgrounds {
        // the line is injected on the piezo axis, x = separation − d₀
        assert!((bg.slope / a - 1.0).abs() < 0.01, "{}", bg.slope);
        let offset = b - a * d0;
        assert!(
            (bg.offset / offset - 1.0).abs() < 0.01,
            "{} vs {offset}",
            bg.offset
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hydro_combination_ignores_background_and_static_force(
        a in -0.05f64..0.05,
        b in -50.0f64..50.0,
        with_static in any::<bool>(),
    ) {
        let f0 = if with_static { electrostatic() } else { ForceModel::Zero };
        let reference = combine_hydro(
            &rigid_grid(&rigid(ForceModel::Zero, 0.0, 0.0, -3600.0)),
            &rigid_grid(&rigid(ForceModel::Zero, 0.0, 0.0, -450.0)),
        ).unwrap();
        let varied = combine_hydro(
            &rigid_grid(&rigid(f0.clone(), a, b, -3600.0)),
            &rigid_grid(&rigid(f0, a, b, -450.0)),
        ).unwrap();
        let diff = max_abs_diff(&reference.grid, &varied.grid);
        prop_assert!(diff <= 1e-12 * scale(&reference.grid), "{diff}");
    }

    #[test]
    fn static_combination_cancels_hydro_for_any_velocity(v1 in -2000.0f64..-100.0) {
        let f0 = electrostatic();
        let get = |v: f64| {
            combine_static(
                &rigid_grid(&rigid(f0.clone(), 0.01, 5.0, v)),
                &rigid_grid(&rigid(f0.clone(), 0.01, 5.0, 2.0 * v)),
            ).unwrap()
        };
        let reference = get(-450.0);
        let varied = get(v1);
        let diff = max_abs_diff(&reference.grid, &varied.grid);
        prop_assert!(diff <= 1e-9 * scale(&reference.grid), "{diff}");
    }
}

#[test]
fn background_only_traces_give_zero_hydro_signal() {
    let h = combine_hydro(
        &rigid_grid(&rigid(ForceModel::Zero, 0.03, -12.0, -3600.0)),
        &rigid_grid(&rigid(ForceModel::Zero, 0.03, -12.0, -450.0)),
    )
    .unwrap();
    // viscosity zero removes the drag term entirely
    let quiet = |v: f64| SynthParams {
        viscosity: 0.0,
        ..rigid(ForceModel::Zero, 0.03, -12.0, v)
    };
    let z = combine_hydro(&rigid_grid(&quiet(-3600.0)), &rigid_grid(&quiet(-450.0))).unwrap();
    assert!(z
        .grid
        .values
        .iter()
        .all(|v| v.abs() < 1e-15 * scale(&h.grid)));
}

#[test]
fn hydro_only_static_combination_is_zero() {
    let s = combine_static(
        &rigid_grid(&rigid(ForceModel::Zero, 0.0, 0.0, -450.0)),
        &rigid_grid(&rigid(ForceModel::Zero, 0.0, 0.0, -900.0)),
    )
    .unwrap();
    assert!(s.grid.values.iter().all(|v| v.abs() < 1e-15));
}
