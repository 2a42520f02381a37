use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use casimir_core::dielectric::DielectricModel;
use casimir_core::io::Table;
use casimir_core::lifshitz::LayerSystem;
use casimir_core::synth::casimir_force_model;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn table(path: &Path, ncols: usize) -> Table {
    Table::parse(&fs::read_to_string(path).unwrap(), ncols).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("job.toml");
    fs::write(&p, text).unwrap();
    p
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| p.to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn same_files(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?} differs"
        );
    }
}

#[test]
fn eps_examples() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path();
    ok(&["eps", "--material", "ethanol", "--out", s(out)]);
    let t = table(&out.join("eps.txt"), 2);
    assert_eq!(t.rows[0][0], 0.0);
    assert!((t.rows[0][1] - 25.692).abs() < 1e-9);

    let vacuum = configs().join("materials/vacuum.toml");
    ok(&["eps", "--material", s(&vacuum), "--out", s(out)]);
    assert!(table(&out.join("eps.txt"), 2)
        .rows
        .iter()
        .all(|r| r[1] == 1.0));

    let gold = configs().join("materials/gold.toml");
    ok(&["eps", "--material", s(&gold), "--out", s(out)]);
    let t = table(&out.join("eps.txt"), 2);
    assert!(t.rows[0][1].is_infinite());
    let model = DielectricModel::gold();
    for r in &t.rows[1..] {
        let e = model.eval(r[0]).unwrap();
        assert!((r[1] / e - 1.0).abs() < 1e-12, "{r:?} vs {e}");
    }
}

#[test]
fn force_variants() {
    let tmp = TempDir::new().unwrap();
    let data = configs().join("data");
    let cfg = write_config(
        tmp.path(),
        &format!(
            "[force]\nd_min_nm = 25.0\nd_max_nm = 100.0\npoints = 15\n\
             debye_lengths_nm = [inf, 1.0]\n\
             roughness_sphere = \"{}\"\nroughness_plate = \"{}\"\n",
            s(&data.join("roughness_sphere.txt")),
            s(&data.join("roughness_plate.txt"))
        ),
    );
    let out = tmp.path().join("out");
    ok(&["force", "--config", s(&cfg), "--out", s(&out)]);
    let t = table(&out.join("force.txt"), 5);
    assert!((t.rows[0][0] - 25.0).abs() < 1e-9);
    for r in &t.rows {
        // κ = 0 screening is the unscreened force
        assert_eq!(r[2], r[1]);
        assert!(r[3].abs() < r[1].abs());
        assert!(r[4].abs() >= r[1].abs());
    }
    let slope: f64 = t.get("loglog_slope_40_100nm").unwrap().parse().unwrap();
    assert!((-3.3..=-2.7).contains(&slope), "{slope}");
}

#[test]
fn conductivity_fit_recovers_exponent() {
    let tmp = TempDir::new().unwrap();
    let file = configs().join("data/conductivity.txt");
    ok(&["conductivity-fit", s(&file), "--out", s(tmp.path())]);
    let t = table(&tmp.path().join("conductivity.txt"), 3);
    let slope: f64 = t.get("slope").unwrap().parse().unwrap();
    assert!((slope - 0.82).abs() < 1e-3, "{slope}");
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let bad = write_config(tmp.path(), "[force]\ndistance = 3\n");
    assert_eq!(code(&["force", "--config", s(&bad), "--out", s(&out)]), 2);
    assert_eq!(code(&["eps", "--out", s(&out)]), 2);
    assert_eq!(
        code(&["eps", "--material", "unobtainium", "--out", s(&out)]),
        2
    );
    let mat = tmp.path().join("m.toml");
    fs::write(
        &mat,
        "[model]\nkind = \"constant\"\neps = 2.0\ncolour = 1\n",
    )
    .unwrap();
    assert_eq!(code(&["eps", "--material", s(&mat), "--out", s(&out)]), 2);
    let cfg = write_config(
        tmp.path(),
        "[simulate]\nvelocity_nm_s = 100.0\nmode = \"single\"\n",
    );
    assert_eq!(
        code(&["simulate", "--config", s(&cfg), "--out", s(&out)]),
        2
    );

    let missing = tmp.path().join("none.csv");
    assert_eq!(code(&["calibrate", s(&missing), "--out", s(&out)]), 4);
    let junk = tmp.path().join("junk.csv");
    fs::write(&junk, "# velocity_nm_s=-100\n1,2,3\n").unwrap();
    assert_eq!(code(&["calibrate", s(&junk), "--out", s(&out)]), 4);
}

const SMALL_TRIPLET: &str = "[simulate]\nmode = \"triplet\"\nruns = 3\n\
     spring_constant_n_m = 3.0\nrange_nm = [-100.0, 2600.0]\n";

#[test]
fn simulate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_TRIPLET);
    let dirs: Vec<PathBuf> = ["a", "b", "c", "d"]
        .iter()
        .map(|n| tmp.path().join(n))
        .collect();
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--out",
        s(&dirs[0]),
    ]);
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--out",
        s(&dirs[1]),
    ]);
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--threads",
        "1",
        "--out",
        s(&dirs[2]),
    ]);
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seed",
        "10",
        "--out",
        s(&dirs[3]),
    ]);
    same_files(&dirs[0], &dirs[1]);
    same_files(&dirs[0], &dirs[2]);
    assert_eq!(csv_files(&dirs[0]).len(), 9);
    let f = "run_000_v1.csv";
    assert_ne!(
        fs::read(dirs[0].join(f)).unwrap(),
        fs::read(dirs[3].join(f)).unwrap()
    );
    let truth = fs::read_to_string(dirs[0].join("run_000_v1.truth.json")).unwrap();
    assert!(truth.contains("\"contact_index\""));
}

fn calibration(dir: &Path) -> (f64, f64) {
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("calibration.json")).unwrap()).unwrap();
    (
        json["force_constant_nn_v"].as_f64().unwrap(),
        json["contact_offset_nm"].as_f64().unwrap(),
    )
}

#[test]
fn noiseless_calibration_round_trip() {
    let tmp = TempDir::new().unwrap();
    for (name, mode) in [("triplet", "triplet"), ("ensemble", "ensemble")] {
        let dir = tmp.path().join(name);
        let cfg = write_config(
            tmp.path(),
            &format!(
                "[simulate]\nmode = \"{mode}\"\nruns = 2\nnoise_pn = 0.0\n\
                 spring_constant_n_m = 3.0\nvelocity_nm_s = -3150.0\n"
            ),
        );
        ok(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(&dir.join("traces")),
        ]);
        let mut args = vec!["calibrate", "--out"];
        let out = dir.join("cal");
        args.push(s(&out));
        let files = csv_files(&dir.join("traces"));
        args.extend(files.iter().map(String::as_str));
        ok(&args);
        let (c, d0) = calibration(&out);
        assert!((c - 14.5).abs() < 0.02, "{name}: C = {c}");
        assert!((d0 - 12.0).abs() < 0.2, "{name}: d0 = {d0}");
        let report = table(&out.join("calibration.txt"), 6);
        assert_eq!(report.rows.len(), 3);
    }
}

#[test]
fn extract_recovers_noiseless_casimir_curve() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[simulate]\nmode = \"triplet\"\nruns = 2\nnoise_pn = 0.0\nforce = \"casimir\"\n\
         spring_constant_n_m = 3.0\ndrift_sigma_nm = 0.0\n",
    );
    let traces = tmp.path().join("traces");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&traces)]);
    let out = tmp.path().join("ex");
    let files = csv_files(&traces);
    let mut args = vec!["extract", "--out", s(&out)];
    args.extend(files.iter().map(String::as_str));
    ok(&args);
    let cas = casimir_force_model(&LayerSystem::gold_ethanol(), 5.0, 4000.0, 120).unwrap();
    let t = table(&out.join("ensemble.txt"), 4);
    let mut checked = 0;
    for r in t.rows.iter().filter(|r| (20.0..=100.0).contains(&r[1])) {
        let f = cas.eval(r[1]);
        assert!((r[2] - f).abs() < 0.02 * f.abs() + 3.0, "{r:?} vs {f}");
        checked += 1;
    }
    assert!(checked >= 75);
}

#[test]
fn extract_zero_force_ensemble() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[simulate]\nmode = \"triplet\"\nruns = 51\nspring_constant_n_m = 3.0\n\
         range_nm = [-100.0, 2600.0]\nseed = 31\n",
    );
    let traces = tmp.path().join("traces");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&traces)]);
    let files = csv_files(&traces);
    let analysis = configs().join("analysis.toml");
    let outs = [tmp.path().join("a"), tmp.path().join("b")];
    for out in &outs {
        let mut args = vec!["extract", "--config", s(&analysis), "--out", s(out)];
        args.extend(files.iter().map(String::as_str));
        ok(&args);
    }
    same_files(&outs[0], &outs[1]);

    let t = table(&outs[0].join("ensemble.txt"), 4);
    let n = 51f64.sqrt();
    let bins: Vec<&Vec<f64>> = t
        .rows
        .iter()
        .filter(|r| (20.0..=100.0).contains(&r[1]))
        .collect();
    let within = bins.iter().filter(|r| r[2].abs() <= 2.0 * r[3] / n).count();
    assert!(
        within as f64 >= 0.85 * bins.len() as f64,
        "{within} of {}",
        bins.len()
    );

    for sep in ["30", "60"] {
        let h = table(&outs[0].join(format!("histogram_{sep}nm.txt")), 2);
        let skew: f64 = h.get("skewness").unwrap().parse().unwrap();
        let kurt: f64 = h.get("excess_kurtosis").unwrap().parse().unwrap();
        assert!(
            skew.abs() <= 0.5 && kurt.abs() <= 0.5,
            "{sep} nm: {skew} {kurt}"
        );
    }
}
