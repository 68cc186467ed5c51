use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sta_cli::{parse_config, parse_table, Settings, Table};

fn sta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sta")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sta(args);
    assert!(out.status.success(), "sta {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn lz_figures_example_writes_three_protocols() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lz");
    ok(&["lz-inversion", "--protocols", "bare,zrot,cd1", "--alpha", "-10", "--x0", "1", "--T", "2", "--out", path(&out)]);
    for p in ["bare", "zrot", "cd1"] {
        for f in ["hamiltonian.csv", "populations.csv", "summary.json", "plot.svg"] {
            assert!(out.join(p).join(f).is_file(), "{p}/{f}");
        }
    }
    assert!(out.join("populations.svg").is_file() && out.join("hamiltonian.svg").is_file());

    let pops = Table::read(&out.join("bare/populations.csv")).unwrap();
    assert_eq!(pops.columns, ["t", "P1", "P2", "eigen_P1"]);
    assert_eq!(pops.len(), 2001);
    // the σ_y-free protocols
    for p in ["zrot", "cd1"] {
        let h = Table::read(&out.join(p).join("hamiltonian.csv")).unwrap();
        assert!(h.column("Y").unwrap().iter().all(|y| y.abs() < 1e-12), "{p}");
    }
    let summary = json(&out.join("summary.json"));
    let protocols = summary["protocols"].as_array().unwrap();
    assert_eq!(protocols.len(), 3);
    let bare = &protocols[0];
    assert!(bare["fidelity"].as_f64().unwrap() < 0.9);
    for s in &protocols[1..] {
        assert!(s["fidelity"].as_f64().unwrap() > 1.0 - 1e-6, "{s}");
    }
    assert_eq!(summary["settings"]["alpha"]["source"], "flag");
    assert_eq!(summary["settings"]["tolerance"]["source"], "default");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        ok(&["lz-inversion", "--report-points", "201", "--out", path(out)]);
    }
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), fb.len());
    assert!(fa.len() > 20);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        if x.extension().unwrap() == "json" {
            // the output path is part of the recorded settings
            let (mut jx, mut jy) = (json(x), json(y));
            for j in [&mut jx, &mut jy] {
                if let Some(s) = j.get_mut("settings") {
                    s["out"] = serde_json::Value::Null;
                }
            }
            assert_eq!(jx, jy, "{}", x.display());
        } else {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
}

#[test]
fn quasi_adiabatic_sweep_bare_matches_cd0() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("slow");
    ok(&["lz-inversion", "--protocols", "bare,cd0", "--T", "1e6", "--tolerance", "1e-8", "--report-points", "501", "--out", path(&out)]);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["settings"]["alpha"]["source"], "derived");
    assert_eq!(summary["settings"]["alpha"]["value"], "-0.00002");
    let report = ok(&[
        "compare",
        path(&out.join("bare/populations.csv")),
        path(&out.join("cd0/populations.csv")),
        "--tolerance",
        "1e-4",
    ]);
    assert_eq!(report.matches("PASS").count(), 3, "{report}");
}

#[test]
fn compare_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lz");
    ok(&["lz-inversion", "--protocols", "bare,cd0,zrot", "--report-points", "101", "--out", path(&out)]);
    let csv = |p: &str| out.join(p).join("populations.csv");
    let same = sta(&["compare", path(&csv("cd0")), path(&csv("zrot")), "--column", "P1", "--tolerance", "1e-6"]);
    assert_eq!(same.status.code(), Some(0));
    let differ = sta(&["compare", path(&csv("bare")), path(&csv("cd0")), "--column", "P1"]);
    assert_eq!(differ.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&differ.stdout).starts_with("FAIL"));

    let mut shifted = Table::read(&csv("cd0")).unwrap();
    shifted.rows[7][0] += 1e-3;
    let shifted_path = tmp.path().join("shifted.csv");
    shifted.write(&shifted_path).unwrap();
    let mismatch = sta(&["compare", path(&csv("cd0")), path(&shifted_path)]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("time grids differ"));
    let missing = sta(&["compare", path(&csv("cd0")), path(&csv("zrot")), "--column", "P7"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    let out = tmp.path().join("lz");
    fs::write(&conf, format!("scenario = lz-inversion\nprotocols = cd0\nT = 3\nx0 = 2\nreport_points = 11\nout = {}\n", out.display())).unwrap();
    ok(&["lz-inversion", "--config", path(&conf), "--T", "2"]);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["settings"]["T"]["value"], "2");
    assert_eq!(summary["settings"]["T"]["source"], "flag");
    assert_eq!(summary["settings"]["x0"]["source"], "config");
    assert_eq!(Table::read(&out.join("cd0/populations.csv")).unwrap().len(), 11);
}

#[test]
fn invalid_input_fails_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let cases: [&[&str]; 5] = [
        &["lz-inversion", "--protocols", "bare,cd7"],
        &["lz-inversion", "--x0", "0"],
        &["lz-inversion", "--protocols", "modified"],
        &["trap-expansion", "--protocols", "zrot"],
        &["atom-lab-frame", "--omega0", "5"],
    ];
    for args in cases {
        let mut args = args.to_vec();
        args.extend(["--out", path(&out)]);
        let res = sta(&args);
        assert_eq!(res.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
        assert!(!out.exists(), "{args:?} wrote output");
    }
    let conf = tmp.path().join("bad.conf");
    fs::write(&conf, "alpha = -10\n\nthis line is broken\n").unwrap();
    let res = sta(&["lz-inversion", "--config", path(&conf)]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("config line 3"));
}

#[test]
fn atom_lab_frame_matches_rotating_frame() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("atom");
    ok(&["atom-lab-frame", "--protocols", "bare,cd0,cd0-only", "--report-points", "401", "--out", path(&out)]);
    let chirped = tmp.path().join("chirped");
    ok(&["atom-lab-frame", "--protocols", "cd0-only", "--carrier", "chirped", "--report-points", "401", "--out", path(&chirped)]);
    for dir in [&out, &chirped] {
        for s in json(&dir.join("summary.json"))["protocols"].as_array().unwrap() {
            let d = s["rotating_frame_max_population_difference"].as_f64().unwrap();
            assert!(d < 1e-6, "{s}");
        }
    }
}

#[test]
fn trap_expansion_example() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("trap");
    let stdout = ok(&[
        "trap-expansion",
        "--omega-start",
        "1",
        "--omega-end",
        "0.1",
        "--tf",
        "1",
        "--protocols",
        "reference,cd,modified",
        "--out",
        path(&out),
    ]);
    println!("{stdout}");
    let summary = json(&out.join("summary.json"));
    let p0 = |k: usize| summary["protocols"][k]["final_p0"].as_f64().unwrap();
    assert_eq!(summary["protocols"][0]["protocol"], "reference");
    assert!(p0(0) < 0.9);
    assert!(p0(1) > 1.0 - 1e-6 && p0(2) > 1.0 - 1e-6);
    assert!((p0(0) - summary["protocols"][0]["oracle_p0"].as_f64().unwrap()).abs() < 1e-6);
    assert!(summary["cd_vs_modified"]["max_density_l1"].as_f64().unwrap() < 1e-5);
    let psi = parse_table(&fs::read_to_string(out.join("cd/psi_final.csv")).unwrap()).unwrap();
    assert_eq!(psi.columns, ["q", "re", "im", "density"]);
    assert_eq!(psi.len(), 2048);
    assert!(out.join("ramp.csv").is_file() && out.join("widths.svg").is_file());
}

#[test]
fn shipped_configs_resolve() {
    for (name, scenario, defaults) in [
        ("lz_inversion.conf", sta_cli::lz::SCENARIO, sta_cli::lz::DEFAULTS),
        ("atom_lab_frame.conf", sta_cli::atom::SCENARIO, sta_cli::atom::DEFAULTS),
        ("trap_expansion.conf", sta_cli::trap::SCENARIO, sta_cli::trap::DEFAULTS),
    ] {
        let text = fs::read_to_string(configs_dir().join(name)).unwrap();
        let config = parse_config(&text).unwrap();
        let settings = Settings::resolve(scenario, defaults, Some(&config), &[]).unwrap();
        assert!(settings.iter().any(|(_, s)| s.source == sta_cli::Source::Config), "{name}");
    }
}
