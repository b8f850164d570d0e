use std::collections::HashMap;
use std::path::PathBuf;
use std::process::{Command as Process, Output};

use sps_cli::{execute, presets, schema, CliError, Command, Format, ScenarioConfig};

struct Csv {
    meta: HashMap<String, String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let mut meta = HashMap::new();
        let mut data = Vec::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(m) => {
                    let (k, v) = m.split_once(": ").unwrap();
                    meta.insert(k.to_string(), v.to_string());
                }
                None => data.push(line.split(',').map(String::from).collect::<Vec<_>>()),
            }
        }
        let header = data.remove(0);
        Csv { meta, header, rows: data }
    }

    fn meta(&self, key: &str) -> f64 {
        self.meta[key].parse().unwrap()
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let k = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[k].parse().unwrap()).collect()
    }
}

fn preset(name: &str) -> ScenarioConfig {
    presets::preset(name).unwrap()
}

fn with(name: &str, patch: serde_json::Value) -> ScenarioConfig {
    let mut v: serde_json::Value = serde_json::from_str(&preset(name).canonical()).unwrap();
    merge(&mut v, patch);
    ScenarioConfig::parse(&v.to_string()).unwrap()
}

fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn run(command: Command, config: &ScenarioConfig) -> Csv {
    Csv::parse(&execute(command, config, None, Format::Csv).unwrap().contents)
}

fn binary(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_cavity-sps")).args(args).output().unwrap()
}

fn scratch_file(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn shipped_schema_is_current() {
    assert_eq!(include_str!("../schema/scenario.schema.json"), schema());
}

#[test]
fn presets_round_trip() {
    for name in presets::names() {
        let c = preset(name);
        let again = ScenarioConfig::parse(&c.canonical()).unwrap();
        assert_eq!(again.canonical(), c.canonical(), "{name}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(&preset("ne8").canonical()).unwrap();
    v["pulse"]["width_fs"] = 1.0.into();
    assert!(matches!(ScenarioConfig::parse(&v.to_string()), Err(CliError::Config(_))));
    let mut v: serde_json::Value = serde_json::from_str(&preset("ne8").canonical()).unwrap();
    v["colour"] = "blue".into();
    assert!(matches!(ScenarioConfig::parse(&v.to_string()), Err(CliError::Config(_))));
}

#[test]
fn emit_reaches_tabulated_p1() {
    let out = run(Command::Emit, &preset("ne8"));
    let p1 = *out.column("p1").last().unwrap();
    assert!((p1 - 0.954).abs() < 0.02, "{p1}");
    assert_eq!(out.meta("p1_final"), p1);
    assert_eq!(out.meta["units"], "ps,1/ps,1,1,1,1");
    for key in ["config_sha256", "version", "seed"] {
        assert!(out.meta.contains_key(key), "{key}");
    }
}

#[test]
fn zero_pump_gives_zero_flux() {
    let config = with("ne8", serde_json::json!({ "pulse": { "rate_per_ps": 0.0 } }));
    let out = run(Command::Emit, &config);
    assert!(out.column("flux_per_ps").iter().all(|&f| f == 0.0));
    assert!(out.column("p1").iter().all(|&p| p == 0.0));
}

#[test]
fn halving_step_cap_leaves_p1_unchanged() {
    let p1 = |dt: f64| {
        let config = with("ne8", serde_json::json!({ "solver": { "dt_max_fs": dt } }));
        run(Command::Emit, &config).meta("p1_final")
    };
    let (a, b) = (p1(2.5), p1(1.25));
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn single_point_sweep_matches_emit() {
    let config = with(
        "ne8",
        serde_json::json!({ "sweep_q": { "start": 3700.0, "stop": 3700.0, "points": 1 } }),
    );
    let sweep = run(Command::SweepQ, &config);
    let emit = run(Command::Emit, &config);
    assert_eq!(sweep.column("quality_factor"), vec![3700.0]);
    assert_eq!(sweep.column("p1")[0], emit.meta("p1_final"));
}

#[test]
fn sweep_q_peaks_near_closed_form() {
    let out = run(Command::SweepQ, &preset("ne8"));
    let q_formula = out.meta("optimal_q_closed_form");
    let best = out.meta("best_q_on_grid");
    // The model's optimum sits at κ ≈ 2Ω₀, a quarter above the κ = 2.5Ω₀ formula.
    let kappa_2 = 1.25 * q_formula;
    assert!((best - kappa_2).abs() < 0.15 * kappa_2, "{best} vs {kappa_2}");
    let p1 = out.column("p1");
    let max = p1.iter().cloned().fold(0.0, f64::max);
    let at_formula = with(
        "ne8",
        serde_json::json!({ "sweep_q": { "start": q_formula, "stop": q_formula, "points": 1 } }),
    );
    let p = run(Command::SweepQ, &at_formula).column("p1")[0];
    assert!(max - p < 1e-3, "{p} vs {max}");
}

#[test]
fn strong_cavity_lowers_p1() {
    let q = 100.0 * 3774.5 * 1.25;
    let config = with("ne8", serde_json::json!({ "sweep_q": { "start": q, "stop": q, "points": 1 } }));
    let p = run(Command::SweepQ, &config).column("p1")[0];
    assert!(p < 0.85, "{p}");
}

#[test]
fn excitation_grid_respects_bounds() {
    let out = run(Command::SweepExcitation, &preset("ne8"));
    let (w, r) = (out.column("width_ps"), out.column("rate_per_ps"));
    let (p1, bound) = (out.column("p1"), out.column("p1_bound"));
    assert_eq!(p1.len(), 40);
    for k in 0..p1.len() {
        assert!(p1[k] <= bound[k] + 1e-9, "({}, {}): {} > {}", w[k], r[k], p1[k], bound[k]);
        if r[k] == 0.0 {
            assert_eq!(p1[k], 0.0);
        }
        if (w[k] - 0.16).abs() < 1e-9 && r[k] == 20.0 {
            assert!((p1[k] - 0.954).abs() < 0.02, "{}", p1[k]);
        }
    }
}

fn short_hbt(name: &str, cycles: usize) -> ScenarioConfig {
    with(name, serde_json::json!({ "hbt": { "cycles": cycles } }))
}

#[test]
fn siv_side_peaks_are_fifty_ps_apart() {
    let out = run(Command::Hbt, &short_hbt("siv-hbt", 1500));
    assert!((out.meta("period_ps") - 50.0).abs() < 1e-9);
    let delays = out.column("delay_ps");
    let counts = out.column("counts");
    let peak = |m: f64| {
        let (mut best, mut at) = (-1.0, 0.0);
        for (d, c) in delays.iter().zip(&counts) {
            if (d - 50.0 * m).abs() < 25.0 && *c > best {
                best = *c;
                at = *d;
            }
        }
        at
    };
    for m in 1..4 {
        let spacing = peak(m as f64 + 1.0) - peak(m as f64);
        assert!((spacing - 50.0).abs() < 5.0, "{spacing}");
    }
    assert!(out.meta("central_ratio") < 1e-3);
}

#[test]
fn seeded_output_is_byte_identical() {
    let config = short_hbt("ne8-hbt", 400);
    let a = execute(Command::Hbt, &config, Some(5), Format::Csv).unwrap();
    let b = execute(Command::Hbt, &config, Some(5), Format::Csv).unwrap();
    assert_eq!(a, b);
    let c = execute(Command::Hbt, &config, Some(6), Format::Csv).unwrap();
    assert_ne!(a.contents, c.contents);
}

#[test]
fn output_is_independent_of_thread_count() {
    let path = scratch_file("threads.json", &short_hbt("ne8-hbt", 400).canonical());
    let path = path.to_str().unwrap();
    let one = binary(&["hbt", "--config", path, "--seed", "3", "--threads", "1"]);
    let four = binary(&["hbt", "--config", path, "--seed", "3", "--threads", "4"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn empty_sweep_gives_header_only() {
    let config = with("fiber", serde_json::json!({ "sweep": { "points": 0 } }));
    let out = execute(Command::Keyrate, &config, None, Format::Csv).unwrap().contents;
    let data: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1);
    assert!(data[0].starts_with("loss_db,"));
}

#[test]
fn tables_reproduce_key_rate_figures() {
    let json = execute(Command::Tables, &ScenarioConfig::default(), None, Format::Csv).unwrap().contents;
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let row = |table: &str, source: &str| {
        v[table].as_array().unwrap().iter().find(|r| r["source"] == source).unwrap().clone()
    };
    let ne8 = row("table_ii", "ne8_cavity");
    let rate = ne8["rate_5km_bps"].as_f64().unwrap();
    assert!((rate - 62e6).abs() < 0.25 * 62e6, "{rate}");
    let cut = ne8["cutoff_db"].as_f64().unwrap();
    assert!((cut - 74.0).abs() < 1.5, "{cut}");
    let wcs = row("table_ii", "wcs_1550");
    let cut = wcs["cutoff_db"].as_f64().unwrap();
    assert!((cut - 92.0).abs() < 2.0, "{cut}");
    assert!(wcs.get("closed_form_cutoff_db").is_none());
    let n = row("table_iii", "ne8_cavity")["terrestrial"]["noise"].as_f64().unwrap();
    assert!((n - 1.6e-8).abs() < 0.15 * 1.6e-8, "{n}");
    let range = v["markers"]["decoy_fiber_range_km"].as_f64().unwrap();
    assert!((range - 420.0).abs() < 20.0, "{range}");
}

#[test]
fn exit_codes() {
    let ok = binary(&["presets"]);
    assert_eq!(ok.status.code(), Some(0));

    let unknown = scratch_file("unknown.json", r#"{"center": "ne8", "cavty": {"quality_factor": 3700}}"#);
    let out = binary(&["emit", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let mut v: serde_json::Value = serde_json::from_str(&preset("ne8").canonical()).unwrap();
    v["cavity"]["quality_factor"] = (-5.0).into();
    let bad = scratch_file("bad_value.json", &v.to_string());
    assert_eq!(binary(&["emit", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let missing = binary(&["emit", "--config", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(binary(&["emit", "--preset", "no-such-preset"]).status.code(), Some(2));
}
