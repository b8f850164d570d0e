//! One pass/fail line per acceptance criterion, written straight to stderr so
//! the report survives output capture.

use std::io::Write;
use std::time::{Duration, Instant};

use cavity_sps::channel::*;
use cavity_sps::constants::to_db_loss;
use cavity_sps::emitter::excitation_bounds;
use cavity_sps::qkd::{closed_form_cutoff_db, source_cutoff_db, ProtocolParams, SourceSpec};
use cavity_sps::quantum::*;
use cavity_sps::trajectory::*;
use sps_cli::commands::{self, run_model, Tables};
use sps_cli::table::Cell;
use sps_cli::{presets, ScenarioConfig};

struct Verdict {
    pass: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, notes: Vec::new() }
    }

    /// Record `what`, failing the criterion unless `ok`.
    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
            self.notes.push(format!("FAIL {what}"));
        } else {
            self.notes.push(what);
        }
    }

    fn within(&mut self, label: &str, value: f64, target: f64, rel: f64) {
        let ok = (value - target).abs() <= rel * target.abs();
        self.check(ok, format!("{label} {value:.4e} vs {target:e} ±{}%", rel * 100.0));
    }

    fn within_abs(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        let ok = (value - target).abs() <= tol;
        self.check(ok, format!("{label} {value:.4} vs {target} ±{tol}"));
    }
}

fn preset(name: &str) -> ScenarioConfig {
    presets::preset(name).unwrap()
}

fn emit(config: &ScenarioConfig) -> (EmissionTrace, Duration) {
    let start = Instant::now();
    let model = config.model().unwrap();
    let trace = run_model(config, &model).unwrap();
    (trace, start.elapsed())
}

fn tables() -> Tables {
    commands::tables(&ScenarioConfig::default(), 0).unwrap()
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    for (name, target) in [("ne8", 0.954), ("siv", 0.812), ("nv", 0.95), ("ne8-short", 0.565), ("siv-short", 0.470)] {
        let (trace, elapsed) = emit(&preset(name));
        v.within_abs(&format!("{name} P1"), trace.summary.p1, target, 0.02);
        v.check(elapsed.as_secs_f64() < 10.0, format!("{name} {:.1} s < 10 s", elapsed.as_secs_f64()));
    }
    v
}

fn criterion_2(t: &Tables) -> Verdict {
    let mut v = Verdict::new();
    for (center, d, wc, o0, q, fp, fp_tol) in [
        ("NE8", 2.1e-29, 2.37, 127.0, 3700.0, 311.0, 0.05),
        ("SiV", 4.2e-29, 2.55, 290.0, 1800.0, 10.0, 0.10),
    ] {
        let row = &t.table_i.iter().find(|r| r.center == center).unwrap().cavity;
        v.within(&format!("{center} dipole"), row.zpl_dipole_cm, d, 0.10);
        v.within(&format!("{center} ω_c"), row.omega_c_rad_per_fs, wc, 0.10);
        v.within(&format!("{center} Ω0"), row.omega_0_rad_per_ns, o0, 0.10);
        v.within(&format!("{center} optimal Q"), row.optimal_q, q, 0.10);
        v.within(&format!("{center} F_p"), row.purcell_factor, fp, fp_tol);
    }
    v
}

/// Decoherence-free propagation of {|e,0⟩, |g0,1⟩} fed by the pump, by RK4.
fn manifold_oracle(width: f64, rate: f64, omega: f64) -> (f64, f64) {
    let steps = 4000;
    let h = width / steps as f64;
    let f = |t: f64, y: [f64; 4]| -> [f64; 4] {
        let p0 = (-rate * t).exp();
        [
            rate * p0 + 2.0 * omega * y[3],
            -2.0 * omega * y[3] - rate * y[1],
            -0.5 * rate * y[2],
            -omega * (y[0] - y[1]) - 0.5 * rate * y[3],
        ]
    };
    let add = |y: [f64; 4], d: [f64; 4], s: f64| std::array::from_fn::<f64, 4, _>(|i| y[i] + s * d[i]);
    let mut y = [0.0; 4];
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = f(t + h, add(y, k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    let p1 = y[0] + y[1];
    (p1, 1.0 - p1 - (-rate * width).exp())
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let mut worst: f64 = 0.0;
    for name in ["ne8", "siv"] {
        let omega = preset(name).model().unwrap().coupling.omega_0;
        for i in 0..20 {
            let width = 0.01e-12 + i as f64 * 0.02e-12;
            for j in 0..20 {
                let rate = j as f64 * 4e12;
                let b = excitation_bounds(width, rate, omega).unwrap();
                let (p1, pm) = manifold_oracle(width, rate, omega);
                worst = worst.max((b.p1 - p1).abs()).max((b.pm - pm).abs());
            }
        }
    }
    v.check(worst < 1e-6, format!("bounds vs oracle max |Δ| {worst:.1e} < 1e-6 on 2×20×20"));
    for name in ["ne8", "siv"] {
        let out = commands::sweep_excitation(&preset(name), 0).unwrap();
        let col = |c: &str| -> Vec<f64> {
            out.column(c)
                .unwrap()
                .iter()
                .map(|x| match x {
                    Cell::Num(v) => *v,
                    other => panic!("{other:?} is not a number"),
                })
                .collect()
        };
        let (p1, bound) = (col("p1"), col("p1_bound"));
        let over = p1.iter().zip(&bound).filter(|(p, b)| p > b).count();
        v.check(over == 0, format!("{name} P1 ≤ bound on {} cells ({over} over)", p1.len()));
    }
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let config = preset("ne8-hbt");
    let model = config.model().unwrap();
    let start = Instant::now();
    let ensemble = run_cycles(&model, 5000, 1, &TrajectoryOptions::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    v.check(elapsed < 60.0, format!("5000 cycles in {elapsed:.1} s < 60 s"));

    let rho0 = DensityMatrix::basis_state(model.space, Level::Ground0, 0, 0);
    let options = EvolveOptions { t_end: Some(ensemble.window), output_points: 401, ..Default::default() };
    let trace = evolve(&model, &rho0, &options).unwrap();
    let state = model.space.index(Level::Ground0, 0, 1);
    let last = trace.times.len() - 1;
    let mut worst: f64 = 0.0;
    for (k, &t) in ensemble.checkpoint_times.iter().enumerate() {
        let i = ((t / ensemble.window) * last as f64).round() as usize;
        let p = trace.p1[i];
        let sigma = (p * (1.0 - p) / 5000.0).sqrt();
        let z = (ensemble.population(k, state).mean - p).abs() / sigma.max(1e-12);
        worst = worst.max(z);
    }
    v.check(
        ensemble.checkpoint_times.len() == 5 && worst < 3.0,
        format!("{} checkpoints, worst deviation {worst:.2}σ < 3σ", ensemble.checkpoint_times.len()),
    );

    let hbt = config.hbt.unwrap();
    let h = hbt_histogram(&ensemble.records, hbt.bin_width_ps * 1e-12, 10e9, 2, 1.0).unwrap();
    v.check(h.central_ratio() < 1e-3, format!("HBT central/side {:.1e} < 1e-3", h.central_ratio()));

    let small = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_cycles(&model, 300, 7, &TrajectoryOptions::default()).unwrap())
    };
    v.check(small(1) == small(3), "seed 7 identical on 1 and 3 workers".into());
    v
}

fn criterion_5(t: &Tables) -> Verdict {
    let mut v = Verdict::new();
    let ii = |s: &str| t.table_ii.iter().find(|r| r.source == s).unwrap();
    let iii = |s: &str| t.table_iii.iter().find(|r| r.source == s).unwrap();
    v.within("fiber NE8", ii("ne8_cavity").noise, 3.3e-9, 0.15);
    v.within("terrestrial NE8", iii("ne8_cavity").terrestrial.noise, 1.6e-8, 0.15);
    v.within("terrestrial SiV", iii("siv_cavity").terrestrial.noise, 1.2e-8, 0.15);
    v.within("uplink NE8", iii("ne8_cavity").uplink.noise, 1.1e-8, 0.15);
    v.within("downlink NE8", iii("ne8_cavity").downlink.noise, 7.4e-7, 0.15);
    v.within("fiber WCS 1550", ii("wcs_1550").noise, 2.1e-11, 0.15);
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let canary = FreeSpacePath::canary();
    let down = FreeSpacePath::downlink(637e-9, MIN_FILTER_WIDTH);
    let down_ir = FreeSpacePath::downlink(1550e-9, MIN_FILTER_WIDTH);
    let up = FreeSpacePath::uplink(637e-9, 0.0, MIN_FILTER_WIDTH);
    let up_high = FreeSpacePath::uplink(637e-9, 3e3, MIN_FILTER_WIDTH);
    v.within("Canary w_eff (m)", canary.weff().unwrap(), 3.5, 0.10);
    v.within("downlink 637 nm w_eff", down.weff().unwrap(), 12.0, 0.15);
    v.within("downlink 1550 nm w_eff", down_ir.weff().unwrap(), 28.0, 0.15);
    v.within("uplink w_eff", up.weff().unwrap(), 31.0, 0.30);
    v.within_abs("Canary η_c (dB)", -to_db_loss(canary.collection().unwrap()), -14.0, 2.0);
    v.within_abs("uplink η_c (dB)", -to_db_loss(up.collection().unwrap()), -53.0, 2.0);
    v.within_abs("uplink 3 km η_c (dB)", -to_db_loss(up_high.collection().unwrap()), -30.0, 2.0);
    v
}

const FIBER_CUTOFFS: [(&str, f64); 8] = [
    ("nv_cavity", 68.0), ("nv_bare", 28.0), ("ne8_cavity", 74.0), ("ne8_bare", 55.0),
    ("siv_cavity", 75.0), ("siv_bare", 50.0), ("wcs_650", 66.0), ("wcs_1550", 92.0),
];

const FREE_SPACE_CUTOFFS: [(&str, [f64; 3]); 8] = [
    ("nv_cavity", [68.0, 68.0, 58.0]), ("nv_bare", [27.0, 28.0, 17.0]),
    ("ne8_cavity", [72.0, 73.0, 58.0]), ("ne8_bare", [54.0, 55.0, 43.0]),
    ("siv_cavity", [73.0, 74.0, 58.0]), ("siv_bare", [49.0, 50.0, 38.0]),
    ("wcs_650", [65.0, 66.0, 54.0]), ("wcs_1550", [69.0, 71.0, 51.0]),
];

fn criterion_7(t: &Tables) -> Verdict {
    let mut v = Verdict::new();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (s, quoted) in FIBER_CUTOFFS {
        let row = t.table_ii.iter().find(|r| r.source == s).unwrap();
        worst = worst.max((row.cutoff_db - quoted).abs());
        count += 1;
    }
    for (s, quoted) in FREE_SPACE_CUTOFFS {
        let row = t.table_iii.iter().find(|r| r.source == s).unwrap();
        for (c, q) in [&row.terrestrial, &row.uplink, &row.downlink].iter().zip(quoted) {
            worst = worst.max((c.cutoff_db - q).abs());
            count += 1;
        }
    }
    v.check(worst <= 1.5, format!("{count} cutoffs, worst |Δ| {worst:.2} dB ≤ 1.5"));

    let rate_5km = |s: &str| t.table_ii.iter().find(|r| r.source == s).unwrap().rate_5km_bps / 1e6;
    let terrestrial = |s: &str| {
        t.markers.terrestrial_150km_rate_bps.iter().find(|(n, _)| n == s).unwrap().1 / 1e6
    };
    v.within("NE8 fiber 5 km (Mbit/s)", rate_5km("ne8_cavity"), 62.0, 0.25);
    v.within("NV fiber 5 km", rate_5km("nv_cavity"), 0.08, 0.25);
    let siv = rate_5km("siv_cavity");
    v.check((0.7..70.0).contains(&siv), format!("SiV fiber 5 km {siv:.1} within an order of magnitude of 7"));
    v.within("NE8 terrestrial 150 km", terrestrial("ne8_cavity"), 0.8, 0.25);
    v.within("SiV terrestrial 150 km", terrestrial("siv_cavity"), 1.8, 0.25);
    let decoy = rate_5km("wcs_1550");
    v.check(decoy > 200.0, format!("decoy fiber 5 km {decoy:.1} > 200"));
    v.within_abs("decoy range (km)", t.markers.decoy_fiber_range_km, 420.0, 20.0);
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let (mut trace_err, mut herm_err, mut min_eig): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut fock, mut halving): (f64, f64) = (0.0, 0.0);
    for name in presets::names() {
        let config = preset(name);
        if config.center.is_none() {
            continue;
        }
        let model = config.model().unwrap();
        let base = run_model(&config, &model).unwrap().summary;
        trace_err = trace_err.max(base.max_trace_error);
        herm_err = herm_err.max(base.max_hermiticity_error);
        min_eig = min_eig.min(base.min_eigenvalue);

        let rho0 = DensityMatrix::basis_state(model.space, Level::Ground0, 0, 0);
        let fine = EvolveOptions { dt_max: Some(0.5 * model.default_dt_max()), ..Default::default() };
        halving = halving.max((evolve(&model, &rho0, &fine).unwrap().summary.p1 - base.p1).abs());

        let space = HilbertSpace::new(3, 3).unwrap();
        let big = SystemModel::new(&config.center().unwrap(), model.coupling, model.schedule, space).unwrap();
        let rho0 = DensityMatrix::basis_state(big.space, Level::Ground0, 0, 0);
        let larger = evolve(&big, &rho0, &EvolveOptions::default()).unwrap().summary;
        fock = fock.max((larger.p1 - base.p1).abs()).max((larger.pm - base.pm).abs());
    }
    v.check(trace_err < 1e-8, format!("trace error {trace_err:.1e} < 1e-8"));
    v.check(herm_err < 1e-9, format!("Hermiticity error {herm_err:.1e} < 1e-9"));
    v.check(min_eig >= -1e-8, format!("min eigenvalue {min_eig:.1e} ≥ -1e-8"));
    v.check(fock < 1e-6, format!("Fock 2→3 |ΔP| {fock:.1e} < 1e-6"));
    v.check(halving < 1e-4, format!("step halving |ΔP1| {halving:.1e} < 1e-4"));

    let det = DetectorSpec::silicon(1.0 / 30e9);
    let mut budgets = vec![LinkBudget::fiber(
        &FiberChannel { attenuation: 2.5, length: 5.0, coupling: 0.5 },
        &det,
        DEFAULT_OPTICS,
    )
    .unwrap()];
    for path in [
        FreeSpacePath::terrestrial(794e-9, 150e3, 0.15e-9),
        FreeSpacePath::uplink(794e-9, 0.0, 0.15e-9),
        FreeSpacePath::downlink(794e-9, 0.15e-9),
    ] {
        budgets.push(LinkBudget::free_space(&path, &det, DEFAULT_OPTICS, Some(4.5)).unwrap());
    }
    let db_err = budgets
        .iter()
        .map(|b| (b.breakdown_db().iter().map(|(_, x)| x).sum::<f64>() - b.eta_db()).abs())
        .fold(0.0, f64::max);
    v.check(db_err < 1e-9, format!("dB decomposition error {db_err:.1e} < 1e-9"));

    let p = ProtocolParams::default();
    let mut gap: f64 = 0.0;
    for (p1, g2, n) in [(0.54, 1e-7, 5e-8), (0.565, 1e-7, 3.3e-9), (0.47, 1e-7, 1.5e-9), (0.0285, 0.0, 4.2e-5), (0.577, 0.0, 7.4e-7)] {
        let s = SourceSpec::Sps { rate: 1e9, p1, g2, attenuation: None, spectral_width: 0.0 };
        let search = source_cutoff_db(&s, n, &p).unwrap();
        gap = gap.max((search - closed_form_cutoff_db(&s, n, &p).unwrap()).abs());
    }
    let wcs = SourceSpec::Wcs { rate: 1e9, mean_photon_number: None, spectral_width: 0.0 };
    gap = gap.max((source_cutoff_db(&wcs, 1e-8, &p).unwrap() - closed_form_cutoff_db(&wcs, 1e-8, &p).unwrap()).abs());
    v.check(gap < 0.5, format!("closed form vs bisection {gap:.3} dB < 0.5"));
    v
}

#[test]
fn acceptance() {
    let tables = tables();
    let verdicts = [
        criterion_1(),
        criterion_2(&tables),
        criterion_3(),
        criterion_4(),
        criterion_5(&tables),
        criterion_6(),
        criterion_7(&tables),
        criterion_8(),
    ];
    let mut stderr = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (k, v) in verdicts.iter().enumerate() {
        let status = if v.pass { "PASS" } else { "FAIL" };
        writeln!(stderr, "criterion {}: {status}: {}", k + 1, v.notes.join("; ")).unwrap();
        if !v.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
