//! The six scenario commands.

use cavity_sps::emitter::{
    bare_center_p1, bare_center_zpl_p1, cavity_coupling, diffraction_limited_area, excitation_point,
    optimal_q, purcell_factor, CenterSpec,
};
use cavity_sps::qkd::{closed_form_cutoff_db, ProtocolParams};
use cavity_sps::quantum::{evolve, spectral_width_fwhm, DensityMatrix, EmissionTrace, Level, PulseSchedule, SystemModel};
use cavity_sps::trajectory::{hbt_histogram, run_cycles, CycleOutcome, TrajectoryOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, SweepVariable};
use crate::error::{CliError, Result};
use crate::link::Link;
use crate::presets::preset;
use crate::table::{format_number, Cell, Provenance, ResultTable};

/// Below this a key rate is reported as zero and insecure.
pub const MIN_SECURE_RATE: f64 = 1.0;

/// Sources reported in the key-rate tables, in row order.
pub const TABLE_SOURCES: [&str; 8] = [
    "nv_cavity", "nv_bare", "ne8_cavity", "ne8_bare", "siv_cavity", "siv_bare", "wcs_650", "wcs_1550",
];

pub fn run_model(config: &ScenarioConfig, model: &SystemModel) -> Result<EmissionTrace> {
    let rho0 = DensityMatrix::basis_state(model.space, Level::Ground0, 0, 0);
    Ok(evolve(model, &rho0, &config.evolve_options())?)
}

pub fn emit(config: &ScenarioConfig, seed: u64) -> Result<ResultTable> {
    let center = config.center()?;
    let model = config.model()?;
    let trace = run_model(config, &model)?;
    let s = &trace.summary;
    let mut t = ResultTable::new(
        "emit",
        &[
            ("time_ps", "ps"),
            ("flux_per_ps", "1/ps"),
            ("p1", "1"),
            ("shelved", "1"),
            ("sideband_population", "1"),
            ("excited", "1"),
        ],
        Provenance::new(&config.canonical(), seed),
    );
    t.meta("center", &center.name);
    t.meta("p1_final", s.p1);
    t.meta("pm_final", s.pm);
    t.meta("mean_emission_time_ps", s.mean_emission_time * 1e12);
    if s.p1 > 0.0 {
        let width = spectral_width_fwhm(&trace.times, &trace.flux, center.zpl_wavelength)?;
        t.meta("spectral_width_nm", width * 1e9);
        t.meta("spectral_width_convention", "FWHM of |FFT(flux)|^2");
    }
    t.meta("shelving_probability", s.shelving_probability);
    t.meta("sideband_leakage", s.sideband_leakage);
    t.meta("max_trace_error", s.max_trace_error);
    t.meta("min_eigenvalue", s.min_eigenvalue);
    t.meta("steps", s.steps);
    for k in 0..trace.times.len() {
        t.push(vec![
            (trace.times[k] * 1e12).into(),
            (trace.flux[k] * 1e-12).into(),
            trace.p1[k].into(),
            trace.shelved[k].into(),
            trace.sideband_population[k].into(),
            trace.excited[k].into(),
        ]);
    }
    Ok(t)
}

pub fn sweep_q(config: &ScenarioConfig, seed: u64) -> Result<ResultTable> {
    let sweep = config
        .sweep_q
        .ok_or_else(|| CliError::Config("missing `sweep_q`".into()))?;
    let qs = sweep.values();
    let rows: Vec<(f64, f64, f64, f64)> = qs
        .par_iter()
        .map(|&q| {
            let model = config.model_with(Some(q), None)?;
            let s = run_model(config, &model)?.summary;
            let c = &model.coupling;
            let fp = purcell_factor(c.omega_0, config.center()?.gamma_total(), c.kappa)?;
            Ok((q, s.p1, s.pm, fp))
        })
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(
        "sweep-q",
        &[("quality_factor", "1"), ("p1", "1"), ("pm", "1"), ("purcell_factor", "1")],
        Provenance::new(&config.canonical(), seed),
    );
    let center = config.center()?;
    let cavity = config.cavity(&center)?;
    let c = cavity_coupling(&center, &cavity)?;
    t.meta("optimal_q_closed_form", optimal_q(c.omega_0, cavity.omega()));
    if let Some(best) = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        t.meta("best_q_on_grid", best.0);
    }
    for (q, p1, pm, fp) in rows {
        t.push(vec![q.into(), p1.into(), pm.into(), fp.into()]);
    }
    Ok(t)
}

pub fn sweep_excitation(config: &ScenarioConfig, seed: u64) -> Result<ResultTable> {
    let grid = config
        .sweep_excitation
        .ok_or_else(|| CliError::Config("missing `sweep_excitation`".into()))?;
    let pulse = config.pulse()?;
    let center = config.center()?;
    let cavity = config.cavity(&center)?;
    let coupling = cavity_coupling(&center, &cavity)?;
    let area = grid
        .spot_area_um2
        .map_or_else(|| diffraction_limited_area(center.zpl_wavelength), |a| a * 1e-12);
    let cells: Vec<(f64, f64)> = grid
        .width_ps
        .values()
        .into_iter()
        .flat_map(|w| grid.rate_per_ps.values().into_iter().map(move |r| (w, r)))
        .collect();
    let rows: Vec<Vec<Cell>> = cells
        .par_iter()
        .map(|&(w, r)| {
            let schedule = PulseSchedule::new(
                w * 1e-12,
                r * 1e12,
                pulse.start_ps * 1e-12,
                pulse.repetition_rate_ghz * 1e9,
            )?;
            let model = config.model_with(None, Some(schedule))?;
            let s = run_model(config, &model)?.summary;
            let x = excitation_point(&center, &coupling, w * 1e-12, r * 1e12, area)?;
            Ok(vec![
                w.into(),
                r.into(),
                s.p1.into(),
                s.pm.into(),
                x.p1_bound.into(),
                x.pm_bound.into(),
                (x.intensity * 1e-13).into(),
                (x.pulse_energy * 1e12).into(),
                x.exceeds_photochromism.into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(
        "sweep-excitation",
        &[
            ("width_ps", "ps"),
            ("rate_per_ps", "1/ps"),
            ("p1", "1"),
            ("pm", "1"),
            ("p1_bound", "1"),
            ("pm_bound", "1"),
            ("intensity_gw_per_cm2", "GW/cm^2"),
            ("pulse_energy_pj", "pJ"),
            ("exceeds_photochromism", ""),
        ],
        Provenance::new(&config.canonical(), seed),
    );
    t.meta("center", &center.name);
    t.meta("spot_area_um2", area * 1e12);
    for row in rows {
        t.push(row);
    }
    Ok(t)
}

pub fn hbt(config: &ScenarioConfig, seed: u64) -> Result<ResultTable> {
    let h = config
        .hbt
        .ok_or_else(|| CliError::Config("missing `hbt`".into()))?;
    let model = config.model()?;
    let options = TrajectoryOptions {
        window: h.window_ps.map(|w| w * 1e-12),
        checkpoints: h.checkpoints,
        ..TrajectoryOptions::default()
    };
    let ensemble = run_cycles(&model, h.cycles, seed, &options)?;
    let rep = model.schedule.repetition_rate;
    let splitter = h.splitter_seed.unwrap_or(seed.wrapping_add(1));
    let hist = hbt_histogram(&ensemble.records, h.bin_width_ps * 1e-12, rep, splitter, h.efficiency)?;
    let mut t = ResultTable::new(
        "hbt",
        &[("delay_ps", "ps"), ("counts", "1"), ("normalized", "1")],
        Provenance::new(&config.canonical(), seed),
    );
    let counts = ensemble.outcome_counts();
    t.meta("cycles", h.cycles);
    t.meta("period_ps", 1e12 / rep);
    t.meta("bin_width_ps", h.bin_width_ps);
    t.meta("splitter_seed", splitter);
    t.meta("central_ratio", hist.central_ratio());
    t.meta("mean_side_peak", hist.mean_side_peak());
    for (o, n) in CycleOutcome::ALL.iter().zip(counts) {
        t.meta(&format!("cycles_{}", format!("{o:?}").to_lowercase()), n);
    }
    t.meta("delay_convention", "lower bin edge of t_B - t_A");
    let normalized = hist.normalized();
    for ((d, &c), n) in hist.delays().zip(&hist.counts).zip(normalized) {
        t.push(vec![(d * 1e12).into(), c.into(), n.into()]);
    }
    Ok(t)
}

/// Rate rounded to the reporting convention: below 1 bit/s is zero and insecure.
pub fn reported_rate(rate: f64, secure: bool) -> (f64, bool) {
    if secure && rate >= MIN_SECURE_RATE {
        (rate, true)
    } else {
        (0.0, false)
    }
}

pub fn links(config: &ScenarioConfig) -> Result<Vec<Link>> {
    config.links.iter().map(Link::from_config).collect()
}

pub fn keyrate(config: &ScenarioConfig, seed: u64) -> Result<ResultTable> {
    let sweep = config
        .sweep
        .ok_or_else(|| CliError::Config("missing `sweep`".into()))?;
    let protocol = config.protocol()?;
    let links = links(config)?;
    if links.is_empty() {
        return Err(CliError::Config("`links` is empty".into()));
    }
    let (xname, xunit) = sweep.variable.column();
    let mut columns = vec![(xname.to_string(), xunit)];
    for l in &links {
        columns.push((format!("{}_rate_bps", l.name), "bit/s"));
        columns.push((format!("{}_secure", l.name), ""));
    }
    let refs: Vec<(&str, &str)> = columns.iter().map(|(n, u)| (n.as_str(), *u)).collect();
    let mut t = ResultTable::new("keyrate", &refs, Provenance::new(&config.canonical(), seed));
    t.meta("sifting", protocol.sifting);
    t.meta("baseline_error", protocol.baseline_error);
    t.meta("ec_efficiency", protocol.ec_efficiency);
    for l in &links {
        let b = l.budget()?;
        t.meta(
            &format!("link_{}", l.name),
            format!(
                "eta_db={} noise={} cutoff_db={}",
                format_number(b.eta_db()),
                format_number(b.noise),
                format_number(l.cutoff_db(&protocol)?)
            ),
        );
    }
    let xs = sweep.values();
    let rows: Vec<Vec<Cell>> = xs
        .par_iter()
        .map(|&x| {
            let mut row: Vec<Cell> = vec![x.into()];
            for l in &links {
                let k = l.rate(sweep.variable, x, &protocol)?;
                let (g, ok) = reported_rate(k.rate, k.secure);
                row.push(g.into());
                row.push(ok.into());
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    for row in rows {
        t.push(row);
    }
    Ok(t)
}

/// Largest fiber or path length (km) with a secure key, by bisection to 0.1 km.
pub fn max_distance_km(link: &Link, protocol: &ProtocolParams, ceiling_km: f64) -> Result<f64> {
    let secure = |d: f64| -> Result<bool> {
        let k = link.rate(SweepVariable::DistanceKm, d, protocol)?;
        Ok(reported_rate(k.rate, k.secure).1)
    };
    let (mut lo, mut hi) = (1e-3, ceiling_km);
    if !secure(lo)? {
        return Ok(0.0);
    }
    if secure(hi)? {
        return Ok(hi);
    }
    while hi - lo > 0.1 {
        let mid = 0.5 * (lo + hi);
        if secure(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, Serialize)]
pub struct CavityRow {
    pub zpl_dipole_cm: f64,
    pub wavelength_nm: f64,
    pub omega_c_rad_per_fs: f64,
    pub quality_factor: f64,
    pub optimal_q: f64,
    pub omega_0_rad_per_ns: f64,
    pub purcell_factor: f64,
    pub pump_rate_per_ps: f64,
    pub pulse_width_ps: f64,
    pub mean_time_ps: f64,
    pub spectral_width_nm: f64,
    pub p1: f64,
    pub pm: f64,
    pub repetition_rate_ghz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BareRow {
    pub total_dipole_cm: f64,
    pub lifetime_ps: f64,
    pub p1: f64,
    pub zpl_p1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableIRow {
    pub center: String,
    pub cavity: CavityRow,
    pub bare: BareRow,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableIIRow {
    pub source: String,
    pub gate_ns: f64,
    pub attenuation_db_per_km: f64,
    pub coupling: f64,
    pub noise: f64,
    pub cutoff_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_cutoff_db: Option<f64>,
    pub rate_5km_bps: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseCutoff {
    pub noise: f64,
    pub cutoff_db: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableIIIRow {
    pub source: String,
    pub terrestrial: NoiseCutoff,
    pub uplink: NoiseCutoff,
    pub downlink: NoiseCutoff,
}

#[derive(Clone, Debug, Serialize)]
pub struct Markers {
    pub terrestrial_150km_rate_bps: Vec<(String, f64)>,
    pub decoy_fiber_range_km: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tables {
    pub table_i: Vec<TableIRow>,
    pub table_ii: Vec<TableIIRow>,
    pub table_iii: Vec<TableIIIRow>,
    pub markers: Markers,
    pub protocol: ProtocolParams,
    pub provenance: Provenance,
}

impl Tables {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tables serialize");
        s.push('\n');
        s
    }
}

fn table_i_row(name: &str) -> Result<TableIRow> {
    let config = preset(name)?;
    let center: CenterSpec = config.center()?;
    let cavity = config.cavity(&center)?;
    let model = config.model()?;
    let trace = run_model(&config, &model)?;
    let c = &model.coupling;
    let s = &trace.summary;
    Ok(TableIRow {
        center: center.name.clone(),
        cavity: CavityRow {
            zpl_dipole_cm: center.zpl_dipole()?,
            wavelength_nm: cavity.wavelength * 1e9,
            omega_c_rad_per_fs: cavity.omega() * 1e-15,
            quality_factor: cavity.quality_factor,
            optimal_q: optimal_q(c.omega_0, cavity.omega()),
            omega_0_rad_per_ns: c.omega_0 * 1e-9,
            purcell_factor: purcell_factor(c.omega_0, center.gamma_total(), c.kappa)?,
            pump_rate_per_ps: model.schedule.rate * 1e-12,
            pulse_width_ps: model.schedule.width * 1e12,
            mean_time_ps: s.mean_emission_time * 1e12,
            spectral_width_nm: spectral_width_fwhm(&trace.times, &trace.flux, center.zpl_wavelength)? * 1e9,
            p1: s.p1,
            pm: s.pm,
            repetition_rate_ghz: model.schedule.repetition_rate * 1e-9,
        },
        bare: BareRow {
            total_dipole_cm: center.total_dipole()?,
            lifetime_ps: center.lifetime * 1e12,
            p1: bare_center_p1(&center),
            zpl_p1: bare_center_zpl_p1(&center),
        },
    })
}

fn preset_links(name: &str) -> Result<Vec<Link>> {
    let all = links(&preset(name)?)?;
    TABLE_SOURCES
        .iter()
        .map(|s| {
            all.iter()
                .find(|l| l.name == *s)
                .cloned()
                .ok_or_else(|| CliError::Config(format!("preset `{name}` lacks link `{s}`")))
        })
        .collect()
}

fn noise_cutoff(link: &Link, protocol: &ProtocolParams) -> Result<NoiseCutoff> {
    Ok(NoiseCutoff {
        noise: link.noise()?,
        cutoff_db: link.cutoff_db(protocol)?,
    })
}

/// Tables I–III from the bundled presets, under the configured protocol.
pub fn tables(config: &ScenarioConfig, seed: u64) -> Result<Tables> {
    let protocol = config.protocol()?;
    let table_i = ["nv", "ne8", "siv"]
        .par_iter()
        .map(|n| table_i_row(n))
        .collect::<Result<Vec<_>>>()?;

    let fiber = preset_links("fiber")?;
    let mut table_ii = Vec::new();
    for l in &fiber {
        let b = l.budget()?;
        let crate::config::ChannelConfig::Fiber(f) = &l.channel else {
            unreachable!("fiber preset")
        };
        let k = cavity_sps::qkd::secure_rate(&l.source, &b, &protocol)?;
        table_ii.push(TableIIRow {
            source: l.name.clone(),
            gate_ns: l.detector.gate * 1e9,
            attenuation_db_per_km: f.attenuation_db_per_km,
            coupling: f.coupling,
            noise: b.noise,
            cutoff_db: l.cutoff_db(&protocol)?,
            closed_form_cutoff_db: closed_form_cutoff_db(&l.source, b.noise, &protocol),
            rate_5km_bps: reported_rate(k.rate, k.secure).0,
        });
    }

    let terrestrial = preset_links("terrestrial")?;
    let uplink = preset_links("uplink")?;
    let downlink = preset_links("downlink")?;
    let mut table_iii = Vec::new();
    for k in 0..TABLE_SOURCES.len() {
        table_iii.push(TableIIIRow {
            source: TABLE_SOURCES[k].into(),
            terrestrial: noise_cutoff(&terrestrial[k], &protocol)?,
            uplink: noise_cutoff(&uplink[k], &protocol)?,
            downlink: noise_cutoff(&downlink[k], &protocol)?,
        });
    }

    let terrestrial_150km_rate_bps = terrestrial
        .iter()
        .map(|l| {
            let k = cavity_sps::qkd::secure_rate(&l.source, &l.budget()?, &protocol)?;
            Ok((l.name.clone(), reported_rate(k.rate, k.secure).0))
        })
        .collect::<Result<_>>()?;
    let decoy = fiber.iter().find(|l| l.name == "wcs_1550").expect("listed source");
    let markers = Markers {
        terrestrial_150km_rate_bps,
        decoy_fiber_range_km: max_distance_km(decoy, &protocol, 2000.0)?,
    };
    Ok(Tables {
        table_i,
        table_ii,
        table_iii,
        markers,
        protocol,
        provenance: Provenance::new(&config.canonical(), seed),
    })
}
