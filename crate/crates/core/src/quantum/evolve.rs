use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::integrator::{DormandPrince, StepControl, Tolerances};
use super::lindblad::Liouvillian;
use super::model::{Channel, SystemModel};
use super::operator::DensityMatrix;
use super::space::Level;
use crate::constants::C;
use crate::{Error, Result, C64};

const TRACE_ABORT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// End of the integration window (s); chosen from the slowest emission
    /// rate when `None`.
    pub t_end: Option<f64>,
    /// Step cap (s); `0.05/max(κ, Ω0, r)` when `None`.
    pub dt_max: Option<f64>,
    /// Number of uniformly spaced output samples including both endpoints.
    pub output_points: usize,
    pub tolerances: Tolerances,
    pub keep_snapshots: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_end: None,
            dt_max: None,
            output_points: 401,
            tolerances: Tolerances::default(),
            keep_snapshots: false,
        }
    }
}

/// Asymptotic figures of one excitation cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmissionSummary {
    /// `⟨g0,0_c,1_w|ρ|g0,0_c,1_w⟩` at the end of the window.
    pub p1: f64,
    /// Population with two or more waveguide photons.
    pub pm: f64,
    /// Population with exactly one waveguide photon, any atom/cavity state.
    pub single_photon_any: f64,
    pub shelved_final: f64,
    /// Expected number of shelving transitions, `∫γ_e P_e dt`.
    pub shelving_probability: f64,
    /// Photons out-coupled while the center sits in |g1⟩.
    pub sideband_leakage: f64,
    /// `⟨g1,0_c,1_w|ρ|g1,0_c,1_w⟩` at the end of the window.
    pub sideband_population: f64,
    /// First moment of the waveguide flux (s).
    pub mean_emission_time: f64,
    /// Expected jump counts per channel, in [`Channel::ALL`] order.
    pub jump_counts: Vec<f64>,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl EmissionSummary {
    pub fn jump_count(&self, channel: Channel) -> f64 {
        self.jump_counts[channel.index()]
    }
}

/// Observables sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct EmissionTrace {
    pub times: Vec<f64>,
    pub p1: Vec<f64>,
    /// `ρ̇_ww = ⟨g0,0_c,1_w|Lρ|g0,0_c,1_w⟩` (s⁻¹).
    pub flux: Vec<f64>,
    pub shelved: Vec<f64>,
    pub sideband_population: Vec<f64>,
    pub excited: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub snapshots: Vec<DensityMatrix>,
    pub summary: EmissionSummary,
}

/// Positions refer to the working vector of the (restricted) Liouvillian.
struct Layout {
    n: usize,
    p1_pos: Option<usize>,
    /// (position, weight) pairs for `Σ n_c P_g1`.
    g1_cavity: Vec<(usize, f64)>,
    /// (channel slot, rate, diag entries of A†A as (position, weight)).
    channels: Vec<(usize, f64, Vec<(usize, f64)>)>,
    kappa: f64,
    time_scale: f64,
}

const ACC_CHANNELS: usize = 8;
const ACC_LEAK: usize = 8;
const ACC_M0: usize = 9;
const ACC_M1: usize = 10;
const N_ACC: usize = 11;

fn layout(model: &SystemModel, liouvillian: &Liouvillian, time_scale: f64) -> Layout {
    let space = &model.space;
    let d = space.total_dim();
    let pos = |i: usize| liouvillian.position(i * d + i);
    let p1_pos = pos(space.index(Level::Ground0, 0, 1));
    let mut g1_cavity = Vec::new();
    for (i, (level, nc, _)) in space.states().enumerate() {
        if let (Level::Ground1, true, Some(p)) = (level, nc > 0, pos(i)) {
            g1_cavity.push((p, nc as f64));
        }
    }
    let channels = model
        .dissipators
        .iter()
        .map(|term| {
            // Every jump operator here maps basis states to basis states, so
            // A†A is diagonal.
            let a = term.operator.matrix();
            let ada = a.adjoint() * a;
            let diag = (0..d)
                .filter(|&i| ada[(i, i)].re != 0.0)
                .filter_map(|i| pos(i).map(|p| (p, ada[(i, i)].re)))
                .collect();
            (term.channel.index(), term.rate, diag)
        })
        .collect();
    Layout {
        n: liouvillian.len(),
        p1_pos,
        g1_cavity,
        channels,
        kappa: model.coupling.kappa,
        time_scale,
    }
}

/// Integrate the master equation through one excitation cycle.
pub fn evolve(
    model: &SystemModel,
    rho0: &DensityMatrix,
    options: &EvolveOptions,
) -> Result<EmissionTrace> {
    let space = model.space;
    let d = space.total_dim();
    if rho0.space() != &space {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: rho0.space().total_dim(),
        });
    }
    if options.output_points < 2 {
        return Err(Error::param("output_points", "need at least 2 samples"));
    }
    let t0 = rho0.time();
    let t_end = options.t_end.unwrap_or_else(|| default_window(model) + t0);
    if !(t_end > t0) {
        return Err(Error::param("t_end", "must exceed the initial time"));
    }
    let dt_max = options.dt_max.unwrap_or_else(|| model.default_dt_max());
    if !(dt_max > 0.0) {
        return Err(Error::param("dt_max", "must be > 0"));
    }
    // Work in the sector of ρ entries reachable from the initial support.
    let full = rho0.to_vec();
    let support: Vec<usize> = (0..full.len()).filter(|&k| full[k] != C64::new(0.0, 0.0)).collect();
    let liouvillian = Liouvillian::from_model(model)?.restricted_to_reachable(&support);
    let lay = layout(model, &liouvillian, t_end);
    let mut y = liouvillian.compress(&full);
    y.resize(lay.n + N_ACC, C64::new(0.0, 0.0));

    let mut solver = DormandPrince::new(y.len(), options.tolerances);
    let n_out = options.output_points;
    let times: Vec<f64> = (0..n_out)
        .map(|k| t0 + (t_end - t0) * k as f64 / (n_out - 1) as f64)
        .collect();
    let mut breaks: Vec<f64> = model.schedule.breakpoints(t_end);
    breaks.retain(|&b| b > t0);

    let mut trace = EmissionTrace {
        times: Vec::with_capacity(n_out),
        p1: Vec::with_capacity(n_out),
        flux: Vec::with_capacity(n_out),
        shelved: Vec::with_capacity(n_out),
        sideband_population: Vec::with_capacity(n_out),
        excited: Vec::with_capacity(n_out),
        trace_error: Vec::with_capacity(n_out),
        snapshots: Vec::new(),
        summary: EmissionSummary {
            p1: 0.0,
            pm: 0.0,
            single_photon_any: 0.0,
            shelved_final: 0.0,
            shelving_probability: 0.0,
            sideband_leakage: 0.0,
            sideband_population: 0.0,
            mean_emission_time: 0.0,
            jump_counts: vec![0.0; ACC_CHANNELS],
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            t_end,
            dt_max,
            steps: 0,
            rejected_steps: 0,
        },
    };

    let p1_state = space.index(Level::Ground0, 0, 1);
    let record = |t: f64, y: &[C64], trace: &mut EmissionTrace| -> Result<()> {
        let rho = DensityMatrix::from_vec(space, &liouvillian.expand(&y[..lay.n]), t)?;
        let tr = rho.trace();
        let err = (tr - 1.0).abs();
        if err > TRACE_ABORT {
            return Err(Error::StepFailure {
                time: t,
                reason: format!("trace drifted to {tr:.9}"),
            });
        }
        let s = &mut trace.summary;
        s.max_trace_error = s.max_trace_error.max(err);
        s.max_hermiticity_error = s.max_hermiticity_error.max(rho.hermiticity_error());
        s.min_eigenvalue = s.min_eigenvalue.min(rho.min_eigenvalue());
        let pump = liouvillian.pump_rate(t);
        trace.times.push(t);
        trace.p1.push(lay.p1_pos.map_or(0.0, |p| y[p].re));
        trace
            .flux
            .push(liouvillian.population_rate(pump, p1_state, &y[..lay.n]));
        trace.shelved.push(rho.level_population(Level::Shelf));
        trace.excited.push(rho.level_population(Level::Excited));
        trace
            .sideband_population
            .push(rho.population(Level::Ground1, 0, 1));
        trace.trace_error.push(err);
        if options.keep_snapshots {
            trace.snapshots.push(rho);
        }
        Ok(())
    };

    record(t0, &y, &mut trace)?;
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut cuts = vec![a];
        cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        for seg in cuts.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            let pump = liouvillian.pump_rate(0.5 * (s0 + s1));
            let cap = if pump > 0.0 {
                dt_max
            } else {
                options
                    .dt_max
                    .unwrap_or(0.05 / model.coupling.kappa.max(model.coupling.omega_0))
            };
            let rhs = |t: f64, x: &[C64], dx: &mut [C64]| {
                let rho = &x[..lay.n];
                let (drho, dacc) = dx.split_at_mut(lay.n);
                liouvillian.apply(pump, rho, drho);
                for (slot, rate, entries) in &lay.channels {
                    let rate = if *slot == Channel::Pump.index() { pump } else { *rate };
                    let v: f64 = entries.iter().map(|&(i, w)| w * rho[i].re).sum();
                    dacc[*slot] = C64::new(rate * v, 0.0);
                }
                let leak: f64 = lay.g1_cavity.iter().map(|&(i, w)| w * rho[i].re).sum();
                dacc[ACC_LEAK] = C64::new(lay.kappa * leak, 0.0);
                let flux = lay.p1_pos.map_or(0.0, |p| drho[p].re);
                dacc[ACC_M0] = C64::new(flux, 0.0);
                dacc[ACC_M1] = C64::new(flux * t / lay.time_scale, 0.0);
            };
            solver.integrate(rhs, s0, s1, &mut y, &StepControl::with_dt_max(cap))?;
        }
        record(b, &y, &mut trace)?;
    }

    let acc = &y[lay.n..];
    let rho = DensityMatrix::from_vec(space, &liouvillian.expand(&y[..lay.n]), t_end)?;
    let s = &mut trace.summary;
    s.p1 = rho.population(Level::Ground0, 0, 1);
    let mut single = 0.0;
    let mut multi = 0.0;
    for (i, (_, _, nw)) in space.states().enumerate() {
        let p = rho.matrix()[(i, i)].re;
        match nw {
            0 => {}
            1 => single += p,
            _ => multi += p,
        }
    }
    s.pm = multi;
    s.single_photon_any = single;
    s.shelved_final = rho.level_population(Level::Shelf);
    for k in 0..ACC_CHANNELS {
        s.jump_counts[k] = acc[k].re;
    }
    s.shelving_probability = acc[Channel::Shelve.index()].re;
    s.sideband_leakage = acc[ACC_LEAK].re;
    s.sideband_population = rho.population(Level::Ground1, 0, 1);
    let m0 = acc[ACC_M0].re;
    s.mean_emission_time = if m0 > 0.0 {
        acc[ACC_M1].re * lay.time_scale / m0 - t0
    } else {
        0.0
    };
    s.steps = solver.stats.accepted;
    s.rejected_steps = solver.stats.rejected;
    Ok(trace)
}

/// Default integration window: pulse end plus 30 slowest emission lifetimes.
pub fn default_window(model: &SystemModel) -> f64 {
    let c = &model.coupling;
    let cavity_limited = if c.kappa > 0.0 {
        (0.5 * c.kappa).min(4.0 * c.omega_0 * c.omega_0 / c.kappa)
    } else {
        0.0
    };
    let free: f64 = model
        .dissipators
        .iter()
        .filter(|t| {
            matches!(
                t.channel,
                Channel::Shelve
                    | Channel::RadiativeZpl
                    | Channel::RadiativeSideband
                    | Channel::Nonradiative
            )
        })
        .map(|t| t.rate)
        .sum();
    let rate = cavity_limited.max(free);
    model.schedule.end() + 30.0 / rate
}

/// Full width at half maximum (m) of the spectrum `|F[flux]|²` of a uniformly
/// sampled flux profile, converted to wavelength at `wavelength`.
pub fn spectral_width_fwhm(times: &[f64], flux: &[f64], wavelength: f64) -> Result<f64> {
    if times.len() < 4 || times.len() != flux.len() {
        return Err(Error::Empty("spectral width needs matching samples"));
    }
    let dt = times[1] - times[0];
    let n = (times.len() * 64).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = flux.iter().map(|&f| Complex::new(f.max(0.0), 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm_sqr()).collect();
    let peak = power[0];
    if !(peak > 0.0) {
        return Err(Error::Empty("flux profile carries no power"));
    }
    let half = 0.5 * peak;
    let k = power
        .iter()
        .position(|&p| p < half)
        .ok_or(Error::Empty("spectrum does not fall to half maximum"))?;
    let frac = (power[k - 1] - half) / (power[k - 1] - power[k]);
    let df = 1.0 / (n as f64 * dt);
    let f_half = (k as f64 - 1.0 + frac) * df;
    Ok(wavelength * wavelength * 2.0 * f_half / C)
}
