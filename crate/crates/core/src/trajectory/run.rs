use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::unravel::{unravel, JumpOperator};
use crate::quantum::{default_window, Channel, DormandPrince, Level, SystemModel, Tolerances};
use crate::{Error, Result, C64};

const NORM_FLOOR: f64 = 1e-12;
/// Jump-time bisection stops at this fraction of the bracketing step.
const BISECTION_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    /// Cycle length (s); the shorter of the repetition period and the
    /// master-equation default window when `None`.
    pub window: Option<f64>,
    /// Number of evenly spaced population checkpoints, the last at the window end.
    pub checkpoints: usize,
    pub tolerances: Tolerances,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            window: None,
            checkpoints: 5,
            tolerances: Tolerances {
                rtol: 1e-7,
                atol: 1e-10,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    /// Time since the cycle trigger (s).
    pub time: f64,
    pub channel: Channel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleOutcome {
    /// At least one photon reached the waveguide.
    Waveguide,
    /// Lost to free-space emission on the ZPL or the sideband.
    Radiative,
    Nonradiative,
    /// Still shelved, never excited, or stored in the cavity at the window end.
    Undelivered,
}

impl CycleOutcome {
    pub const ALL: [CycleOutcome; 4] = [
        CycleOutcome::Waveguide,
        CycleOutcome::Radiative,
        CycleOutcome::Nonradiative,
        CycleOutcome::Undelivered,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub cycle_index: u64,
    pub seed: u64,
    pub events: Vec<JumpEvent>,
    /// Basis-state populations of the normalized wavefunction at each checkpoint.
    pub checkpoint_populations: Vec<Vec<f64>>,
}

impl JumpRecord {
    pub fn count(&self, channel: Channel) -> usize {
        self.events.iter().filter(|e| e.channel == channel).count()
    }

    /// Emission times into the waveguide.
    pub fn waveguide_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events
            .iter()
            .filter(|e| e.channel == Channel::CavityOutcoupling)
            .map(|e| e.time)
    }

    pub fn outcome(&self) -> CycleOutcome {
        let has = |c: Channel| self.events.iter().any(|e| e.channel == c);
        if has(Channel::CavityOutcoupling) {
            CycleOutcome::Waveguide
        } else if has(Channel::RadiativeZpl) || has(Channel::RadiativeSideband) {
            CycleOutcome::Radiative
        } else if has(Channel::Nonradiative) {
            CycleOutcome::Nonradiative
        } else {
            CycleOutcome::Undelivered
        }
    }
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub window: f64,
    pub checkpoint_times: Vec<f64>,
    pub records: Vec<JumpRecord>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Cycles per outcome, in [`CycleOutcome::ALL`] order.
    pub fn outcome_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for r in &self.records {
            let k = CycleOutcome::ALL.iter().position(|&o| o == r.outcome()).unwrap();
            counts[k] += 1;
        }
        counts
    }

    /// Fraction of cycles with at least one `channel` jump.
    pub fn fraction_with(&self, channel: Channel) -> f64 {
        let n = self.records.iter().filter(|r| r.count(channel) > 0).count();
        n as f64 / self.records.len().max(1) as f64
    }

    /// Ensemble population of basis `state` at checkpoint `k`.
    pub fn population(&self, k: usize, state: usize) -> PopulationEstimate {
        let n = self.records.len() as f64;
        let values = self.records.iter().map(|r| r.checkpoint_populations[k][state]);
        let (s, s2) = values.fold((0.0, 0.0), |(a, b), v| (a + v, b + v * v));
        let mean = s / n;
        let var = if n > 1.0 {
            ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        PopulationEstimate {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Precomputed pieces of `dψ/dt = −i H_eff(t) ψ`.
struct Generator {
    /// Entries of `−i H_eff` without the pump.
    constant: Vec<(usize, usize, C64)>,
    /// Basis states damped by the pump at rate `r/2`.
    pump_states: Vec<bool>,
    /// Connected component of each basis state under `H_eff`.
    component: Vec<usize>,
    jumps: Vec<JumpOperator>,
}

/// `H_eff` restricted to an invariant set of basis states.
struct Block {
    states: Vec<usize>,
    entries: Vec<(usize, usize, C64)>,
    pump_states: Vec<usize>,
}

impl Block {
    fn apply(&self, pump: f64, y: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &(i, j, v) in &self.entries {
            out[i] += v * y[j];
        }
        for &i in &self.pump_states {
            out[i] -= y[i] * (0.5 * pump);
        }
    }
}

impl Generator {
    fn new(model: &SystemModel) -> Result<Self> {
        let u = unravel(&model.hamiltonian, &model.dissipators)?;
        if !u.pump_damping.is_diagonal() {
            return Err(Error::param("pump", "jump operator must map basis states to basis states"));
        }
        let minus_i = C64::new(0.0, -1.0);
        let constant: Vec<(usize, usize, C64)> = u
            .h_eff
            .to_sparse()
            .entries()
            .iter()
            .map(|&(i, j, v)| (i, j, minus_i * v))
            .collect();
        let d = u.pump_damping.dim();
        let pump_states = (0..d).map(|i| u.pump_damping.matrix()[(i, i)].re != 0.0).collect();
        // Label components by their smallest state, relaxing until stable.
        let mut component: Vec<usize> = (0..d).collect();
        loop {
            let mut changed = false;
            for &(i, j, _) in &constant {
                let m = component[i].min(component[j]);
                if component[i] != m || component[j] != m {
                    component[i] = m;
                    component[j] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(Self {
            constant,
            pump_states,
            component,
            jumps: u.jumps,
        })
    }

    /// Union of the components touched by the support of `psi`.
    fn active_states(&self, psi: &[C64]) -> Vec<usize> {
        let touched: Vec<usize> = (0..psi.len())
            .filter(|&i| psi[i] != C64::new(0.0, 0.0))
            .map(|i| self.component[i])
            .collect();
        (0..psi.len())
            .filter(|&i| touched.contains(&self.component[i]))
            .collect()
    }

    fn block(&self, states: &[usize]) -> Block {
        let local = |i: usize| states.binary_search(&i).ok();
        let entries = self
            .constant
            .iter()
            .filter_map(|&(i, j, v)| Some((local(i)?, local(j)?, v)))
            .collect();
        let pump_states = (0..states.len())
            .filter(|&k| self.pump_states[states[k]])
            .collect();
        Block {
            states: states.to_vec(),
            entries,
            pump_states,
        }
    }
}

/// Per-thread scratch space.
struct Worker {
    tol: Tolerances,
    blocks: HashMap<Vec<usize>, Block>,
    solvers: HashMap<usize, DormandPrince>,
}

fn norm_sqr(psi: &[C64]) -> f64 {
    psi.iter().map(|v| v.norm_sqr()).sum()
}

/// Simulate `n_cycles` independent excitation cycles, each reset to
/// `|g0, 0_c, 0_w⟩` at the trigger. Cycle `k` draws from stream `k` of a
/// ChaCha8 generator keyed by `seed`, so results do not depend on scheduling.
pub fn run_cycles(
    model: &SystemModel,
    n_cycles: usize,
    seed: u64,
    options: &TrajectoryOptions,
) -> Result<Ensemble> {
    if n_cycles == 0 {
        return Err(Error::param("n_cycles", "need at least one cycle"));
    }
    if options.checkpoints == 0 {
        return Err(Error::param("checkpoints", "need at least one checkpoint"));
    }
    let window = options
        .window
        .unwrap_or_else(|| default_window(model).min(model.schedule.period()));
    if !(window > 0.0) {
        return Err(Error::param("window", "must be > 0"));
    }
    let generator = Generator::new(model)?;
    let checkpoint_times: Vec<f64> = (1..=options.checkpoints)
        .map(|k| window * k as f64 / options.checkpoints as f64)
        .collect();
    let mut cuts: Vec<f64> = model.schedule.breakpoints(window);
    cuts.extend(checkpoint_times.iter().copied());
    cuts.retain(|&c| c > 0.0 && c <= window);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let records = (0..n_cycles as u64)
        .into_par_iter()
        .map_init(
            || Worker {
                tol: options.tolerances,
                blocks: HashMap::new(),
                solvers: HashMap::new(),
            },
            |worker, k| run_one(model, &generator, worker, &cuts, &checkpoint_times, seed, k),
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        window,
        checkpoint_times,
        records,
    })
}

/// Evolve `y` under `block` from `*t` towards `end`, stopping early when the
/// norm falls to `threshold`. Returns whether a jump is due at the new `*t`.
#[allow(clippy::too_many_arguments)]
fn free_flight(
    block: &Block,
    solver: &mut DormandPrince,
    pump: f64,
    y: &mut [C64],
    t: &mut f64,
    end: f64,
    h: &mut f64,
    threshold: f64,
) -> Result<bool> {
    let mut f = |_: f64, x: &[C64], dx: &mut [C64]| block.apply(pump, x, dx);
    solver.prime(&mut f, *t, y);
    if *h <= 0.0 {
        *h = 0.01 * (end - *t);
    }
    while *t < end {
        let remaining = end - *t;
        let last = *h >= remaining * (1.0 - 1e-12);
        let step = if last { remaining } else { *h };
        let err = solver.try_step(&mut f, *t, y, step);
        if !err.is_finite() {
            return Err(Error::StepFailure {
                time: *t,
                reason: "non-finite error estimate".into(),
            });
        }
        let factor = DormandPrince::factor(err);
        if err > 1.0 {
            solver.stats.rejected += 1;
            *h = step * factor;
            if *h < 1e-12 * remaining.max(step) {
                return Err(Error::StepFailure {
                    time: *t,
                    reason: format!("step size {:e} collapsed", *h),
                });
            }
            continue;
        }
        if norm_sqr(solver.candidate()) > threshold {
            solver.accept(y);
            *t = if last { end } else { *t + step };
            if !last || factor < 1.0 {
                *h = step * factor;
            }
            continue;
        }
        // The norm crosses the threshold inside this step: bisect for the
        // jump time, always stepping from the same left endpoint.
        let (mut lo, mut hi) = (0.0, step);
        while hi - lo > BISECTION_TOL * step {
            let mid = 0.5 * (lo + hi);
            solver.try_step(&mut f, *t, y, mid);
            if norm_sqr(solver.candidate()) > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        solver.try_step(&mut f, *t, y, hi);
        y.copy_from_slice(solver.candidate());
        *t = if last && hi >= step { end } else { *t + hi };
        return Ok(true);
    }
    Ok(false)
}

fn run_one(
    model: &SystemModel,
    g: &Generator,
    worker: &mut Worker,
    cuts: &[f64],
    checkpoints: &[f64],
    seed: u64,
    cycle: u64,
) -> Result<JumpRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle);
    let d = model.space.total_dim();
    let mut psi = vec![C64::new(0.0, 0.0); d];
    psi[model.space.index(Level::Ground0, 0, 0)] = C64::new(1.0, 0.0);
    let mut threshold: f64 = rng.random();
    let mut events = Vec::new();
    let mut pops = Vec::with_capacity(checkpoints.len());
    let mut scratch = vec![C64::new(0.0, 0.0); d];
    let mut t = 0.0;
    let mut h = 0.0;
    let mut active = g.active_states(&psi);
    let mut y: Vec<C64> = active.iter().map(|&i| psi[i]).collect();

    for &end in cuts {
        let pump = model.schedule.rate_at(0.5 * (t + end));
        while t < end {
            if !worker.blocks.contains_key(&active) {
                worker.blocks.insert(active.clone(), g.block(&active));
            }
            let block = &worker.blocks[&active];
            let tol = worker.tol;
            let solver = worker
                .solvers
                .entry(active.len())
                .or_insert_with(|| DormandPrince::new(active.len(), tol));
            let jumped = free_flight(block, solver, pump, &mut y, &mut t, end, &mut h, threshold)?;
            if !jumped {
                break;
            }
            psi.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (k, &i) in block.states.iter().enumerate() {
                psi[i] = y[k];
            }
            let norm = norm_sqr(&psi);
            if norm < NORM_FLOOR {
                return Err(Error::StepFailure {
                    time: t,
                    reason: format!("wavefunction norm fell to {norm:e}"),
                });
            }
            let channel = jump(g, pump, &mut psi, &mut scratch, &mut rng, t)?;
            events.push(JumpEvent { time: t, channel });
            threshold = rng.random();
            active = g.active_states(&psi);
            y = active.iter().map(|&i| psi[i]).collect();
        }
        if checkpoints.contains(&end) {
            let n = norm_sqr(&y);
            let mut p = vec![0.0; d];
            for (k, &i) in active.iter().enumerate() {
                p[i] = y[k].norm_sqr() / n;
            }
            pops.push(p);
        }
    }
    Ok(JumpRecord {
        cycle_index: cycle,
        seed,
        events,
        checkpoint_populations: pops,
    })
}

/// Apply a randomly chosen jump to `psi` and normalize it.
fn jump(
    g: &Generator,
    pump: f64,
    psi: &mut [C64],
    scratch: &mut [C64],
    rng: &mut ChaCha8Rng,
    t: f64,
) -> Result<Channel> {
    let weights: Vec<f64> = g
        .jumps
        .iter()
        .map(|j| {
            let rate = if j.channel == Channel::Pump { pump } else { j.rate };
            if rate == 0.0 {
                0.0
            } else {
                rate * j.operator.norm_sqr_applied(psi, scratch)
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::StepFailure {
            time: t,
            reason: "norm decayed with no available jump".into(),
        });
    }
    let mut pick = rng.random::<f64>() * total;
    let mut chosen = weights.iter().rposition(|&w| w > 0.0).unwrap();
    for (k, &w) in weights.iter().enumerate() {
        if pick < w {
            chosen = k;
            break;
        }
        pick -= w;
    }
    let j = &g.jumps[chosen];
    j.operator.apply(psi, scratch);
    let n = norm_sqr(scratch).sqrt();
    for (p, s) in psi.iter_mut().zip(scratch.iter()) {
        *p = *s / n;
    }
    Ok(j.channel)
}
