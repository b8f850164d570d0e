use serde::{Deserialize, Serialize};

use super::operator::{embed, Operator};
use super::space::{Factor, HilbertSpace, Level};
use crate::emitter::{CavityCoupling, CenterSpec};
use crate::error::{ensure_nonnegative, ensure_positive};
use crate::{Error, Result};

/// Dissipative channel of the master equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `γ_e L[σ_he]`
    Shelve,
    /// `γ_h L[σ_g0h]`
    Deshelve,
    /// `γ_g L[σ_g0g1]`
    Phonon,
    /// `γ0 L[σ_g0e]`
    #[serde(rename = "radiative_0pl")]
    RadiativeZpl,
    /// `γ1 L[σ_g1e]`
    #[serde(rename = "radiative_1pl")]
    RadiativeSideband,
    /// `γ̃ L[σ_g0e]`
    Nonradiative,
    /// `κ L[a_w† a_c]`
    CavityOutcoupling,
    /// `r(t) L[σ_eg0]`
    Pump,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::Shelve,
        Channel::Deshelve,
        Channel::Phonon,
        Channel::RadiativeZpl,
        Channel::RadiativeSideband,
        Channel::Nonradiative,
        Channel::CavityOutcoupling,
        Channel::Pump,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Channel::Shelve => "shelve",
            Channel::Deshelve => "deshelve",
            Channel::Phonon => "phonon",
            Channel::RadiativeZpl => "radiative_0pl",
            Channel::RadiativeSideband => "radiative_1pl",
            Channel::Nonradiative => "nonradiative",
            Channel::CavityOutcoupling => "cavity_outcoupling",
            Channel::Pump => "pump",
        }
    }

    pub fn index(self) -> usize {
        Channel::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Top-hat trigger pulse repeated at `repetition_rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// Pulse width T (s).
    pub width: f64,
    /// Absorption rate r (s⁻¹).
    pub rate: f64,
    /// Pulse onset within the cycle (s).
    pub start: f64,
    /// Repetition rate ν (Hz).
    pub repetition_rate: f64,
}

impl PulseSchedule {
    pub fn new(width: f64, rate: f64, start: f64, repetition_rate: f64) -> Result<Self> {
        let s = Self {
            width,
            rate,
            start,
            repetition_rate,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("pulse width", self.width)?;
        ensure_nonnegative("pump rate", self.rate)?;
        ensure_nonnegative("pulse start", self.start)?;
        ensure_positive("repetition rate", self.repetition_rate)?;
        if self.width >= self.period() {
            return Err(Error::param(
                "pulse width",
                format!(
                    "T = {:e} s must be shorter than the repetition period {:e} s",
                    self.width,
                    self.period()
                ),
            ));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.repetition_rate
    }

    pub fn end(&self) -> f64 {
        self.start + self.width
    }

    /// Pump rate at time `t` within a cycle; the pulse occupies `[start, end)`.
    pub fn rate_at(&self, t: f64) -> f64 {
        if t >= self.start && t < self.end() {
            self.rate
        } else {
            0.0
        }
    }

    /// Times at which the pump switches, inside `(0, t_end)`.
    pub fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        [self.start, self.end()]
            .into_iter()
            .filter(|&t| t > 0.0 && t < t_end)
            .collect()
    }
}

/// One Lindblad term `rate·L[A]`. The pump term's rate is its peak value and
/// is gated by the pulse schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipatorTerm {
    pub channel: Channel,
    pub rate: f64,
    pub operator: Operator,
}

impl DissipatorTerm {
    pub fn new(channel: Channel, rate: f64, operator: Operator) -> Result<Self> {
        ensure_nonnegative("dissipator rate", rate)?;
        Ok(Self {
            channel,
            rate,
            operator,
        })
    }

    pub fn is_time_dependent(&self) -> bool {
        self.channel == Channel::Pump
    }

    /// Rate at time `t`, gating the pump with `schedule`.
    pub fn rate_at(&self, t: f64, schedule: Option<&PulseSchedule>) -> f64 {
        match (self.channel, schedule) {
            (Channel::Pump, Some(s)) => {
                if s.rate_at(t) > 0.0 {
                    self.rate
                } else {
                    0.0
                }
            }
            _ => self.rate,
        }
    }
}

fn atom(to: Level, from: Level, space: &HilbertSpace) -> Result<Operator> {
    embed(&Operator::transition(to, from), Factor::Atom, space)
}

/// Hamiltonian in the frame rotating at the cavity frequency:
/// `H = Δ σ_ee + δ σ_g1g1 + Σ_i Ω_i (a_c† σ_{g_i e} + h.c.)`.
pub fn build_hamiltonian(coupling: &CavityCoupling, space: &HilbertSpace) -> Result<Operator> {
    if !(coupling.omega_0 >= 0.0 && coupling.omega_1 >= 0.0) {
        return Err(Error::param("coupling", "Rabi frequencies must be >= 0"));
    }
    if !coupling.zpl_detuning.is_finite() || !coupling.sideband_splitting.is_finite() {
        return Err(Error::param("coupling", "level energies must be finite"));
    }
    let a_dag = embed(&Operator::creation(space.cavity_max()), Factor::Cavity, space)?;
    let mut h = atom(Level::Excited, Level::Excited, space)?
        .scale(coupling.zpl_detuning)
        .add(&atom(Level::Ground1, Level::Ground1, space)?.scale(coupling.sideband_splitting));
    for (omega, lower) in [
        (coupling.omega_0, Level::Ground0),
        (coupling.omega_1, Level::Ground1),
    ] {
        let up = a_dag.mul(&atom(lower, Level::Excited, space)?);
        h = h.add(&up.add(&up.dagger()).scale(omega));
    }
    Ok(h)
}

/// All eight Lindblad terms for `center` in the cavity; the pump term carries
/// the schedule's peak rate.
pub fn build_dissipators(
    center: &CenterSpec,
    coupling: &CavityCoupling,
    schedule: &PulseSchedule,
    space: &HilbertSpace,
) -> Result<Vec<DissipatorTerm>> {
    use Level::*;
    let a_c = embed(&Operator::annihilation(space.cavity_max()), Factor::Cavity, space)?;
    let a_w_dag = embed(&Operator::creation(space.waveguide_max()), Factor::Waveguide, space)?;
    vec![
        DissipatorTerm::new(Channel::Shelve, center.gamma_shelve, atom(Shelf, Excited, space)?),
        DissipatorTerm::new(Channel::Deshelve, center.gamma_deshelve, atom(Ground0, Shelf, space)?),
        DissipatorTerm::new(Channel::Phonon, center.gamma_phonon, atom(Ground0, Ground1, space)?),
        DissipatorTerm::new(Channel::RadiativeZpl, center.gamma_zpl(), atom(Ground0, Excited, space)?),
        DissipatorTerm::new(
            Channel::RadiativeSideband,
            center.gamma_sideband(),
            atom(Ground1, Excited, space)?,
        ),
        DissipatorTerm::new(
            Channel::Nonradiative,
            center.gamma_nonradiative,
            atom(Ground0, Excited, space)?,
        ),
        DissipatorTerm::new(Channel::CavityOutcoupling, coupling.kappa, a_w_dag.mul(&a_c)),
        DissipatorTerm::new(Channel::Pump, schedule.rate, atom(Excited, Ground0, space)?),
    ]
    .into_iter()
    .collect()
}

/// Complete master-equation specification for one excitation cycle.
#[derive(Clone, Debug)]
pub struct SystemModel {
    pub space: HilbertSpace,
    pub hamiltonian: Operator,
    pub dissipators: Vec<DissipatorTerm>,
    pub schedule: PulseSchedule,
    pub coupling: CavityCoupling,
}

impl SystemModel {
    pub fn new(
        center: &CenterSpec,
        coupling: CavityCoupling,
        schedule: PulseSchedule,
        space: HilbertSpace,
    ) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            space,
            hamiltonian: build_hamiltonian(&coupling, &space)?,
            dissipators: build_dissipators(center, &coupling, &schedule, &space)?,
            schedule,
            coupling,
        })
    }

    /// Largest rate the integrator has to resolve while the pump is on.
    pub fn fastest_rate(&self) -> f64 {
        self.coupling
            .kappa
            .max(self.coupling.omega_0)
            .max(self.schedule.rate)
    }

    /// `0.05 / max(κ, Ω0, r)`.
    pub fn default_dt_max(&self) -> f64 {
        0.05 / self.fastest_rate()
    }

    pub fn term(&self, channel: Channel) -> Option<&DissipatorTerm> {
        self.dissipators.iter().find(|d| d.channel == channel)
    }
}
