//! Closed-form emitter and cavity relations: dipole moments, couplings,
//! Purcell enhancement, excitation bounds and pump accounting.

use serde::{Deserialize, Serialize};

use crate::constants::{angular_frequency, C, EPSILON_0, HBAR, TWO_PI};
use crate::error::{ensure_nonnegative, ensure_positive};
use crate::{Error, Result};

/// Peak intensity (W/m²) above which photochromism has been observed.
pub const PHOTOCHROMISM_INTENSITY: f64 = 50e9 * 1e4;

/// Vibronic parameters of one color center. All rates are angular (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterSpec {
    pub name: String,
    /// Zero-phonon-line wavelength (m).
    pub zpl_wavelength: f64,
    /// Photoluminescence lifetime (s).
    pub lifetime: f64,
    /// Relative integrated intensity of the ZPL, `γ0/(γ0+γ1)`.
    pub zpl_fraction: f64,
    /// `γ_e`: |e⟩ → |h⟩.
    pub gamma_shelve: f64,
    /// `γ_h`: |h⟩ → |g0⟩.
    pub gamma_deshelve: f64,
    /// `γ̃`: nonradiative |e⟩ → |g0⟩.
    pub gamma_nonradiative: f64,
    /// `γ_g`: phononic |g1⟩ → |g0⟩.
    pub gamma_phonon: f64,
    pub refractive_index: f64,
    /// Spectral offset of the first phonon line from the ZPL (m).
    pub sideband_offset: f64,
    /// Fixed ZPL coupling Ω0 (rad/s) replacing the dipole-derived value.
    #[serde(default)]
    pub omega_0_override: Option<f64>,
}

impl CenterSpec {
    /// Nickel-nitrogen complex, ZPL at 794 nm.
    pub fn ne8() -> Self {
        Self {
            name: "NE8".into(),
            zpl_wavelength: 794e-9,
            lifetime: 11.5e-9,
            zpl_fraction: 0.7,
            gamma_shelve: TWO_PI * 17e6,
            gamma_deshelve: TWO_PI * 6.1e6,
            gamma_nonradiative: 0.0,
            gamma_phonon: TWO_PI * 1e12,
            refractive_index: 2.4,
            sideband_offset: 25e-9,
            omega_0_override: None,
        }
    }

    /// Silicon-vacancy center, ZPL at 738 nm, quantum yield ~0.05.
    pub fn siv() -> Self {
        let lifetime = 2.7e-9;
        Self {
            name: "SiV".into(),
            zpl_wavelength: 738e-9,
            lifetime,
            zpl_fraction: 0.8,
            gamma_shelve: TWO_PI * 30e6,
            gamma_deshelve: TWO_PI * 10e6,
            gamma_nonradiative: 19.0 * TWO_PI / lifetime,
            gamma_phonon: TWO_PI * 1e12,
            refractive_index: 2.4,
            sideband_offset: 25e-9,
            omega_0_override: None,
        }
    }

    /// Nitrogen-vacancy center, ZPL at 637 nm, with Ω0 fixed at 9.3 GHz.
    pub fn nv() -> Self {
        Self {
            name: "NV".into(),
            zpl_wavelength: 637e-9,
            lifetime: 11.6e-9,
            zpl_fraction: 2.5 / 86.2,
            gamma_shelve: TWO_PI * 1.6e6,
            gamma_deshelve: TWO_PI * 0.5e6,
            gamma_nonradiative: 0.0,
            gamma_phonon: TWO_PI * 1e12,
            refractive_index: 2.4,
            sideband_offset: 25e-9,
            omega_0_override: Some(9.3e9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("zpl_wavelength", self.zpl_wavelength)?;
        ensure_positive("lifetime", self.lifetime)?;
        ensure_positive("refractive_index", self.refractive_index)?;
        ensure_nonnegative("sideband_offset", self.sideband_offset)?;
        if !(self.zpl_fraction > 0.0 && self.zpl_fraction <= 1.0) {
            return Err(Error::param("zpl_fraction", "must lie in (0, 1]"));
        }
        ensure_nonnegative("gamma_shelve", self.gamma_shelve)?;
        ensure_nonnegative("gamma_deshelve", self.gamma_deshelve)?;
        ensure_nonnegative("gamma_nonradiative", self.gamma_nonradiative)?;
        ensure_nonnegative("gamma_phonon", self.gamma_phonon)?;
        if let Some(o) = self.omega_0_override {
            ensure_positive("omega_0_override", o)?;
        }
        Ok(())
    }

    /// Radiative rate `2π/τ` (rad/s).
    pub fn gamma_radiative(&self) -> f64 {
        TWO_PI / self.lifetime
    }

    /// `γ0`, the ZPL share of the radiative rate.
    pub fn gamma_zpl(&self) -> f64 {
        self.zpl_fraction * self.gamma_radiative()
    }

    /// `γ1`, the phonon-sideband share of the radiative rate.
    pub fn gamma_sideband(&self) -> f64 {
        (1.0 - self.zpl_fraction) * self.gamma_radiative()
    }

    /// `γ0/γ1`; infinite for a pure-ZPL emitter.
    pub fn branching_ratio(&self) -> f64 {
        self.gamma_zpl() / self.gamma_sideband()
    }

    /// `γ_total = 2π/τ + γ̃ + γ_e`, the total depletion rate of |e⟩.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_radiative() + self.gamma_nonradiative + self.gamma_shelve
    }

    pub fn zpl_angular_frequency(&self) -> f64 {
        angular_frequency(self.zpl_wavelength)
    }

    pub fn sideband_angular_frequency(&self) -> f64 {
        angular_frequency(self.zpl_wavelength + self.sideband_offset)
    }

    /// ZPL transition dipole (C·m).
    pub fn zpl_dipole(&self) -> Result<f64> {
        dipole_moment(
            self.gamma_zpl(),
            self.zpl_angular_frequency(),
            self.refractive_index,
        )
    }

    /// Sideband transition dipole (C·m); zero when the ZPL carries all emission.
    pub fn sideband_dipole(&self) -> Result<f64> {
        if self.gamma_sideband() == 0.0 {
            return Ok(0.0);
        }
        dipole_moment(
            self.gamma_sideband(),
            self.sideband_angular_frequency(),
            self.refractive_index,
        )
    }

    /// Dipole summed in quadrature over the ZPL and sideband.
    pub fn total_dipole(&self) -> Result<f64> {
        Ok(self.zpl_dipole()?.hypot(self.sideband_dipole()?))
    }
}

/// Single-mode cavity with derived loss rate `κ = ω_c/(2Q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// Resonance wavelength (m).
    pub wavelength: f64,
    pub quality_factor: f64,
    /// Mode volume (m³).
    pub mode_volume: f64,
}

impl CavitySpec {
    pub fn new(wavelength: f64, quality_factor: f64, mode_volume: f64) -> Result<Self> {
        let spec = Self {
            wavelength,
            quality_factor,
            mode_volume,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Cavity of volume `(λ/n)³` resonant with the center's ZPL.
    pub fn resonant(center: &CenterSpec, quality_factor: f64) -> Result<Self> {
        let lambda = center.zpl_wavelength;
        Self::new(
            lambda,
            quality_factor,
            (lambda / center.refractive_index).powi(3),
        )
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("cavity wavelength", self.wavelength)?;
        ensure_positive("quality_factor", self.quality_factor)?;
        ensure_positive("mode_volume", self.mode_volume)?;
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        angular_frequency(self.wavelength)
    }

    pub fn kappa(&self) -> f64 {
        self.omega() / (2.0 * self.quality_factor)
    }

    pub fn with_quality_factor(&self, quality_factor: f64) -> Self {
        Self {
            quality_factor,
            ..*self
        }
    }
}

/// Coupling constants of a center in a cavity, in the frame rotating at `ω_c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityCoupling {
    /// Ω0, ZPL single-photon Rabi frequency (rad/s).
    pub omega_0: f64,
    /// Ω1, sideband single-photon Rabi frequency (rad/s).
    pub omega_1: f64,
    pub kappa: f64,
    /// `ω_ZPL − ω_c` (rad/s).
    pub zpl_detuning: f64,
    /// Energy of |g1⟩ above |g0⟩, `ω_ZPL − ω_1` (rad/s).
    pub sideband_splitting: f64,
}

pub fn cavity_coupling(center: &CenterSpec, cavity: &CavitySpec) -> Result<CavityCoupling> {
    center.validate()?;
    cavity.validate()?;
    let wc = cavity.omega();
    let omega_0 = match center.omega_0_override {
        Some(o) => o,
        None => rabi_frequency(center.zpl_dipole()?, wc, cavity.mode_volume)?,
    };
    let d1 = center.sideband_dipole()?;
    let omega_1 = if d1 > 0.0 {
        rabi_frequency(d1, wc, cavity.mode_volume)?
    } else {
        0.0
    };
    Ok(CavityCoupling {
        omega_0,
        omega_1,
        kappa: cavity.kappa(),
        zpl_detuning: center.zpl_angular_frequency() - wc,
        sideband_splitting: center.zpl_angular_frequency() - center.sideband_angular_frequency(),
    })
}

/// Transition dipole `d = sqrt(3ħε₀c³γ/(2nω³))` for an angular decay rate `γ`.
pub fn dipole_moment(gamma: f64, omega: f64, refractive_index: f64) -> Result<f64> {
    ensure_positive("gamma", gamma)?;
    ensure_positive("omega", omega)?;
    ensure_positive("refractive_index", refractive_index)?;
    Ok((3.0 * HBAR * EPSILON_0 * C.powi(3) * gamma
        / (2.0 * refractive_index * omega.powi(3)))
    .sqrt())
}

/// `Ω = d·sqrt(ω_c/(2ħε₀V))`.
pub fn rabi_frequency(dipole: f64, omega_c: f64, mode_volume: f64) -> Result<f64> {
    ensure_positive("dipole", dipole)?;
    ensure_positive("omega_c", omega_c)?;
    ensure_positive("mode_volume", mode_volume)?;
    Ok(dipole * (omega_c / (2.0 * HBAR * EPSILON_0 * mode_volume)).sqrt())
}

/// `F_p = 4Ω0²/(γ_total κ)`.
pub fn purcell_factor(omega_0: f64, gamma_total: f64, kappa: f64) -> Result<f64> {
    if gamma_total * kappa == 0.0 {
        return Err(Error::param("gamma_total·kappa", "must be nonzero"));
    }
    Ok(4.0 * omega_0 * omega_0 / (gamma_total * kappa))
}

/// `F_p = 4d0²Q/(ħε₀γ_total V)`.
pub fn purcell_factor_from_cavity(
    dipole: f64,
    gamma_total: f64,
    quality_factor: f64,
    mode_volume: f64,
) -> Result<f64> {
    if gamma_total * mode_volume == 0.0 {
        return Err(Error::param("gamma_total·V", "must be nonzero"));
    }
    Ok(4.0 * dipole * dipole * quality_factor / (HBAR * EPSILON_0 * gamma_total * mode_volume))
}

pub fn ideal_emission_probability(purcell: f64) -> f64 {
    purcell / (1.0 + purcell)
}

/// Q that places `κ = 2.5 Ω0`.
pub fn optimal_q(omega_0: f64, omega_c: f64) -> f64 {
    omega_c / (5.0 * omega_0)
}

/// Decoherence-free upper bounds on single- and multi-photon emission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationBounds {
    pub p1: f64,
    pub pm: f64,
}

/// `(cosh√u − 1)/u`, continued to `(1 − cos√−u)/(−u)` for `u < 0`.
fn cosh_kernel(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        0.5 + u / 24.0 + u * u / 720.0 + u * u * u / 40320.0
    } else if u > 0.0 {
        (u.sqrt().cosh() - 1.0) / u
    } else {
        let y = (-u).sqrt();
        let s = (0.5 * y).sin();
        2.0 * s * s / (y * y)
    }
}

/// Populations of the one- and multi-excitation manifolds after a top-hat
/// pulse of width `T` (s) and absorption rate `r` (s⁻¹), ignoring decay.
pub fn excitation_bounds(width: f64, rate: f64, omega_0: f64) -> Result<ExcitationBounds> {
    ensure_nonnegative("pulse width", width)?;
    ensure_nonnegative("pump rate", rate)?;
    ensure_nonnegative("omega_0", omega_0)?;
    let rt = rate * width;
    let a = 0.5 * rt;
    let half = 0.5 * width;
    let u = half * half * (rate * rate - 16.0 * omega_0 * omega_0);
    let p0 = (-rt).exp();
    let bracket = if u > 1e-3 {
        // e^{-a}(1 + a²(cosh√u − 1)/u), with every exponential kept ≤ 1.
        let s = u.sqrt();
        let ea = (-a).exp();
        let cosh_term = 0.5 * ((s - a).exp() + (-s - a).exp());
        ea + a * a * (cosh_term - ea) / u
    } else {
        (-a).exp() * (1.0 + a * a * cosh_kernel(u))
    };
    let mut p1 = 2.0 * (bracket - p0);
    p1 = p1.clamp(0.0, 1.0 - p0);
    let pm = (1.0 - p1 - p0).max(0.0);
    Ok(ExcitationBounds { p1, pm })
}

/// Peak pump intensity (W/m²) for absorption rate `r` (s⁻¹) on a transition
/// with dipole `d`: `I = ħ²cε₀(2πr)²/(2d²)`.
pub fn pump_intensity(rate: f64, dipole: f64) -> Result<f64> {
    ensure_nonnegative("pump rate", rate)?;
    ensure_positive("dipole", dipole)?;
    let w = TWO_PI * rate;
    Ok(HBAR * HBAR * C * EPSILON_0 * w * w / (2.0 * dipole * dipole))
}

/// Energy (J) of a top-hat pulse of intensity `I` over `spot_area` (m²).
pub fn pulse_energy(intensity: f64, width: f64, spot_area: f64) -> f64 {
    intensity * width * spot_area
}

/// Diffraction-limited spot area `π(λ/2)²`.
pub fn diffraction_limited_area(wavelength: f64) -> f64 {
    std::f64::consts::PI * (0.5 * wavelength).powi(2)
}

/// Summary of one excitation operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationPoint {
    pub width: f64,
    pub rate: f64,
    pub p1_bound: f64,
    pub pm_bound: f64,
    pub intensity: f64,
    pub pulse_energy: f64,
    pub exceeds_photochromism: bool,
}

pub fn excitation_point(
    center: &CenterSpec,
    coupling: &CavityCoupling,
    width: f64,
    rate: f64,
    spot_area: f64,
) -> Result<ExcitationPoint> {
    let bounds = excitation_bounds(width, rate, coupling.omega_0)?;
    let intensity = pump_intensity(rate, center.total_dipole()?)?;
    Ok(ExcitationPoint {
        width,
        rate,
        p1_bound: bounds.p1,
        pm_bound: bounds.pm,
        intensity,
        pulse_energy: pulse_energy(intensity, width, spot_area),
        exceeds_photochromism: intensity > PHOTOCHROMISM_INTENSITY,
    })
}

/// Free-space emission probability per excitation, `(2π/τ)/γ_total`.
pub fn bare_center_p1(center: &CenterSpec) -> f64 {
    center.gamma_radiative() / center.gamma_total()
}

/// ZPL-only share of [`bare_center_p1`].
pub fn bare_center_zpl_p1(center: &CenterSpec) -> f64 {
    bare_center_p1(center) * center.zpl_fraction
}
