//! Scenario configuration. Every physical key carries its unit as a suffix.

use cavity_sps::channel::{DetectorSpec, FiberChannel, FreeSpacePath, Turbulence, DEFAULT_OPTICS, MIN_FILTER_WIDTH};
use cavity_sps::emitter::{cavity_coupling, CavitySpec, CenterSpec};
use cavity_sps::qkd::{ProtocolParams, SourceSpec};
use cavity_sps::quantum::{EvolveOptions, HilbertSpace, PulseSchedule, SystemModel, Tolerances};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<CenterChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_q: Option<QSweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_excitation: Option<ExcitationGridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbt: Option<HbtConfig>,
    /// Links evaluated by `keyrate`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// A bundled center (`"ne8"`, `"siv"`, `"nv"`) or an inline description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum CenterChoice {
    Preset(CenterPreset),
    Inline(CenterConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum CenterPreset {
    Nv,
    Ne8,
    Siv,
}

impl CenterPreset {
    pub fn spec(self) -> CenterSpec {
        match self {
            CenterPreset::Nv => CenterSpec::nv(),
            CenterPreset::Ne8 => CenterSpec::ne8(),
            CenterPreset::Siv => CenterSpec::siv(),
        }
    }
}

/// Rates are angular frequencies in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CenterConfig {
    pub name: String,
    pub zpl_wavelength_nm: f64,
    pub lifetime_ns: f64,
    pub zpl_fraction: f64,
    pub gamma_shelve_rad_per_s: f64,
    pub gamma_deshelve_rad_per_s: f64,
    #[serde(default)]
    pub gamma_nonradiative_rad_per_s: f64,
    pub gamma_phonon_rad_per_s: f64,
    pub refractive_index: f64,
    pub sideband_offset_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_0_rad_per_s: Option<f64>,
}

impl CenterConfig {
    pub fn spec(&self) -> CenterSpec {
        CenterSpec {
            name: self.name.clone(),
            zpl_wavelength: self.zpl_wavelength_nm * 1e-9,
            lifetime: self.lifetime_ns * 1e-9,
            zpl_fraction: self.zpl_fraction,
            gamma_shelve: self.gamma_shelve_rad_per_s,
            gamma_deshelve: self.gamma_deshelve_rad_per_s,
            gamma_nonradiative: self.gamma_nonradiative_rad_per_s,
            gamma_phonon: self.gamma_phonon_rad_per_s,
            refractive_index: self.refractive_index,
            sideband_offset: self.sideband_offset_nm * 1e-9,
            omega_0_override: self.omega_0_rad_per_s,
        }
    }
}

impl CenterChoice {
    pub fn spec(&self) -> CenterSpec {
        match self {
            CenterChoice::Preset(p) => p.spec(),
            CenterChoice::Inline(c) => c.spec(),
        }
    }
}

/// Mode volume defaults to `(λ/n)³` and the resonance to the center's ZPL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub quality_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_volume_um3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
}

impl CavityConfig {
    pub fn spec(&self, center: &CenterSpec) -> Result<CavitySpec> {
        let base = CavitySpec::resonant(center, self.quality_factor)?;
        Ok(CavitySpec::new(
            self.wavelength_nm.map_or(base.wavelength, |w| w * 1e-9),
            self.quality_factor,
            self.mode_volume_um3.map_or(base.mode_volume, |v| v * 1e-18),
        )?)
    }
}

/// Top-hat excitation with absorption rate `r` in ps⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub width_ps: f64,
    pub rate_per_ps: f64,
    pub repetition_rate_ghz: f64,
    #[serde(default)]
    pub start_ps: f64,
}

impl PulseConfig {
    pub fn schedule(&self) -> Result<PulseSchedule> {
        Ok(PulseSchedule::new(
            self.width_ps * 1e-12,
            self.rate_per_ps * 1e12,
            self.start_ps * 1e-12,
            self.repetition_rate_ghz * 1e9,
        )?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub cavity_max: usize,
    pub waveguide_max: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max_fs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_points: Option<usize>,
}

/// Inclusive range of `points` values; empty when `points` is 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl RangeConfig {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct QSweepConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "yes")]
    pub log_spacing: bool,
}

fn yes() -> bool {
    true
}

impl QSweepConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.log_spacing {
            let mut q: Vec<f64> = linspace(self.start.ln(), self.stop.ln(), self.points)
                .into_iter()
                .map(f64::exp)
                .collect();
            if let Some(first) = q.first_mut() {
                *first = self.start;
            }
            if q.len() > 1 {
                q[self.points - 1] = self.stop;
            }
            q
        } else {
            linspace(self.start, self.stop, self.points)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExcitationGridConfig {
    pub width_ps: RangeConfig,
    pub rate_per_ps: RangeConfig,
    /// Pump spot area; diffraction limited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spot_area_um2: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HbtConfig {
    pub cycles: usize,
    pub bin_width_ps: f64,
    /// Defaults to the run seed plus one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitter_seed: Option<u64>,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default = "five")]
    pub checkpoints: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_ps: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn five() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Total link loss; the noise stays that of the configured channel.
    LossDb,
    /// Fiber or terrestrial length, or slant range above the ground terminal.
    DistanceKm,
    /// Altitude of the ground terminal on slant paths.
    AltitudeKm,
}

impl SweepVariable {
    pub fn column(self) -> (&'static str, &'static str) {
        match self {
            SweepVariable::LossDb => ("loss_db", "dB"),
            SweepVariable::DistanceKm => ("distance_km", "km"),
            SweepVariable::AltitudeKm => ("altitude_km", "km"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "half")]
    pub sifting: f64,
    #[serde(default = "two_percent")]
    pub baseline_error: f64,
    #[serde(default = "one")]
    pub ec_efficiency: f64,
}

fn half() -> f64 {
    0.5
}

fn two_percent() -> f64 {
    0.02
}

impl ProtocolConfig {
    pub fn params(&self) -> ProtocolParams {
        ProtocolParams {
            sifting: self.sifting,
            baseline_error: self.baseline_error,
            ec_efficiency: self.ec_efficiency,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub name: String,
    pub source: SourceConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    pub channel: ChannelConfig,
    /// Receiver optics transmittance η_o.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optics: Option<f64>,
    /// Combined optics and detector loss, replacing `optics` on free-space links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apparatus_loss_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Sps {
        wavelength_nm: f64,
        rate_ghz: f64,
        p1: f64,
        g2: f64,
        /// Extra attenuation ξ; optimized when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attenuation: Option<f64>,
        spectral_width_nm: f64,
    },
    Wcs {
        wavelength_nm: f64,
        rate_ghz: f64,
        /// Defaults to the link transmittance.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_photon_number: Option<f64>,
        #[serde(default)]
        spectral_width_nm: f64,
    },
    WcsDecoy {
        wavelength_nm: f64,
        rate_ghz: f64,
        /// Defaults to 0.7.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_photon_number: Option<f64>,
        #[serde(default)]
        spectral_width_nm: f64,
    },
}

impl SourceConfig {
    pub fn wavelength(&self) -> f64 {
        match *self {
            SourceConfig::Sps { wavelength_nm, .. }
            | SourceConfig::Wcs { wavelength_nm, .. }
            | SourceConfig::WcsDecoy { wavelength_nm, .. } => wavelength_nm * 1e-9,
        }
    }

    pub fn spec(&self) -> SourceSpec {
        match *self {
            SourceConfig::Sps {
                rate_ghz,
                p1,
                g2,
                attenuation,
                spectral_width_nm,
                ..
            } => SourceSpec::Sps {
                rate: rate_ghz * 1e9,
                p1,
                g2,
                attenuation,
                spectral_width: spectral_width_nm * 1e-9,
            },
            SourceConfig::Wcs {
                rate_ghz,
                mean_photon_number,
                spectral_width_nm,
                ..
            } => SourceSpec::Wcs {
                rate: rate_ghz * 1e9,
                mean_photon_number,
                spectral_width: spectral_width_nm * 1e-9,
            },
            SourceConfig::WcsDecoy {
                rate_ghz,
                mean_photon_number,
                spectral_width_nm,
                ..
            } => SourceSpec::WcsDecoy {
                rate: rate_ghz * 1e9,
                mean_photon_number,
                spectral_width: spectral_width_nm * 1e-9,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum DetectorModel {
    /// Silicon APD: 65 % efficiency, 25 Hz dark counts.
    #[default]
    Silicon,
    /// Transition-edge sensor: 50 % efficiency, 0.053 Hz.
    Tes,
}

/// Unset fields take the model's values; the gate defaults to the pulse period.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default)]
    pub model: DetectorModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter_mm: Option<f64>,
}

impl DetectorConfig {
    pub fn spec(&self, rate: f64) -> DetectorSpec {
        let gate = self.gate_ns.map_or(1.0 / rate, |g| g * 1e-9);
        let mut d = match self.model {
            DetectorModel::Silicon => DetectorSpec::silicon(gate),
            DetectorModel::Tes => DetectorSpec::tes(gate),
        };
        if let Some(e) = self.efficiency {
            d.efficiency = e;
        }
        if let Some(r) = self.dark_rate_hz {
            d.dark_rate = r;
        }
        if let Some(m) = self.diameter_mm {
            d.diameter = m * 1e-3;
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelConfig {
    Fiber(FiberConfig),
    Terrestrial(FreeSpaceConfig),
    Uplink(FreeSpaceConfig),
    Downlink(FreeSpaceConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub attenuation_db_per_km: f64,
    pub length_km: f64,
    /// Source-to-fiber coupling η_c.
    pub coupling: f64,
}

impl FiberConfig {
    pub fn channel(&self) -> FiberChannel {
        FiberChannel {
            attenuation: self.attenuation_db_per_km,
            length: self.length_km,
            coupling: self.coupling,
        }
    }
}

/// Overrides of the bundled terrestrial (3 km altitude, night) and satellite
/// (2000 km orbit) geometries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FreeSpaceConfig {
    /// Horizontal length; required on terrestrial links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_altitude_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satellite_altitude_km: Option<f64>,
    /// Defaults to the larger of 0.01 nm and the source spectral width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_width_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_aperture_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_aperture_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_w_per_m2_sr_um: Option<f64>,
    /// Uniform C_n² (m^-2/3) on terrestrial links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn2_m_neg23: Option<f64>,
    /// Hufnagel–Valley wind speed on slant links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind_speed_m_per_s: Option<f64>,
    /// Hufnagel–Valley ground C_n² (m^-2/3) on slant links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn2_ground_m_neg23: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorption_loss_db: Option<f64>,
}

impl FreeSpaceConfig {
    fn filter_width(&self, source: &SourceSpec) -> f64 {
        self.filter_width_nm
            .map_or(source.spectral_width().max(MIN_FILTER_WIDTH), |b| b * 1e-9)
    }

    pub fn terrestrial(&self, wavelength: f64, source: &SourceSpec) -> Result<FreeSpacePath> {
        let length = self
            .length_km
            .ok_or_else(|| CliError::Config("terrestrial channel needs `length_km`".into()))?;
        let mut p = FreeSpacePath::terrestrial(wavelength, length * 1e3, self.filter_width(source));
        if let Some(h) = self.ground_altitude_km {
            p.ground_altitude = h * 1e3;
            p.altitude = h * 1e3;
        }
        if let Some(cn2) = self.cn2_m_neg23 {
            p.turbulence = Turbulence::Flat { cn2 };
        }
        self.apply_common(&mut p);
        Ok(p)
    }

    pub fn slant(&self, uplink: bool, wavelength: f64, source: &SourceSpec) -> Result<FreeSpacePath> {
        let filter = self.filter_width(source);
        let h0 = self.ground_altitude_km.unwrap_or(0.0) * 1e3;
        let mut p = if uplink {
            FreeSpacePath::uplink(wavelength, h0, filter)
        } else {
            FreeSpacePath::downlink(wavelength, filter)
        };
        p.ground_altitude = h0;
        if let Some(h) = self.satellite_altitude_km {
            p.altitude = h * 1e3;
        }
        p.length = p.altitude - p.ground_altitude;
        if self.length_km.is_some() {
            return Err(CliError::Config(
                "slant channels take `satellite_altitude_km`, not `length_km`".into(),
            ));
        }
        if let Turbulence::HufnagelValley {
            wind_speed,
            cn2_ground,
        } = p.turbulence
        {
            p.turbulence = Turbulence::HufnagelValley {
                wind_speed: self.wind_speed_m_per_s.unwrap_or(wind_speed),
                cn2_ground: self.cn2_ground_m_neg23.unwrap_or(cn2_ground),
            };
        }
        self.apply_common(&mut p);
        Ok(p)
    }

    fn apply_common(&self, p: &mut FreeSpacePath) {
        if let Some(d) = self.tx_aperture_m {
            p.tx_aperture = d;
        }
        if let Some(d) = self.rx_aperture_m {
            p.rx_aperture = d;
        }
        if let Some(a) = self.focal_ratio {
            p.focal_ratio = a;
        }
        if let Some(b) = self.background_w_per_m2_sr_um {
            p.background = b;
        }
        if let Some(s) = self.scatter_loss_db {
            p.scatter_loss_db = s;
        }
        if let Some(a) = self.absorption_loss_db {
            p.absorption_loss_db = a;
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical compact JSON; the provenance hash is taken over this.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn center(&self) -> Result<CenterSpec> {
        let c = self
            .center
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `center`".into()))?
            .spec();
        c.validate()?;
        Ok(c)
    }

    pub fn cavity(&self, center: &CenterSpec) -> Result<CavitySpec> {
        self.cavity
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `cavity`".into()))?
            .spec(center)
    }

    pub fn pulse(&self) -> Result<&PulseConfig> {
        self.pulse
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `pulse`".into()))
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        match self.space {
            Some(s) => Ok(HilbertSpace::new(s.cavity_max, s.waveguide_max)?),
            None => Ok(HilbertSpace::default()),
        }
    }

    /// Model for the configured center, cavity and pulse, with optional
    /// replacements for the quality factor and schedule.
    pub fn model_with(
        &self,
        quality_factor: Option<f64>,
        schedule: Option<PulseSchedule>,
    ) -> Result<SystemModel> {
        let center = self.center()?;
        let mut cavity = self.cavity(&center)?;
        if let Some(q) = quality_factor {
            cavity = cavity.with_quality_factor(q);
        }
        let coupling = cavity_coupling(&center, &cavity)?;
        let schedule = match schedule {
            Some(s) => s,
            None => self.pulse()?.schedule()?,
        };
        Ok(SystemModel::new(&center, coupling, schedule, self.space()?)?)
    }

    pub fn model(&self) -> Result<SystemModel> {
        self.model_with(None, None)
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let mut o = EvolveOptions::default();
        if let Some(s) = &self.solver {
            o.tolerances = Tolerances {
                rtol: s.rtol.unwrap_or(o.tolerances.rtol),
                atol: s.atol.unwrap_or(o.tolerances.atol),
            };
            o.t_end = s.t_end_ps.map(|t| t * 1e-12);
            o.dt_max = s.dt_max_fs.map(|t| t * 1e-15);
            if let Some(n) = s.output_points {
                o.output_points = n;
            }
        }
        o
    }

    pub fn protocol(&self) -> Result<ProtocolParams> {
        let p = self.protocol.map_or_else(ProtocolParams::default, |p| p.params());
        p.validate()?;
        Ok(p)
    }
}

impl LinkConfig {
    pub fn optics(&self) -> f64 {
        self.optics.unwrap_or(DEFAULT_OPTICS)
    }
}
