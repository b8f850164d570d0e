//! Resolved links: source, detector and channel ready for key-rate evaluation.

use cavity_sps::channel::{DetectorSpec, FreeSpacePath, LinkBudget};
use cavity_sps::constants::from_db_loss;
use cavity_sps::qkd::{rate_at, source_cutoff_db, KeyRatePoint, ProtocolParams, SourceSpec};

use crate::config::{ChannelConfig, LinkConfig, SweepVariable};
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub source: SourceSpec,
    pub wavelength: f64,
    pub detector: DetectorSpec,
    pub channel: ChannelConfig,
    pub optics: f64,
    pub apparatus_loss_db: Option<f64>,
}

impl Link {
    pub fn from_config(c: &LinkConfig) -> Result<Self> {
        let source = c.source.spec();
        source.validate()?;
        let detector = c.detector.spec(source.rate());
        detector.validate()?;
        let link = Self {
            name: c.name.clone(),
            source,
            wavelength: c.source.wavelength(),
            detector,
            channel: c.channel.clone(),
            optics: c.optics(),
            apparatus_loss_db: c.apparatus_loss_db,
        };
        link.budget()?;
        Ok(link)
    }

    /// Free-space geometry, with the sweep variable applied.
    pub fn path(&self, sweep: Option<(SweepVariable, f64)>) -> Result<Option<FreeSpacePath>> {
        let mut fs = match &self.channel {
            ChannelConfig::Fiber(_) => return Ok(None),
            ChannelConfig::Terrestrial(fs) | ChannelConfig::Uplink(fs) | ChannelConfig::Downlink(fs) => *fs,
        };
        let slant = !matches!(self.channel, ChannelConfig::Terrestrial(_));
        match sweep {
            Some((SweepVariable::DistanceKm, x)) if slant => {
                fs.satellite_altitude_km = Some(fs.ground_altitude_km.unwrap_or(0.0) + x);
            }
            Some((SweepVariable::DistanceKm, x)) => fs.length_km = Some(x),
            Some((SweepVariable::AltitudeKm, x)) if slant => {
                let top = fs.satellite_altitude_km.unwrap_or(2000.0);
                fs.ground_altitude_km = Some(x);
                fs.satellite_altitude_km = Some(top);
            }
            Some((SweepVariable::AltitudeKm, _)) => {
                return Err(CliError::Config(
                    "`altitude_km` sweeps need an uplink or downlink channel".into(),
                ))
            }
            _ => {}
        }
        let p = match self.channel {
            ChannelConfig::Terrestrial(_) => fs.terrestrial(self.wavelength, &self.source)?,
            ChannelConfig::Uplink(_) => fs.slant(true, self.wavelength, &self.source)?,
            _ => fs.slant(false, self.wavelength, &self.source)?,
        };
        p.validate()?;
        Ok(Some(p))
    }

    pub fn budget(&self) -> Result<LinkBudget> {
        self.budget_at(None)
    }

    pub fn budget_at(&self, sweep: Option<(SweepVariable, f64)>) -> Result<LinkBudget> {
        if let ChannelConfig::Fiber(f) = &self.channel {
            let mut fiber = f.channel();
            match sweep {
                Some((SweepVariable::DistanceKm, x)) => fiber.length = x,
                Some((SweepVariable::AltitudeKm, _)) => {
                    return Err(CliError::Config(
                        "`altitude_km` sweeps need an uplink or downlink channel".into(),
                    ))
                }
                _ => {}
            }
            return Ok(LinkBudget::fiber(&fiber, &self.detector, self.optics)?);
        }
        let path = self.path(sweep)?.expect("free-space channel");
        Ok(LinkBudget::free_space(
            &path,
            &self.detector,
            self.optics,
            self.apparatus_loss_db,
        )?)
    }

    /// Key rate with the sweep variable set to `x`.
    pub fn rate(&self, variable: SweepVariable, x: f64, protocol: &ProtocolParams) -> Result<KeyRatePoint> {
        let (eta, noise) = match variable {
            SweepVariable::LossDb => (from_db_loss(x), self.budget()?.noise),
            _ => {
                let b = self.budget_at(Some((variable, x)))?;
                (b.eta(), b.noise)
            }
        };
        Ok(rate_at(&self.source, eta, noise, protocol))
    }

    pub fn noise(&self) -> Result<f64> {
        Ok(self.budget()?.noise)
    }

    /// Loss cutoff (dB) at this link's noise level.
    pub fn cutoff_db(&self, protocol: &ProtocolParams) -> Result<f64> {
        Ok(source_cutoff_db(&self.source, self.noise()?, protocol)?)
    }
}
