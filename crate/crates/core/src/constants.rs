//! CODATA 2018 constants in SI units.

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Angular frequency (rad/s) of light with vacuum wavelength `lambda` (m).
pub fn angular_frequency(lambda: f64) -> f64 {
    TWO_PI * C / lambda
}

/// Photon energy (J) at vacuum wavelength `lambda` (m).
pub fn photon_energy(lambda: f64) -> f64 {
    PLANCK * C / lambda
}

/// Convert a transmittance to a (positive) loss in dB.
pub fn to_db_loss(eta: f64) -> f64 {
    -10.0 * eta.log10()
}

/// Convert a (positive) loss in dB to a transmittance.
pub fn from_db_loss(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}
