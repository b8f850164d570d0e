//! BB84 key rates and loss cutoffs for single-photon, weak coherent and
//! decoy-state sources.

use serde::{Deserialize, Serialize};

use crate::channel::LinkBudget;
use crate::constants::{from_db_loss, to_db_loss};
use crate::error::{ensure_nonnegative, ensure_positive};
use crate::{Error, Result};

/// Mean photon number of the decoy-state signal pulses.
pub const DECOY_MEAN_PHOTON_NUMBER: f64 = 0.7;
/// Resolution of [`cutoff_search`] (dB).
pub const CUTOFF_TOLERANCE_DB: f64 = 0.05;
/// Largest loss considered by [`cutoff_search`] (dB).
pub const CUTOFF_CEILING_DB: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Sifting fraction q.
    pub sifting: f64,
    /// Baseline error rate e₀.
    pub baseline_error: f64,
    /// Error-correction inefficiency f.
    pub ec_efficiency: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            sifting: 0.5,
            baseline_error: 0.02,
            ec_efficiency: 1.0,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sifting > 0.0 && self.sifting <= 1.0) {
            return Err(Error::param("sifting", "must lie in (0, 1]"));
        }
        if !(0.0..0.25).contains(&self.baseline_error) {
            return Err(Error::param("baseline_error", "must lie in [0, 0.25)"));
        }
        if !(self.ec_efficiency >= 1.0 && self.ec_efficiency.is_finite()) {
            return Err(Error::param("ec_efficiency", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Sps {
        /// Repetition rate ν (Hz).
        rate: f64,
        p1: f64,
        /// Attenuation-free g²(0).
        g2: f64,
        /// Extra attenuation ξ; optimized when absent.
        attenuation: Option<f64>,
        /// Spectral width Δλ (m).
        spectral_width: f64,
    },
    Wcs {
        rate: f64,
        /// Mean photon number; `η` when absent.
        mean_photon_number: Option<f64>,
        spectral_width: f64,
    },
    WcsDecoy {
        rate: f64,
        /// Signal mean photon number; 0.7 when absent.
        mean_photon_number: Option<f64>,
        spectral_width: f64,
    },
}

impl SourceSpec {
    pub fn rate(&self) -> f64 {
        match *self {
            SourceSpec::Sps { rate, .. }
            | SourceSpec::Wcs { rate, .. }
            | SourceSpec::WcsDecoy { rate, .. } => rate,
        }
    }

    pub fn spectral_width(&self) -> f64 {
        match *self {
            SourceSpec::Sps { spectral_width, .. }
            | SourceSpec::Wcs { spectral_width, .. }
            | SourceSpec::WcsDecoy { spectral_width, .. } => spectral_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("rate", self.rate())?;
        ensure_nonnegative("spectral_width", self.spectral_width())?;
        match *self {
            SourceSpec::Sps { p1, g2, attenuation, .. } => {
                if !(0.0..=1.0).contains(&p1) {
                    return Err(Error::param("p1", "must lie in [0, 1]"));
                }
                ensure_nonnegative("g2", g2)?;
                if let Some(xi) = attenuation {
                    if !(xi > 0.0 && xi <= 1.0) {
                        return Err(Error::param("attenuation", "must lie in (0, 1]"));
                    }
                }
            }
            SourceSpec::Wcs { mean_photon_number, .. }
            | SourceSpec::WcsDecoy { mean_photon_number, .. } => {
                if let Some(n) = mean_photon_number {
                    ensure_nonnegative("mean_photon_number", n)?;
                }
            }
        }
        Ok(())
    }
}

/// One evaluation of a key-rate formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRatePoint {
    pub eta: f64,
    pub noise: f64,
    /// Detection probability per pulse P_d.
    pub detection: f64,
    /// Bit error rate e.
    pub error: f64,
    /// Fraction of detections from single photons β.
    pub beta: f64,
    /// Privacy-amplification factor multiplying β.
    pub privacy: f64,
    /// Extra attenuation ξ (SPS) or mean photon number n̄ (WCS).
    pub setting: f64,
    /// Secure key rate G (bit/s), clamped at 0.
    pub rate: f64,
    pub secure: bool,
}

impl KeyRatePoint {
    fn insecure(eta: f64, noise: f64, setting: f64) -> Self {
        Self {
            eta,
            noise,
            detection: 0.0,
            error: 0.0,
            beta: 0.0,
            privacy: 0.0,
            setting,
            rate: 0.0,
            secure: false,
        }
    }
}

/// Binary entropy h(e) in bits.
pub fn shannon_entropy(e: f64) -> f64 {
    if e <= 0.0 || e >= 1.0 {
        return 0.0;
    }
    -e * e.log2() - (1.0 - e) * (1.0 - e).log2()
}

/// Privacy-amplification compression `τ = −log2[1/2 + 2x − 2x²]`, `x = e/β`,
/// clamped to [0, 1]; zero once `x ≥ 1/2`.
pub fn compression_tau(e: f64, beta: f64) -> f64 {
    if !(beta > 0.0) {
        return 0.0;
    }
    let x = e / beta;
    if x >= 0.5 {
        return 0.0;
    }
    let arg = 0.5 + 2.0 * x - 2.0 * x * x;
    if arg <= 0.0 {
        return 1.0;
    }
    (-arg.log2()).clamp(0.0, 1.0)
}

fn finish(
    nu: f64,
    protocol: &ProtocolParams,
    eta: f64,
    noise: f64,
    detection: f64,
    error: f64,
    beta: f64,
    privacy: f64,
    setting: f64,
) -> KeyRatePoint {
    let bracket = beta * privacy - protocol.ec_efficiency * shannon_entropy(error);
    let g = nu * protocol.sifting * detection * bracket;
    KeyRatePoint {
        eta,
        noise,
        detection,
        error,
        beta,
        privacy,
        setting,
        rate: g.max(0.0),
        secure: g > 0.0,
    }
}

/// Sub-Poissonian source at rate `nu` with extra attenuation `xi`.
pub fn key_rate_sps(
    nu: f64,
    p1: f64,
    g2: f64,
    xi: f64,
    eta: f64,
    noise: f64,
    protocol: &ProtocolParams,
) -> KeyRatePoint {
    let detection = xi * eta * p1 + noise;
    if !(detection > 0.0) {
        return KeyRatePoint::insecure(eta, noise, xi);
    }
    let multi = 0.5 * xi * xi * p1 * p1 * g2;
    let beta = ((detection - multi) / detection).clamp(0.0, 1.0);
    let error = (protocol.baseline_error * xi * eta * p1 + 0.5 * noise) / detection;
    let tau = compression_tau(error, beta);
    finish(nu, protocol, eta, noise, detection, error, beta, tau, xi)
}

/// Closed-form loss cutoff `η_min = (N/P1 + P1 g²/2)/(1 − 4e₀)`.
pub fn loss_cutoff_sps(p1: f64, g2: f64, noise: f64, baseline_error: f64) -> f64 {
    (noise / p1 + 0.5 * p1 * g2) / (1.0 - 4.0 * baseline_error)
}

/// Weak coherent pulses with mean photon number `n`.
pub fn key_rate_wcs(nu: f64, n: f64, eta: f64, noise: f64, protocol: &ProtocolParams) -> KeyRatePoint {
    let signal = -(-eta * n).exp_m1();
    let detection = signal + noise;
    if !(detection > 0.0) || n <= 0.0 {
        return KeyRatePoint::insecure(eta, noise, n);
    }
    let multi = 1.0 - (1.0 + n) * (-n).exp();
    let beta = ((detection - multi) / detection).clamp(0.0, 1.0);
    if beta <= 0.0 {
        return KeyRatePoint::insecure(eta, noise, n);
    }
    let error = (protocol.baseline_error * signal + 0.5 * noise) / detection;
    let tau = compression_tau(error, beta);
    finish(nu, protocol, eta, noise, detection, error, beta, tau, n)
}

/// Estimated WCS cutoff `√(2N)/(1 − 4e₀)`.
pub fn loss_cutoff_wcs(noise: f64, baseline_error: f64) -> f64 {
    (2.0 * noise).sqrt() / (1.0 - 4.0 * baseline_error)
}

/// Decoy-state WCS with perfectly estimated single-photon yield.
pub fn key_rate_decoy(nu: f64, n: f64, eta: f64, noise: f64, protocol: &ProtocolParams) -> KeyRatePoint {
    let signal = -(-eta * n).exp_m1();
    let gain = signal + noise;
    if !(gain > 0.0) || n <= 0.0 {
        return KeyRatePoint::insecure(eta, noise, n);
    }
    let single = n * (-n).exp() * (eta + noise);
    let beta = (single / gain).clamp(0.0, 1.0);
    if beta <= 0.0 {
        return KeyRatePoint::insecure(eta, noise, n);
    }
    let error = (protocol.baseline_error * signal + 0.5 * noise) / gain;
    let x = error / beta;
    let privacy = if x >= 0.5 { 0.0 } else { 1.0 - shannon_entropy(x) };
    finish(nu, protocol, eta, noise, gain, error, beta, privacy, n)
}

/// Maximize `f` over `[lo, hi]`: a grid pre-scan brackets the peak, then
/// golden-section search refines it to `tol`.
fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const GRID: usize = 64;
    let xs: Vec<f64> = (0..=GRID).map(|k| lo + (hi - lo) * k as f64 / GRID as f64).collect();
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = (0..=GRID)
        .max_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)))
        .unwrap();
    if values[best] <= 0.0 {
        return hi;
    }
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(GRID)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // The end point wins ties so that a flat or monotone rate keeps ξ = 1.
    if f(hi) >= f(mid) {
        hi
    } else {
        mid
    }
}

/// Attenuation ξ* ∈ (0, 1] maximizing the SPS key rate, to 1e-4.
pub fn optimize_attenuation(
    nu: f64,
    p1: f64,
    g2: f64,
    eta: f64,
    noise: f64,
    protocol: &ProtocolParams,
) -> KeyRatePoint {
    let rate = |xi: f64| key_rate_sps(nu, p1, g2, xi, eta, noise, protocol).rate;
    let xi = maximize(rate, 1e-4, 1.0, 1e-4);
    key_rate_sps(nu, p1, g2, xi, eta, noise, protocol)
}

/// Key rate of `source` through `budget`, optimizing any free setting.
pub fn secure_rate(source: &SourceSpec, budget: &LinkBudget, protocol: &ProtocolParams) -> Result<KeyRatePoint> {
    source.validate()?;
    protocol.validate()?;
    budget.validate()?;
    Ok(rate_at(source, budget.eta(), budget.noise, protocol))
}

/// Key rate of `source` at total transmittance `eta` and noise `noise`.
pub fn rate_at(source: &SourceSpec, eta: f64, noise: f64, protocol: &ProtocolParams) -> KeyRatePoint {
    match *source {
        SourceSpec::Sps { rate, p1, g2, attenuation: Some(xi), .. } => {
            key_rate_sps(rate, p1, g2, xi, eta, noise, protocol)
        }
        SourceSpec::Sps { rate, p1, g2, attenuation: None, .. } => {
            optimize_attenuation(rate, p1, g2, eta, noise, protocol)
        }
        SourceSpec::Wcs { rate, mean_photon_number, .. } => {
            key_rate_wcs(rate, mean_photon_number.unwrap_or(eta), eta, noise, protocol)
        }
        SourceSpec::WcsDecoy { rate, mean_photon_number, .. } => key_rate_decoy(
            rate,
            mean_photon_number.unwrap_or(DECOY_MEAN_PHOTON_NUMBER),
            eta,
            noise,
            protocol,
        ),
    }
}

/// Largest loss (dB) at which `secure(η)` still holds, by bisection to
/// [`CUTOFF_TOLERANCE_DB`]. `secure` must hold at 0 dB and be monotone.
pub fn cutoff_search<F: Fn(f64) -> bool>(secure: F) -> Result<f64> {
    if !secure(1.0) {
        return Err(Error::Empty("no secure key even without loss"));
    }
    let (mut lo, mut hi) = (0.0, CUTOFF_CEILING_DB);
    if secure(from_db_loss(hi)) {
        return Ok(hi);
    }
    while hi - lo > CUTOFF_TOLERANCE_DB {
        let mid = 0.5 * (lo + hi);
        if secure(from_db_loss(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Loss cutoff (dB) of `source` at noise `noise`. Sub-Poissonian sources (at
/// ξ = 1) and plain coherent sources use the allowable-error criterion
/// `e ≤ β/4`; decoy-state sources use `G > 0`.
pub fn source_cutoff_db(source: &SourceSpec, noise: f64, protocol: &ProtocolParams) -> Result<f64> {
    source.validate()?;
    protocol.validate()?;
    match *source {
        SourceSpec::Sps { rate, p1, g2, .. } => cutoff_search(|eta| {
            let k = key_rate_sps(rate, p1, g2, 1.0, eta, noise, protocol);
            k.detection > 0.0 && k.error <= 0.25 * k.beta
        }),
        SourceSpec::Wcs { rate, mean_photon_number, .. } => cutoff_search(|eta| {
            let k = key_rate_wcs(rate, mean_photon_number.unwrap_or(eta), eta, noise, protocol);
            k.detection > 0.0 && k.error <= 0.25 * k.beta
        }),
        SourceSpec::WcsDecoy { .. } => cutoff_search(|eta| rate_at(source, eta, noise, protocol).secure),
    }
}

/// Closed-form cutoff (dB); decoy-state sources have none.
pub fn closed_form_cutoff_db(source: &SourceSpec, noise: f64, protocol: &ProtocolParams) -> Option<f64> {
    match *source {
        SourceSpec::Sps { p1, g2, .. } => Some(to_db_loss(loss_cutoff_sps(p1, g2, noise, protocol.baseline_error))),
        SourceSpec::Wcs { .. } => Some(to_db_loss(loss_cutoff_wcs(noise, protocol.baseline_error))),
        SourceSpec::WcsDecoy { .. } => None,
    }
}
