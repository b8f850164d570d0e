use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::run::JumpRecord;
use crate::error::ensure_positive;
use crate::{Error, Result};

/// Coincidences are tallied up to this many periods either side.
const MAX_PERIODS: i64 = 8;

/// Start–stop coincidences between detectors A and B, binned by signed delay
/// `t_B − t_A`. Bin `k` covers `[k·w, (k+1)·w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    /// Index of `counts[0]`.
    pub first_bin: i64,
    pub counts: Vec<u64>,
    pub total_cycles: usize,
    pub period: f64,
}

impl CoincidenceHistogram {
    fn empty(bin_width: f64, period: f64, total_cycles: usize) -> Self {
        let reach = MAX_PERIODS as f64 * period;
        let first_bin = (-reach / bin_width).floor() as i64;
        let last_bin = (reach / bin_width).floor() as i64;
        Self {
            bin_width,
            first_bin,
            counts: vec![0; (last_bin - first_bin + 1) as usize],
            total_cycles,
            period,
        }
    }

    /// Lower edge of each bin (s).
    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|k| (self.first_bin + k as i64) as f64 * self.bin_width)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Merge `factor` adjacent bins.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::param("factor", "must be >= 1"));
        }
        let f = factor as i64;
        let first_bin = self.first_bin.div_euclid(f);
        let last = (self.first_bin + self.counts.len() as i64 - 1).div_euclid(f);
        let mut counts = vec![0; (last - first_bin + 1) as usize];
        for (k, &c) in self.counts.iter().enumerate() {
            let bin = (self.first_bin + k as i64).div_euclid(f);
            counts[(bin - first_bin) as usize] += c;
        }
        Ok(Self {
            bin_width: self.bin_width * factor as f64,
            first_bin,
            counts,
            total_cycles: self.total_cycles,
            period: self.period,
        })
    }

    /// Counts in the peak around `m` periods of delay (bins whose centers lie
    /// within half a period of `m·T`).
    pub fn peak_area(&self, m: i64) -> u64 {
        let center = m as f64 * self.period;
        self.delays()
            .zip(&self.counts)
            .filter(|(d, _)| (d + 0.5 * self.bin_width - center).abs() < 0.5 * self.period)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Mean area of the untruncated side peaks `m = ±1 … ±7`.
    pub fn mean_side_peak(&self) -> f64 {
        let side: u64 = (1..MAX_PERIODS)
            .map(|m| self.peak_area(m) + self.peak_area(-m))
            .sum();
        side as f64 / (2 * (MAX_PERIODS - 1)) as f64
    }

    /// Central peak area over mean side-peak area, `≈ g²(0)`.
    pub fn central_ratio(&self) -> f64 {
        let side = self.mean_side_peak();
        if side > 0.0 {
            self.peak_area(0) as f64 / side
        } else {
            f64::NAN
        }
    }

    /// Counts divided by the mean side-peak area.
    pub fn normalized(&self) -> Vec<f64> {
        let side = self.mean_side_peak();
        self.counts
            .iter()
            .map(|&c| if side > 0.0 { c as f64 / side } else { 0.0 })
            .collect()
    }

    /// Add the counts of another histogram with identical binning.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.first_bin != other.first_bin
            || self.counts.len() != other.counts.len()
            || self.bin_width != other.bin_width
        {
            return Err(Error::param("histogram", "binning differs"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_cycles += other.total_cycles;
        Ok(())
    }
}

/// Route every waveguide photon through a 50/50 splitter to two ideal
/// detectors with detection probability `efficiency`, and histogram the
/// A–B delays. Cycle `k` starts at `k/rep_rate`.
pub fn hbt_histogram(
    records: &[JumpRecord],
    bin_width: f64,
    rep_rate: f64,
    splitter_seed: u64,
    efficiency: f64,
) -> Result<CoincidenceHistogram> {
    if records.is_empty() {
        return Err(Error::Empty("no jump records"));
    }
    ensure_positive("bin_width", bin_width)?;
    ensure_positive("rep_rate", rep_rate)?;
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::param("efficiency", "must lie in [0, 1]"));
    }
    let period = 1.0 / rep_rate;
    let mut clicks_a: Vec<f64> = Vec::new();
    let mut clicks_b: Vec<f64> = Vec::new();
    for r in records {
        let mut rng = ChaCha8Rng::seed_from_u64(splitter_seed);
        rng.set_stream(r.cycle_index);
        for t in r.waveguide_times() {
            let to_a = rng.random::<bool>();
            let detected = rng.random::<f64>() < efficiency;
            if detected {
                let abs = r.cycle_index as f64 * period + t;
                if to_a {
                    clicks_a.push(abs);
                } else {
                    clicks_b.push(abs);
                }
            }
        }
    }
    clicks_a.sort_by(f64::total_cmp);
    clicks_b.sort_by(f64::total_cmp);

    let mut hist = CoincidenceHistogram::empty(bin_width, period, records.len());
    let reach = MAX_PERIODS as f64 * period;
    let last_bin = hist.first_bin + hist.counts.len() as i64 - 1;
    let mut lo = 0;
    for &ta in &clicks_a {
        while lo < clicks_b.len() && clicks_b[lo] < ta - reach {
            lo += 1;
        }
        for &tb in &clicks_b[lo..] {
            let delay = tb - ta;
            if delay > reach {
                break;
            }
            let bin = (delay / bin_width).floor() as i64;
            if (hist.first_bin..=last_bin).contains(&bin) {
                hist.counts[(bin - hist.first_bin) as usize] += 1;
            }
        }
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Channel;
    use crate::trajectory::JumpEvent;

    fn record(k: u64, times: &[f64]) -> JumpRecord {
        JumpRecord {
            cycle_index: k,
            seed: 0,
            events: times
                .iter()
                .map(|&time| JumpEvent {
                    time,
                    channel: Channel::CavityOutcoupling,
                })
                .collect(),
            checkpoint_populations: Vec::new(),
        }
    }

    #[test]
    fn one_photon_per_cycle_has_empty_center() {
        let records: Vec<_> = (0..2000).map(|k| record(k, &[1e-11 + 1e-14 * (k % 7) as f64])).collect();
        let h = hbt_histogram(&records, 0.6e-12, 1e10, 3, 1.0).unwrap();
        assert_eq!(h.peak_area(0), 0);
        assert!(h.peak_area(1) > 300);
        assert_eq!(h.central_ratio(), 0.0);
    }

    #[test]
    fn two_photons_per_cycle_fill_center() {
        let records: Vec<_> = (0..2000).map(|k| record(k, &[1e-11, 2e-11])).collect();
        let h = hbt_histogram(&records, 0.6e-12, 1e10, 3, 1.0).unwrap();
        // Pairs inside one cycle land at zero delay about half as often as
        // the four cross-cycle pairings land in a side peak.
        let ratio = h.central_ratio();
        assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn doubling_bin_width_sums_adjacent_bins() {
        let records: Vec<_> = (0..500)
            .map(|k| record(k, &[1e-12 * (k % 37) as f64, 3e-11 + 1e-13 * (k % 11) as f64]))
            .collect();
        let fine = hbt_histogram(&records, 0.3e-12, 1e10, 5, 1.0).unwrap();
        let coarse = hbt_histogram(&records, 2.0 * 0.3e-12, 1e10, 5, 1.0).unwrap();
        let merged = fine.coarsen(2).unwrap();
        assert_eq!(merged.first_bin, coarse.first_bin);
        assert_eq!(merged.counts, coarse.counts);
        assert_eq!(merged.total(), fine.total());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(hbt_histogram(&[], 1e-12, 1e10, 0, 1.0).is_err());
    }
}
