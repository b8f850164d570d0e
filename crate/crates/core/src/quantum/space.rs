use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Atomic levels of the vibronic model, in basis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    /// Excited state |e⟩.
    Excited,
    /// Vibrational ground |g0⟩ (ZPL lower level).
    Ground0,
    /// First phonon sublevel |g1⟩ (1PL lower level).
    Ground1,
    /// Metastable shelving state |h⟩.
    Shelf,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Excited, Level::Ground0, Level::Ground1, Level::Shelf];

    pub fn index(self) -> usize {
        match self {
            Level::Excited => 0,
            Level::Ground0 => 1,
            Level::Ground1 => 2,
            Level::Shelf => 3,
        }
    }
}

/// Tensor factor of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Atom,
    Cavity,
    Waveguide,
}

/// `{|e⟩,|g0⟩,|g1⟩,|h⟩} ⊗ {|0_c⟩..|N_c⟩} ⊗ {|0_w⟩..|N_w⟩}`.
///
/// Basis states are ordered atom-major: `index = a·(N_c+1)(N_w+1) + n_c·(N_w+1) + n_w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    cavity_max: usize,
    waveguide_max: usize,
}

impl HilbertSpace {
    pub const ATOMIC_DIM: usize = 4;

    /// Space truncated at `cavity_max` cavity and `waveguide_max` waveguide photons.
    pub fn new(cavity_max: usize, waveguide_max: usize) -> Result<Self> {
        if cavity_max < 1 || waveguide_max < 1 {
            return Err(Error::param(
                "fock truncation",
                "each Fock factor must admit at least one photon",
            ));
        }
        Ok(Self {
            cavity_max,
            waveguide_max,
        })
    }

    pub fn cavity_max(&self) -> usize {
        self.cavity_max
    }

    pub fn waveguide_max(&self) -> usize {
        self.waveguide_max
    }

    pub fn factor_dim(&self, factor: Factor) -> usize {
        match factor {
            Factor::Atom => Self::ATOMIC_DIM,
            Factor::Cavity => self.cavity_max + 1,
            Factor::Waveguide => self.waveguide_max + 1,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            Self::ATOMIC_DIM,
            self.factor_dim(Factor::Cavity),
            self.factor_dim(Factor::Waveguide),
        ]
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn index(&self, level: Level, n_cavity: usize, n_waveguide: usize) -> usize {
        debug_assert!(n_cavity <= self.cavity_max && n_waveguide <= self.waveguide_max);
        let [_, dc, dw] = self.dims();
        level.index() * dc * dw + n_cavity * dw + n_waveguide
    }

    pub fn decompose(&self, index: usize) -> (Level, usize, usize) {
        let [_, dc, dw] = self.dims();
        let level = Level::ALL[index / (dc * dw)];
        let rem = index % (dc * dw);
        (level, rem / dw, rem % dw)
    }

    /// All basis states as `(level, n_c, n_w)` in index order.
    pub fn states(&self) -> impl Iterator<Item = (Level, usize, usize)> + '_ {
        (0..self.total_dim()).map(|i| self.decompose(i))
    }
}

impl Default for HilbertSpace {
    fn default() -> Self {
        Self {
            cavity_max: 2,
            waveguide_max: 2,
        }
    }
}
