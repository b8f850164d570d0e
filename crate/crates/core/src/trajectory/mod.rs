//! Monte-Carlo wavefunction unraveling of the emission master equation.

mod hbt;
mod run;
mod unravel;

pub use hbt::{hbt_histogram, CoincidenceHistogram};
pub use run::{
    run_cycles, CycleOutcome, Ensemble, JumpEvent, JumpRecord, PopulationEstimate,
    TrajectoryOptions,
};
pub use unravel::{unravel, JumpOperator, Unraveling};
