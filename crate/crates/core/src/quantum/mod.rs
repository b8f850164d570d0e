//! Composite center ⊗ cavity ⊗ waveguide system and its master equation.

mod evolve;
mod integrator;
mod lindblad;
mod model;
mod operator;
mod space;

pub use evolve::{default_window, evolve, spectral_width_fwhm, EmissionSummary, EmissionTrace, EvolveOptions};
pub use integrator::{DormandPrince, StepControl, Tolerances};
pub use lindblad::{lindblad_rhs, Liouvillian};
pub use model::{
    build_dissipators, build_hamiltonian, Channel, DissipatorTerm, PulseSchedule, SystemModel,
};
pub use operator::{embed, DensityMatrix, Operator, SparseOperator};
pub use space::{Factor, HilbertSpace, Level};
