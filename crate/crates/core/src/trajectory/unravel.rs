use crate::quantum::{Channel, DissipatorTerm, Operator, SparseOperator};
use crate::{Error, Result, C64};

/// Jump amplitude `√rate · A`.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub channel: Channel,
    /// Peak rate (rad/s); the pump rate is gated by the pulse schedule.
    pub rate: f64,
    pub operator: SparseOperator,
}

/// Effective non-Hermitian generator and jump set of a Lindblad equation.
#[derive(Clone, Debug)]
pub struct Unraveling {
    /// `H − (i/2) Σ rate A†A` over the time-independent channels.
    pub h_eff: Operator,
    /// `A†A` of the pump channel at unit rate.
    pub pump_damping: Operator,
    pub jumps: Vec<JumpOperator>,
}

impl Unraveling {
    /// `H_eff` with the pump running at `pump_rate`.
    pub fn h_eff_at(&self, pump_rate: f64) -> Operator {
        self.h_eff
            .add(&self.pump_damping.scale_complex(C64::new(0.0, -0.5 * pump_rate)))
    }
}

pub fn unravel(hamiltonian: &Operator, dissipators: &[DissipatorTerm]) -> Result<Unraveling> {
    let d = hamiltonian.dim();
    let mut h_eff = hamiltonian.clone();
    let mut pump_damping = Operator::zeros(d);
    let mut jumps = Vec::with_capacity(dissipators.len());
    for term in dissipators {
        if term.operator.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: term.operator.dim(),
            });
        }
        let ada = term.operator.dagger().mul(&term.operator);
        if term.is_time_dependent() {
            pump_damping = pump_damping.add(&ada);
        } else {
            h_eff = h_eff.add(&ada.scale_complex(C64::new(0.0, -0.5 * term.rate)));
        }
        jumps.push(JumpOperator {
            channel: term.channel,
            rate: term.rate,
            operator: term.operator.to_sparse(),
        });
    }
    Ok(Unraveling {
        h_eff,
        pump_damping,
        jumps,
    })
}
