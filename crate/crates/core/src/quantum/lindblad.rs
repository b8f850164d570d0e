use nalgebra::DMatrix;

use super::model::{DissipatorTerm, PulseSchedule, SystemModel};
use super::operator::{DensityMatrix, Operator, SparseOperator};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const HERMITICITY_TOLERANCE: f64 = 1e-8;

/// `dρ/dt = −i[H,ρ] + Σ_k γ_k(t)(A_k ρ A_k† − ½{A_k†A_k, ρ})`, evaluated
/// densely. `H` is in rad/s (ħ = 1).
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    hamiltonian: &Operator,
    terms: &[DissipatorTerm],
    schedule: Option<&PulseSchedule>,
    t: f64,
) -> Result<DMatrix<C64>> {
    let r = rho.matrix();
    let d = r.nrows();
    if hamiltonian.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: hamiltonian.dim(),
        });
    }
    let herm = rho.hermiticity_error();
    if herm > HERMITICITY_TOLERANCE {
        return Err(Error::NonHermitian(herm));
    }
    let h = hamiltonian.matrix();
    let i = C64::new(0.0, 1.0);
    let mut out = (h * r - r * h) * (-i);
    for term in terms {
        if term.operator.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: term.operator.dim(),
            });
        }
        let rate = term.rate_at(t, schedule);
        if rate == 0.0 {
            continue;
        }
        let a = term.operator.matrix();
        let ad = a.adjoint();
        let ada = &ad * a;
        let half = C64::new(0.5, 0.0);
        out += (a * r * &ad - (&ada * r + r * &ada) * half) * C64::new(rate, 0.0);
    }
    Ok(out)
}

/// Compressed-row complex matrix.
#[derive(Clone, Debug, Default)]
pub(crate) struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for k in 0..n {
            row_ptr[k + 1] += row_ptr[k];
        }
        // Drop exact cancellations (e.g. diagonal commutator terms).
        let mut csr = Self {
            n,
            row_ptr,
            cols,
            vals,
        };
        csr.prune();
        csr
    }

    fn prune(&mut self) {
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != ZERO {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out += alpha · self · x`.
    fn mul_add(&self, alpha: f64, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o += acc * alpha;
        }
    }

    /// Submatrix on `keep` (sorted), renumbered through `lookup`.
    fn restrict(&self, keep: &[usize], lookup: &[Option<usize>]) -> Self {
        let mut triplets = Vec::new();
        for (new_r, &r) in keep.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if let Some(c) = lookup[self.cols[k]] {
                    triplets.push((new_r, c, self.vals[k]));
                }
            }
        }
        Self::from_triplets(keep.len(), triplets)
    }

    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .map(|k| self.vals[k] * x[self.cols[k]])
            .sum()
    }
}

/// Accumulates superoperator triplets for a row-major vectorized `ρ`.
struct SuperBuilder {
    d: usize,
    triplets: Vec<(usize, usize, C64)>,
}

impl SuperBuilder {
    fn new(d: usize) -> Self {
        Self {
            d,
            triplets: Vec::new(),
        }
    }

    /// `ρ ↦ c·AρB`: entry `(iD+j, kD+l) += c·A_ik·B_lj`.
    fn sandwich(&mut self, c: C64, a: &SparseOperator, b: &SparseOperator) {
        let d = self.d;
        for &(i, k, av) in a.entries() {
            for &(l, j, bv) in b.entries() {
                self.triplets.push((i * d + j, k * d + l, c * av * bv));
            }
        }
    }

    /// `ρ ↦ c·Aρ`.
    fn left(&mut self, c: C64, a: &SparseOperator) {
        let d = self.d;
        for &(i, k, av) in a.entries() {
            for j in 0..d {
                self.triplets.push((i * d + j, k * d + j, c * av));
            }
        }
    }

    /// `ρ ↦ c·ρB`.
    fn right(&mut self, c: C64, b: &SparseOperator) {
        let d = self.d;
        for &(l, j, bv) in b.entries() {
            for i in 0..d {
                self.triplets.push((i * d + j, i * d + l, c * bv));
            }
        }
    }

    fn dissipator(&mut self, rate: f64, a: &Operator) {
        let ad = a.dagger();
        let ada = ad.mul(a).to_sparse();
        let rate = C64::new(rate, 0.0);
        self.sandwich(rate, &a.to_sparse(), &ad.to_sparse());
        self.left(-0.5 * rate, &ada);
        self.right(-0.5 * rate, &ada);
    }

    fn finish(self) -> Csr {
        Csr::from_triplets(self.d * self.d, self.triplets)
    }
}

/// Sparse Liouvillian split into a constant part and the unit-rate pump part,
/// so that `L(t) = L_0 + r(t)·L_pump`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    constant: Csr,
    pump: Csr,
    peak_pump_rate: f64,
    schedule: Option<PulseSchedule>,
    /// Full vectorized index of each retained coordinate, when restricted.
    kept: Option<Vec<usize>>,
    /// Inverse of `kept` over all `D²` entries.
    lookup: Option<Vec<Option<usize>>>,
}

impl Liouvillian {
    pub fn new(
        hamiltonian: &Operator,
        terms: &[DissipatorTerm],
        schedule: Option<PulseSchedule>,
    ) -> Result<Self> {
        let d = hamiltonian.dim();
        let mut constant = SuperBuilder::new(d);
        let mut pump = SuperBuilder::new(d);
        let h = hamiltonian.to_sparse();
        let i = C64::new(0.0, 1.0);
        constant.left(-i, &h);
        constant.right(i, &h);
        let mut peak_pump_rate = 0.0;
        for term in terms {
            if term.operator.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: term.operator.dim(),
                });
            }
            if term.rate == 0.0 {
                continue;
            }
            if term.is_time_dependent() {
                pump.dissipator(1.0, &term.operator);
                peak_pump_rate = term.rate;
            } else {
                constant.dissipator(term.rate, &term.operator);
            }
        }
        Ok(Self {
            dim: d,
            constant: constant.finish(),
            pump: pump.finish(),
            peak_pump_rate,
            schedule,
            kept: None,
            lookup: None,
        })
    }

    /// Restrict to the invariant subspace of vectorized entries reachable
    /// from `seeds` (full indices). Dynamics started inside it never leave.
    pub fn restricted_to_reachable(&self, seeds: &[usize]) -> Self {
        let n = self.dim * self.dim;
        // Column → rows adjacency of L_0 + L_pump.
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for m in [&self.constant, &self.pump] {
            for r in 0..m.n {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    adjacency[m.cols[k]].push(r);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = seeds.to_vec();
        for &s in seeds {
            seen[s] = true;
        }
        while let Some(c) = stack.pop() {
            for &r in &adjacency[c] {
                if !seen[r] {
                    seen[r] = true;
                    stack.push(r);
                }
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
        let mut lookup = vec![None; n];
        for (k, &i) in kept.iter().enumerate() {
            lookup[i] = Some(k);
        }
        Self {
            dim: self.dim,
            constant: self.constant.restrict(&kept, &lookup),
            pump: self.pump.restrict(&kept, &lookup),
            peak_pump_rate: self.peak_pump_rate,
            schedule: self.schedule,
            kept: Some(kept),
            lookup: Some(lookup),
        }
    }

    /// Length of the vectors this operator acts on.
    pub fn len(&self) -> usize {
        self.kept.as_ref().map_or(self.dim * self.dim, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of full vectorized index `full` in the working vector.
    pub fn position(&self, full: usize) -> Option<usize> {
        match &self.lookup {
            Some(l) => l[full],
            None => Some(full),
        }
    }

    /// Working vector from a full row-major `ρ`.
    pub fn compress(&self, full: &[C64]) -> Vec<C64> {
        match &self.kept {
            Some(k) => k.iter().map(|&i| full[i]).collect(),
            None => full.to_vec(),
        }
    }

    /// Full row-major `ρ` from a working vector.
    pub fn expand(&self, x: &[C64]) -> Vec<C64> {
        match &self.kept {
            Some(k) => {
                let mut full = vec![ZERO; self.dim * self.dim];
                for (v, &i) in x.iter().zip(k) {
                    full[i] = *v;
                }
                full
            }
            None => x.to_vec(),
        }
    }

    pub fn from_model(model: &SystemModel) -> Result<Self> {
        Self::new(&model.hamiltonian, &model.dissipators, Some(model.schedule))
    }

    /// Hilbert-space dimension D (the superoperator acts on D² entries).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.constant.nnz() + self.pump.nnz()
    }

    /// Pump rate at `t`.
    pub fn pump_rate(&self, t: f64) -> f64 {
        match &self.schedule {
            Some(s) if s.rate_at(t) > 0.0 => self.peak_pump_rate,
            Some(_) => 0.0,
            None => self.peak_pump_rate,
        }
    }

    /// `out = L·x` with the pump switched to `pump_rate`.
    pub fn apply(&self, pump_rate: f64, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = ZERO);
        self.constant.mul_add(1.0, x, out);
        if pump_rate != 0.0 {
            self.pump.mul_add(pump_rate, x, out);
        }
    }

    /// Single entry `(Lx)_row` in working coordinates.
    pub fn apply_row(&self, pump_rate: f64, row: usize, x: &[C64]) -> C64 {
        let mut v = self.constant.row_dot(row, x);
        if pump_rate != 0.0 {
            v += self.pump.row_dot(row, x) * pump_rate;
        }
        v
    }

    /// Diagonal element `⟨k|Lρ|k⟩`.
    pub fn population_rate(&self, pump_rate: f64, state: usize, x: &[C64]) -> f64 {
        match self.position(state * self.dim + state) {
            Some(row) => self.apply_row(pump_rate, row, x).re,
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::{cavity_coupling, CavitySpec, CenterSpec};
    use crate::quantum::space::{HilbertSpace, Level};
    use crate::quantum::model::Channel;
    use crate::quantum::{embed, Factor};
    use proptest::prelude::*;

    fn random_density(space: HilbertSpace, seed: u64) -> DensityMatrix {
        // Deterministic pseudo-random positive matrix G·G†/tr.
        let d = space.total_dim();
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(space, m / tr, 0.0).unwrap()
    }

    fn ne8_model() -> SystemModel {
        let center = CenterSpec::ne8();
        let cav = CavitySpec::resonant(&center, 3700.0).unwrap();
        let c = cavity_coupling(&center, &cav).unwrap();
        let s = PulseSchedule::new(0.16e-12, 2e13, 0.0, 1e10).unwrap();
        SystemModel::new(&center, c, s, HilbertSpace::default()).unwrap()
    }

    #[test]
    fn stationary_without_dynamics() {
        let space = HilbertSpace::default();
        let rho = random_density(space, 1);
        let out = lindblad_rhs(&rho, &Operator::zeros(36), &[], None, 0.0).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn cavity_decay_feeds_waveguide_at_kappa() {
        // 2×2 rate equation: ṗ_c = −κ p_c, ṗ_w = +κ p_c.
        let space = HilbertSpace::default();
        let kappa = 3.2e11;
        let a = embed(&Operator::annihilation(2), Factor::Cavity, &space).unwrap();
        let aw = embed(&Operator::creation(2), Factor::Waveguide, &space).unwrap();
        let term = DissipatorTerm::new(Channel::CavityOutcoupling, kappa, aw.mul(&a)).unwrap();
        let rho = DensityMatrix::basis_state(space, Level::Ground0, 1, 0);
        let out = lindblad_rhs(&rho, &Operator::zeros(36), &[term], None, 0.0).unwrap();
        let c = space.index(Level::Ground0, 1, 0);
        let w = space.index(Level::Ground0, 0, 1);
        assert!((out[(c, c)].re + kappa).abs() < 1e-3);
        assert!((out[(w, w)].re - kappa).abs() < 1e-3);
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let space = HilbertSpace::default();
        let mut m = DMatrix::zeros(36, 36);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(0, 1)] = C64::new(0.3, 0.0);
        let rho = DensityMatrix::new(space, m, 0.0).unwrap();
        let err = lindblad_rhs(&rho, &Operator::zeros(36), &[], None, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonHermitian(_)));
    }

    #[test]
    fn sparse_liouvillian_matches_dense_rhs() {
        let model = ne8_model();
        let l = Liouvillian::from_model(&model).unwrap();
        for (seed, t) in [(3u64, 0.05e-12), (4, 1e-12)] {
            let rho = random_density(model.space, seed);
            let dense = lindblad_rhs(
                &rho,
                &model.hamiltonian,
                &model.dissipators,
                Some(&model.schedule),
                t,
            )
            .unwrap();
            let x = rho.to_vec();
            let mut y = vec![ZERO; x.len()];
            l.apply(l.pump_rate(t), &x, &mut y);
            let sparse = DensityMatrix::from_vec(model.space, &y, t).unwrap();
            let diff = (sparse.matrix() - &dense).norm() / dense.norm();
            assert!(diff < 1e-13, "relative difference {diff}");
        }
    }

    #[test]
    fn restriction_preserves_action_on_sector() {
        let model = ne8_model();
        let full = Liouvillian::from_model(&model).unwrap();
        let d = model.space.total_dim();
        let g = model.space.index(Level::Ground0, 0, 0);
        let reduced = full.restricted_to_reachable(&[g * d + g]);
        assert!(reduced.len() < full.len() / 4);
        // A state supported on the sector evolves identically.
        let mut x = vec![ZERO; d * d];
        for (k, v) in reduced.expand(&vec![C64::new(0.3, -0.1); reduced.len()]).into_iter().enumerate() {
            x[k] = v;
        }
        let mut y_full = vec![ZERO; d * d];
        full.apply(2e13, &x, &mut y_full);
        let xr = reduced.compress(&x);
        let mut y_red = vec![ZERO; reduced.len()];
        reduced.apply(2e13, &xr, &mut y_red);
        let back = reduced.expand(&y_red);
        for k in 0..d * d {
            assert!((back[k] - y_full[k]).norm() < 1e-6, "entry {k}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rhs_is_traceless(seed in any::<u64>(), t in 0.0f64..1e-12) {
            let model = ne8_model();
            let rho = random_density(model.space, seed);
            let out = lindblad_rhs(&rho, &model.hamiltonian, &model.dissipators, Some(&model.schedule), t).unwrap();
            prop_assert!(out.trace().norm() <= 1e-12 * out.norm());
        }
    }
}
