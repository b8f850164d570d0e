use nalgebra::{DMatrix, SymmetricEigen};

use super::space::{Factor, HilbertSpace, Level};
use crate::{Error, Result, C64};

/// Dense complex operator. Hamiltonian entries are in rad/s; projectors and
/// ladder operators are dimensionless.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Atomic transition `σ_ab = |a⟩⟨b|` on the 4-level factor.
    pub fn transition(to: Level, from: Level) -> Self {
        let mut m = DMatrix::zeros(HilbertSpace::ATOMIC_DIM, HilbertSpace::ATOMIC_DIM);
        m[(to.index(), from.index())] = C64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Annihilation operator on a Fock space truncated at `n_max` photons.
    pub fn annihilation(n_max: usize) -> Self {
        let dim = n_max + 1;
        let mut m = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        Self { matrix: m }
    }

    pub fn creation(n_max: usize) -> Self {
        Self::annihilation(n_max).dagger()
    }

    pub fn number(n_max: usize) -> Self {
        let a = Self::annihilation(n_max);
        a.dagger().mul(&a)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, rhs: &Operator) -> Self {
        Self {
            matrix: &self.matrix * &rhs.matrix,
        }
    }

    pub fn add(&self, rhs: &Operator) -> Self {
        Self {
            matrix: &self.matrix + &rhs.matrix,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(factor, 0.0),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self {
            matrix: &self.matrix * factor,
        }
    }

    pub fn commutator(&self, rhs: &Operator) -> Self {
        Self {
            matrix: &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix,
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// `‖A − A†‖_F / ‖A‖_F` (0 for the zero operator).
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.adjoint()).norm() / n
    }

    pub fn is_diagonal(&self) -> bool {
        self.matrix
            .iter()
            .enumerate()
            .all(|(k, v)| k % self.dim() == k / self.dim() || *v == C64::new(0.0, 0.0))
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Operator) -> Self {
        Self {
            matrix: self.matrix.kronecker(&rhs.matrix),
        }
    }

    pub fn to_sparse(&self) -> SparseOperator {
        SparseOperator::from_dense(&self.matrix)
    }
}

/// Lift a single-factor operator to `I ⊗ … ⊗ op ⊗ … ⊗ I` on the full space.
pub fn embed(op: &Operator, factor: Factor, space: &HilbertSpace) -> Result<Operator> {
    let expected = space.factor_dim(factor);
    if op.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: op.dim(),
        });
    }
    let [da, dc, dw] = space.dims();
    let full = match factor {
        Factor::Atom => op.kron(&Operator::identity(dc)).kron(&Operator::identity(dw)),
        Factor::Cavity => Operator::identity(da).kron(op).kron(&Operator::identity(dw)),
        Factor::Waveguide => Operator::identity(da).kron(&Operator::identity(dc)).kron(op),
    };
    Ok(full)
}

/// Coordinate-list view of an operator, used in the inner loops.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `out = self · x`.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &(i, j, v) in &self.entries {
            out[i] += v * x[j];
        }
    }

    /// `⟨x|self|x⟩` for an unnormalized vector.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| x[i].conj() * v * x[j])
            .sum()
    }

    /// `‖self · x‖²`.
    pub fn norm_sqr_applied(&self, x: &[C64], scratch: &mut [C64]) -> f64 {
        self.apply(x, scratch);
        scratch.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Tr(self · ρ)` for a row-major vectorized `ρ`.
    pub fn trace_with(&self, rho: &[C64]) -> C64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| v * rho[j * self.dim + i])
            .sum()
    }
}

/// Density operator on a [`HilbertSpace`] at a given time (s).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
    time: f64,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: DMatrix<C64>, time: f64) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: matrix.nrows(),
            });
        }
        Ok(Self {
            space,
            matrix,
            time,
        })
    }

    /// Pure state `|level, n_c, n_w⟩⟨…|` at `t = 0`.
    pub fn basis_state(space: HilbertSpace, level: Level, n_cavity: usize, n_waveguide: usize) -> Self {
        let d = space.total_dim();
        let i = space.index(level, n_cavity, n_waveguide);
        let mut matrix = DMatrix::zeros(d, d);
        matrix[(i, i)] = C64::new(1.0, 0.0);
        Self {
            space,
            matrix,
            time: 0.0,
        }
    }

    /// Row-major vectorization, as used by [`super::Liouvillian`].
    pub fn from_vec(space: HilbertSpace, data: &[C64], time: f64) -> Result<Self> {
        let d = space.total_dim();
        if data.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: data.len(),
            });
        }
        Ok(Self {
            space,
            matrix: DMatrix::from_row_slice(d, d, data),
            time,
        })
    }

    pub fn to_vec(&self) -> Vec<C64> {
        let d = self.matrix.nrows();
        let mut v = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                v.push(self.matrix[(i, j)]);
            }
        }
        v
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, level: Level, n_cavity: usize, n_waveguide: usize) -> f64 {
        let i = self.space.index(level, n_cavity, n_waveguide);
        self.matrix[(i, i)].re
    }

    /// Total population of an atomic level, summed over photon numbers.
    pub fn level_population(&self, level: Level) -> f64 {
        self.space
            .states()
            .enumerate()
            .filter(|(_, (l, _, _))| *l == level)
            .map(|(i, _)| self.matrix[(i, i)].re)
            .sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.adjoint()).norm() / n
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }
}
