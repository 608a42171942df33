//! Dense complex linear algebra and entropic functionals on registers of up to
//! three qubits (Hilbert-space dimension 2, 4 or 8).
//!
//! Tensor products are ordered `system ⊗ ancilla 1 ⊗ ancilla 2`, with the first
//! factor as the most significant index. Logarithms are natural (nats).

use std::fmt;
use std::ops::{Add, Deref, Index, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entrywise Hermiticity tolerance of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|tr ρ - 1|`.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as numerical PSD drift.
pub const EIGEN_FLOOR: f64 = -1e-10;
/// Eigenvalues below this are treated as exact zeros in `x log x`.
const ZERO_EIGEN: f64 = 1e-14;

const SUPPORTED_DIMS: [usize; 3] = [2, 4, 8];

fn check_dim(dim: usize) -> Result<()> {
    if SUPPORTED_DIMS.contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Square complex matrix of dimension 2, 4 or 8.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn from_dmatrix(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                data.nrows(),
                data.ncols()
            )));
        }
        check_dim(data.nrows())?;
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            data: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            data: DMatrix::identity(dim, dim),
        })
    }

    /// Builds a matrix from `dim * dim` entries in row-major order.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            data: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m.data[(i, i)] = C64::new(d, 0.0);
        }
        Ok(m)
    }

    pub(crate) fn from_2x2(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            data: DMatrix::from_row_slice(2, 2, &[a, b, c, d]),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dagger(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: &self.data * s,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            data: &self.data * &other.data - &other.data * &self.data,
        }
    }

    /// `{self, other}`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        Self {
            data: &self.data * &other.data + &other.data * &self.data,
        }
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[(i, k)] * other.data[(k, i)];
            }
        }
        acc
    }

    /// Largest entrywise `|A - A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Eigen-decomposition of the Hermitian part; eigenvalues ascending.
    pub(crate) fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let herm = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }

    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        self.hermitian_eigen().0
    }

    /// Trace over every subsystem not listed in `keep`.
    ///
    /// `dims` lists subsystem dimensions, most significant first; `keep` must
    /// be strictly increasing and non-empty.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {dims:?} multiply to {total}, matrix has dimension {}",
                self.dim()
            )));
        }
        if keep.is_empty()
            || keep.windows(2).any(|w| w[0] >= w[1])
            || keep.iter().any(|&k| k >= dims.len())
        {
            return Err(Error::DimensionMismatch(format!(
                "keep set {keep:?} is not a strictly increasing subset of 0..{}",
                dims.len()
            )));
        }
        let out_dim: usize = keep.iter().map(|&k| dims[k]).product();
        let mut out = Self::zeros(out_dim)?;

        let digits = |mut idx: usize| -> Vec<usize> {
            let mut d = vec![0; dims.len()];
            for (slot, &size) in d.iter_mut().zip(dims.iter()).rev() {
                *slot = idx % size;
                idx /= size;
            }
            d
        };
        let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
        let all: Vec<Vec<usize>> = (0..total).map(digits).collect();

        for (i, di) in all.iter().enumerate() {
            for (j, dj) in all.iter().enumerate() {
                let traced_match = (0..dims.len())
                    .filter(|k| !keep.contains(k))
                    .all(|k| di[k] == dj[k]);
                if traced_match {
                    out.data[(kept_index(di), kept_index(dj))] += self.data[(i, j)];
                }
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data * &rhs.data,
        }
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.data[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Hermitian, unit-trace, positive semi-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = matrix.hermitian_eigenvalues()[0];
        if min < EIGEN_FLOOR {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix known to be a state by construction (e.g. a product of
    /// states). Checked in debug builds only.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(Self::new(matrix.clone()).is_ok(), "trusted state invalid");
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let id = ComplexMatrix::identity(dim)?;
        Ok(Self {
            matrix: id.scale_real(1.0 / dim as f64),
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) vector `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::Domain("zero state vector".into()));
        }
        let n = psi.len();
        check_dim(n)?;
        let data = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2);
        Self::new(ComplexMatrix { data })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.hermitian_eigenvalues()
    }

    /// The state dephased in the computational (energy) basis.
    pub fn diagonal_part(&self) -> DensityMatrix {
        let diag: Vec<f64> = (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect();
        Self {
            matrix: ComplexMatrix::from_real_diagonal(&diag).expect("same dimension"),
        }
    }

    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
        DensityMatrix::new(self.matrix.partial_trace(dims, keep)?)
    }
}

impl Deref for DensityMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim() * b.dim();
    if dim > 8 {
        return Err(Error::UnsupportedDimension(dim));
    }
    ComplexMatrix::from_dmatrix(a.data.kronecker(&b.data))
}

/// `a ⊗ b ⊗ c`, the `system ⊗ ancilla 1 ⊗ ancilla 2` ordering.
pub fn tensor3(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_product(&tensor_product(a, b)?, c)
}

pub fn tensor_states(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(tensor_product(a, b)?))
}

/// `U = exp(-i h t)` for Hermitian `h`, via eigen-decomposition.
pub fn hermitian_propagator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let (values, vectors) = h.hermitian_eigen();
    let phases = DMatrix::from_fn(h.dim(), h.dim(), |i, j| {
        if i == j {
            C64::from_polar(1.0, -values[i] * t)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    ComplexMatrix::from_dmatrix(&vectors * phases * vectors.adjoint())
}

/// `½ ‖a - b‖₁`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = a - b;
    0.5 * diff
        .hermitian_eigenvalues()
        .iter()
        .map(|l| l.abs())
        .sum::<f64>()
}

fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&p| p > ZERO_EIGEN)
        .map(|&p| -p * p.ln())
        .sum()
}

/// `S(ρ) = -tr ρ log ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    spectrum_entropy(&rho.eigenvalues())
}

/// `S(ρ'‖ρ) = tr ρ' log ρ' - tr ρ' log ρ`; requires `supp ρ' ⊆ supp ρ`.
pub fn relative_entropy(rho_prime: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if rho_prime.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy between dimensions {} and {}",
            rho_prime.dim(),
            rho.dim()
        )));
    }
    let (values, vectors) = rho.hermitian_eigen();
    let projected = vectors.adjoint() * rho_prime.as_dmatrix() * &vectors;
    let mut cross = 0.0;
    for (k, &mu) in values.iter().enumerate() {
        let weight = projected[(k, k)].re;
        if mu > ZERO_EIGEN {
            cross += weight * mu.ln();
        } else if weight > 1e-12 {
            return Err(Error::Domain(format!(
                "support of rho' not contained in support of rho (weight {weight:e} on a null direction)"
            )));
        }
    }
    Ok(-von_neumann_entropy(rho_prime) - cross)
}

/// Relative entropy of coherence `C(ρ) = S(ρ_diag) - S(ρ)` in the
/// computational basis, which is the energy basis of every Hamiltonian here.
pub fn coherence_relative_entropy(rho: &DensityMatrix) -> f64 {
    let diag: Vec<f64> = (0..rho.dim()).map(|i| rho[(i, i)].re).collect();
    spectrum_entropy(&diag) - von_neumann_entropy(rho)
}

/// Pauli operators with `σz = diag(1, -1)`; index 0 is the excited state.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::from_2x2(ONE, O, O, ONE)
    }

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_2x2(O, ONE, ONE, O)
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_2x2(O, -I, I, O)
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_2x2(ONE, O, O, -ONE)
    }

    /// `σ+ = |e⟩⟨g|`.
    pub fn sigma_plus() -> ComplexMatrix {
        ComplexMatrix::from_2x2(O, ONE, O, O)
    }

    /// `σ- = |g⟩⟨e|`.
    pub fn sigma_minus() -> ComplexMatrix {
        ComplexMatrix::from_2x2(O, O, ONE, O)
    }

    /// `cos φ σx + sin φ σy`.
    pub fn in_plane(phi: f64) -> ComplexMatrix {
        ComplexMatrix::from_2x2(O, C64::from_polar(1.0, -phi), C64::from_polar(1.0, phi), O)
    }
}

#[cfg(test)]
mod tests {
    use super::pauli::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let pos = &g * g.adjoint();
        let tr = pos.trace();
        DensityMatrix::new(ComplexMatrix::from_dmatrix(pos / tr).unwrap()).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        ComplexMatrix::from_dmatrix((&g + g.adjoint()) * c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn kron_identity_and_sigma_z() {
        let i4 = tensor_product(&identity(), &identity()).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4).unwrap());
        let zi = tensor_product(&sigma_z(), &identity()).unwrap();
        assert_eq!(
            zi,
            ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]).unwrap()
        );
    }

    #[test]
    fn kron_xx_squares_to_identity() {
        let xx = tensor_product(&sigma_x(), &sigma_x()).unwrap();
        assert_eq!(&xx * &xx, ComplexMatrix::identity(4).unwrap());
    }

    #[test]
    fn kron_rejects_dimension_16() {
        let i4 = ComplexMatrix::identity(4).unwrap();
        assert_eq!(
            tensor_product(&i4, &i4),
            Err(Error::UnsupportedDimension(16))
        );
        assert!(ComplexMatrix::zeros(3).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_state(&mut rng, 2);
        let b = random_state(&mut rng, 4);
        let ab = tensor_states(&a, &b).unwrap();
        let ra = ab.partial_trace(&[2, 4], &[0]).unwrap();
        let rb = ab.partial_trace(&[2, 4], &[1]).unwrap();
        assert!(ra.max_abs_diff(&a) < 1e-14);
        assert!(rb.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        for keep in [0, 1] {
            let r = bell.partial_trace(&[2, 2], &[keep]).unwrap();
            assert!(r.max_abs_diff(&half) < 1e-15);
        }
    }

    /// Brute-force index contraction over the two ancilla indices.
    fn trace_ancillas_oracle(rho: &ComplexMatrix) -> [[C64; 2]; 2] {
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for s in 0..2 {
            for t in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        out[s][t] += rho[(4 * s + 2 * a + b, 4 * t + 2 * a + b)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn partial_trace_matches_index_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rho = random_state(&mut rng, 8);
            let reduced = rho.partial_trace(&[2, 2, 2], &[0]).unwrap();
            let oracle = trace_ancillas_oracle(&rho);
            for s in 0..2 {
                for t in 0..2 {
                    assert!((reduced[(s, t)] - oracle[s][t]).norm() < 1e-14);
                }
            }
            let env = rho.partial_trace(&[2, 2, 2], &[1, 2]).unwrap();
            let scalar = env.partial_trace(&[2, 2], &[0]).unwrap().trace();
            assert_abs_diff_eq!(scalar.re, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(matches!(
            rho.partial_trace(&[2, 3], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            rho.partial_trace(&[2, 2], &[1, 0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            rho.partial_trace(&[2, 2], &[]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn propagator_of_zero_and_sigma_z() {
        let zero = ComplexMatrix::zeros(4).unwrap();
        let u = hermitian_propagator(&zero, 3.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4).unwrap()) < 1e-15);

        let u = hermitian_propagator(&sigma_z(), std::f64::consts::FRAC_PI_2).unwrap();
        let expected = ComplexMatrix::from_row_slice(
            2,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        )
        .unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        assert!(matches!(
            hermitian_propagator(&sigma_plus(), 1.0),
            Err(Error::NotHermitian(_))
        ));
    }

    /// Scaling and squaring with a 30-term Taylor series.
    fn expm_oracle(a: &DMatrix<C64>) -> DMatrix<C64> {
        let norm: f64 = a.iter().map(|z| z.norm()).sum();
        let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
        let scaled = a / c(2f64.powi(squarings as i32), 0.0);
        let n = a.nrows();
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / c(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn propagator_matches_series_oracle_and_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let h = random_hermitian(&mut rng, 8);
            let t = rng.random_range(0.1..2.0);
            let u = hermitian_propagator(&h, t).unwrap();
            let oracle = expm_oracle(&(h.as_dmatrix() * c(0.0, -t)));
            let oracle = ComplexMatrix::from_dmatrix(oracle).unwrap();
            assert!(u.max_abs_diff(&oracle) < 1e-10);
            let uu = &u * &u.dagger();
            assert!(uu.max_abs_diff(&ComplexMatrix::identity(8).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn entropy_values() {
        let pure = DensityMatrix::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure), 0.0, epsilon = 1e-12);
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&half), 2f64.ln(), epsilon = 1e-15);
        let d =
            DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.9, 0.1]).unwrap()).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&d), 0.3250829733914482, epsilon = 1e-15);
    }

    #[test]
    fn relative_entropy_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(&mut rng, 2);
        assert_abs_diff_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);

        let up =
            DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.0, 0.0]).unwrap()).unwrap();
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(
            relative_entropy(&up, &half).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert!(matches!(
            relative_entropy(&half, &up),
            Err(Error::Domain(_))
        ));
    }

    /// Closed-form qubit matrix logarithm: log ρ = a I + b n·σ with eigenvalues
    /// (1 ± r)/2 for Bloch vector r n.
    fn qubit_log(rho: &DensityMatrix) -> DMatrix<C64> {
        let x = 2.0 * rho[(0, 1)].re;
        let y = -2.0 * rho[(0, 1)].im;
        let z = (rho[(0, 0)] - rho[(1, 1)]).re;
        let r = (x * x + y * y + z * z).sqrt();
        let (lp, lm) = (((1.0 + r) / 2.0).ln(), ((1.0 - r) / 2.0).ln());
        let a = 0.5 * (lp + lm);
        let b = 0.5 * (lp - lm) / r;
        let m = &(&identity().scale_real(a) + &sigma_x().scale_real(b * x))
            + &(&sigma_y().scale_real(b * y) + &sigma_z().scale_real(b * z));
        m.into_dmatrix()
    }

    #[test]
    fn relative_entropy_matches_bloch_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_state(&mut rng, 2);
            let b = random_state(&mut rng, 2);
            let oracle = (a.as_dmatrix() * (qubit_log(&a) - qubit_log(&b)))
                .trace()
                .re;
            assert_abs_diff_eq!(relative_entropy(&a, &b).unwrap(), oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn coherence_values() {
        let d =
            DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.3, 0.7]).unwrap()).unwrap();
        assert_eq!(coherence_relative_entropy(&d), 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        assert_abs_diff_eq!(
            coherence_relative_entropy(&plus),
            2f64.ln(),
            epsilon = 1e-12
        );

        let m =
            ComplexMatrix::from_row_slice(2, &[c(0.6, 0.0), c(0.2, 0.0), c(0.2, 0.0), c(0.4, 0.0)])
                .unwrap();
        let rho = DensityMatrix::new(m).unwrap();
        // eigenvalues of [[0.6,0.2],[0.2,0.4]] are 0.5 ± √0.05
        let r = 0.05f64.sqrt();
        let oracle = -(0.6f64 * 0.6f64.ln() + 0.4 * 0.4f64.ln())
            + (0.5 + r) * (0.5 + r).ln()
            + (0.5 - r) * (0.5 - r).ln();
        assert_abs_diff_eq!(coherence_relative_entropy(&rho), oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(oracle, 0.08349718127420835, epsilon = 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = ComplexMatrix::from_real_diagonal(&[0.5, 0.6]).unwrap();
        assert!(matches!(
            DensityMatrix::new(bad_trace),
            Err(Error::InvalidTrace(_))
        ));
        let negative = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]).unwrap();
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(Error::NotPositive(_))
        ));
        let skew =
            ComplexMatrix::from_row_slice(2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)])
                .unwrap();
        assert!(matches!(
            DensityMatrix::new(skew),
            Err(Error::NotHermitian(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn entropies_are_unitarily_invariant(seed in any::<u64>(), t in 0.1f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rho = random_state(&mut rng, 4);
                let sigma = random_state(&mut rng, 4);
                let u = hermitian_propagator(&random_hermitian(&mut rng, 4), t).unwrap();
                let rotate = |r: &DensityMatrix| {
                    DensityMatrix::new(&(&u * r.matrix()) * &u.dagger()).unwrap()
                };
                let (rr, ss) = (rotate(&rho), rotate(&sigma));
                prop_assert!((von_neumann_entropy(&rr) - von_neumann_entropy(&rho)).abs() < 1e-10);
                let before = relative_entropy(&rho, &sigma).unwrap();
                let after = relative_entropy(&rr, &ss).unwrap();
                prop_assert!((before - after).abs() < 1e-10);
            }

            #[test]
            fn klein_inequality(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_state(&mut rng, 8);
                let b = random_state(&mut rng, 8);
                prop_assert!(relative_entropy(&a, &b).unwrap() >= -1e-10);
                prop_assert!(coherence_relative_entropy(&a) >= -1e-12);
            }

            #[test]
            fn partial_traces_compose_to_scalar_trace(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rho = random_state(&mut rng, 8);
                let m = rho.matrix().partial_trace(&[2, 2, 2], &[0, 2]).unwrap();
                let m = m.partial_trace(&[2, 2], &[1]).unwrap();
                prop_assert!((m.trace() - rho.trace()).norm() < 1e-13);
            }
        }
    }
}
