//! Dense complex matrices and state vectors.
//!
//! Every generator that gets exponentiated in this crate is Hermitian, so the
//! exponential is taken through the spectral decomposition rather than a
//! series. Eigenvectors carry a fixed phase convention (largest-magnitude
//! component real and positive) so that results are reproducible.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
pub const INVOLUTORY_TOL: f64 = 1e-10;
pub const STATE_NORM_TOL: f64 = 1e-12;
/// Looser normalization check used when comparing propagated states.
pub const FIDELITY_NORM_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A column of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    amplitudes: DVector<C64>,
}

impl ComplexVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self {
            amplitudes: DVector::from_vec(amplitudes),
        }
    }

    /// Normalized state; fails when the norm is off by more than 1e-12.
    pub fn state(amplitudes: Vec<C64>) -> Result<Self> {
        let v = Self::new(amplitudes);
        v.check_normalized(STATE_NORM_TOL)?;
        Ok(v)
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Self { amplitudes: v }
    }

    /// Uniform superposition (1/√N) Σ|i⟩.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self::new(vec![C64::new(a, 0.0); dim])
    }

    pub fn from_dvector(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.normalize(),
        }
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &ComplexVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amplitudes: &self.amplitudes * factor,
        }
    }

    /// |self⟩⟨self|
    pub fn projector(&self) -> DenseOperator {
        DenseOperator::new(&self.amplitudes * self.amplitudes.adjoint())
    }

    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        (&self.amplitudes - &other.amplitudes)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Index of the largest-probability basis state (first one on ties).
    pub fn argmax_probability(&self) -> usize {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (i, z) in self.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            if p > best_p + 1e-15 {
                best = i;
                best_p = p;
            }
        }
        best
    }

    /// Tensor product self ⊗ other.
    pub fn kron(&self, other: &ComplexVector) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in self.amplitudes.iter() {
            for b in other.amplitudes.iter() {
                out.push(a * b);
            }
        }
        Self::new(out)
    }
}

/// Structural properties established by an explicit check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tags {
    pub hermitian: bool,
    pub unitary: bool,
    pub involutory: bool,
}

/// Square complex matrix with structural tags.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    tags: Tags,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self {
            matrix,
            tags: Tags::default(),
        }
    }

    pub fn from_rows(dim: usize, entries: &[C64]) -> Self {
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Self {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::new(DMatrix::identity(dim, dim));
        op.tags = Tags {
            hermitian: true,
            unitary: true,
            involutory: true,
        };
        op
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::from_element(dim, dim, ZERO))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(values)))
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

    pub fn tags(&self) -> Tags {
        self.tags
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            tags: self.tags,
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::new(&self.matrix * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        let mut out = Self::new(&self.matrix * C64::new(factor, 0.0));
        out.tags.hermitian = self.tags.hermitian;
        out
    }

    pub fn matmul(&self, other: &DenseOperator) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::new(&self.matrix * &other.matrix))
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.dim() != v.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: v.dim(),
            });
        }
        Ok(ComplexVector::from_dvector(&self.matrix * v.as_dvector()))
    }

    /// ⟨v|A|v⟩
    pub fn expectation(&self, v: &ComplexVector) -> Result<C64> {
        let av = self.apply(v)?;
        v.inner(&av)
    }

    pub fn kron(&self, other: &DenseOperator) -> Self {
        Self::new(self.matrix.kronecker(&other.matrix))
    }

    /// Max over entries of |A − A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Max over entries of |A A† − 1|.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(&self.matrix * self.matrix.adjoint() - DMatrix::<C64>::identity(n, n)))
    }

    /// Max over entries of |A² − 1|.
    pub fn involution_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(&self.matrix * &self.matrix - DMatrix::<C64>::identity(n, n)))
    }

    pub fn tag_hermitian(mut self) -> Result<Self> {
        let asymmetry = self.hermiticity_defect();
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        self.tags.hermitian = true;
        Ok(self)
    }

    pub fn tag_unitary(mut self) -> Result<Self> {
        let defect = self.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        self.tags.unitary = true;
        Ok(self)
    }

    pub fn tag_involutory(mut self) -> Result<Self> {
        let defect = self.involution_defect();
        if defect > INVOLUTORY_TOL {
            return Err(Error::NotInvolutory { defect });
        }
        self.tags.involutory = true;
        Ok(self)
    }

    /// Replaces A by (A + A†)/2 after checking the defect is within `tol`.
    pub fn symmetrize(&self, tol: f64) -> Result<Self> {
        let asymmetry = self.hermiticity_defect();
        if asymmetry > tol {
            return Err(Error::NotHermitian { asymmetry });
        }
        let m = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut out = Self::new(m);
        out.tags.hermitian = true;
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    fn check_same_dim(&self, other: &DenseOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.matrix[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator::new(&self.matrix + &rhs.matrix)
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator::new(&self.matrix - &rhs.matrix)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator::new(&self.matrix * &rhs.matrix)
    }
}

impl Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        DenseOperator::new(-&self.matrix)
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues ascending with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
}

impl Spectrum {
    pub fn ground_state(&self) -> &ComplexVector {
        &self.eigenvectors[0]
    }

    /// λ₁ − λ₀, or `None` in dimension one.
    pub fn ground_gap(&self) -> Option<f64> {
        (self.eigenvalues.len() > 1).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    /// Σ λ_i v_i v_i†
    pub fn reconstruct(&self) -> DenseOperator {
        let n = self.eigenvalues.len();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let col = v.as_dvector();
            m += col * col.adjoint() * C64::new(*lambda, 0.0);
        }
        DenseOperator::new(m)
    }
}

/// Full spectral decomposition of a Hermitian operator.
///
/// Rejects inputs whose max |A − A†| exceeds 1e-12.
pub fn hermitian_eig(a: &DenseOperator) -> Result<Spectrum> {
    hermitian_eig_with_tol(a, HERMITIAN_TOL)
}

/// As [`hermitian_eig`] with a caller-chosen Hermiticity tolerance.
pub fn hermitian_eig_with_tol(a: &DenseOperator, tol: f64) -> Result<Spectrum> {
    let sym = a.symmetrize(tol)?;
    let eig = SymmetricEigen::new(sym.into_matrix());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| fix_phase(eig.eigenvectors.column(i).into_owned()))
        .collect();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Rotates the vector so its largest-magnitude component (first one on
/// ties) is real and positive.
fn fix_phase(v: DVector<C64>) -> ComplexVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let z = v[pivot];
    let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { ONE };
    ComplexVector::from_dvector(v * phase)
}

/// exp(−iθA) for Hermitian A.
pub fn exp_generator(a: &DenseOperator, theta: f64) -> Result<DenseOperator> {
    let spectrum = hermitian_eig(a)?;
    Ok(exp_from_spectrum(&spectrum, theta))
}

/// exp(−iθA) from a precomputed spectrum of A.
pub fn exp_from_spectrum(spectrum: &Spectrum, theta: f64) -> DenseOperator {
    let n = spectrum.eigenvalues.len();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for (lambda, v) in spectrum.eigenvalues.iter().zip(&spectrum.eigenvectors) {
        let col = v.as_dvector();
        let phase = C64::from_polar(1.0, -theta * lambda);
        m += col * col.adjoint() * phase;
    }
    let mut out = DenseOperator::new(m);
    out.tags.unitary = true;
    out
}

/// AB − BA.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    a.check_same_dim(b)?;
    Ok(DenseOperator::new(
        &a.matrix * &b.matrix - &b.matrix * &a.matrix,
    ))
}

/// |⟨φ|ψ⟩|², insensitive to global phase.
pub fn fidelity_up_to_phase(psi: &ComplexVector, phi: &ComplexVector) -> Result<f64> {
    psi.check_normalized(FIDELITY_NORM_TOL)?;
    phi.check_normalized(FIDELITY_NORM_TOL)?;
    let overlap = phi.inner(psi)?;
    Ok(overlap.norm_sqr().min(1.0))
}

/// Single-qubit Pauli matrices and common states.
pub mod qubit {
    use super::*;

    pub fn sigma_x() -> DenseOperator {
        DenseOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn sigma_y() -> DenseOperator {
        DenseOperator::from_rows(2, &[ZERO, -I, I, ZERO])
    }

    pub fn sigma_z() -> DenseOperator {
        DenseOperator::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0])
    }

    pub fn ket0() -> ComplexVector {
        ComplexVector::basis(2, 0)
    }

    pub fn ket1() -> ComplexVector {
        ComplexVector::basis(2, 1)
    }

    pub fn plus() -> ComplexVector {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        ComplexVector::from_real(&[a, a])
    }

    pub fn minus() -> ComplexVector {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        ComplexVector::from_real(&[a, -a])
    }

    /// |+⟩^{⊗n}
    pub fn plus_n(n: usize) -> ComplexVector {
        ComplexVector::uniform(1 << n)
    }
}
