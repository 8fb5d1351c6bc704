//! Invariant schedules s ↦ I(s) and the checks that make them invariants.
//!
//! A schedule is a Hermitian-operator-valued function of normalized time
//! s ∈ [0, 1]. Given a Hamiltonian schedule H(s, T) the defining relation is
//!
//! ```text
//! ∂I/∂s + iT [H(s, T), I(s)] = 0
//! ```
//!
//! which [`invariant_residual`] evaluates on a grid. Schedules built by
//! unitary conjugation keep their spectrum fixed; [`spectrum_flow`]
//! measures that directly.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::csvout;
use crate::error::{Error, Result};
use crate::linalg::{commutator, hermitian_eig_with_tol, ComplexVector, DenseOperator, Spectrum, C64};
use crate::numeric::{operator_derivative, FD_STEP};
use crate::synth::HamiltonianSchedule;

/// Hermiticity tolerance for operators sampled from a schedule.
pub const SCHEDULE_HERMITIAN_TOL: f64 = 1e-10;
/// Gaps below this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

pub type OperatorPath = Arc<dyn Fn(f64) -> DenseOperator + Send + Sync>;

#[derive(Clone)]
pub struct InvariantSchedule {
    dim: usize,
    value: OperatorPath,
    derivative: Option<OperatorPath>,
}

impl fmt::Debug for InvariantSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantSchedule")
            .field("dim", &self.dim)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl InvariantSchedule {
    pub fn new<F>(dim: usize, value: F) -> Self
    where
        F: Fn(f64) -> DenseOperator + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            derivative: None,
        }
    }

    /// I(s) = I0 for all s.
    pub fn constant(op: DenseOperator) -> Self {
        let dim = op.dim();
        let zero = DenseOperator::zeros(dim);
        Self::new(dim, move |_| op.clone()).with_derivative(move |_| zero.clone())
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> DenseOperator + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, s: f64) -> DenseOperator {
        (self.value)(s)
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// ∂I/∂s, analytic when available, else Richardson-checked central
    /// difference with step 1e-5.
    pub fn derivative(&self, s: f64) -> DenseOperator {
        match &self.derivative {
            Some(d) => d(s),
            None => operator_derivative(|x| self.value(x), s, FD_STEP).value,
        }
    }

    pub fn spectrum(&self, s: f64) -> Result<Spectrum> {
        hermitian_eig_with_tol(&self.value(s), SCHEDULE_HERMITIAN_TOL)
    }

    /// Lowest-eigenvalue eigenvector of I(s); fails if that level is degenerate.
    pub fn ground_state(&self, s: f64) -> Result<ComplexVector> {
        let spectrum = self.spectrum(s)?;
        if let Some(gap) = spectrum.ground_gap() {
            if gap < DEGENERACY_TOL {
                return Err(Error::DegenerateGround { s, gap });
            }
        }
        Ok(spectrum.eigenvectors[0].clone())
    }

    /// Max Hermiticity defect over the grid; errors past 1e-10.
    pub fn check_hermitian(&self, grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &s in grid {
            let asymmetry = self.value(s).hermiticity_defect();
            if asymmetry > SCHEDULE_HERMITIAN_TOL {
                return Err(Error::NotHermitian { asymmetry });
            }
            worst = worst.max(asymmetry);
        }
        Ok(worst)
    }
}

/// ω(1 − |φ0⟩⟨φ0|): ground state φ0 at 0, every other level at ω.
pub fn projector_invariant(phi0: &ComplexVector, omega: f64) -> Result<DenseOperator> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("gap parameter must be positive, got {omega}"),
        });
    }
    phi0.check_normalized(1e-12)?;
    let dim = phi0.dim();
    let op = &DenseOperator::identity(dim) - &phi0.projector();
    op.scale_real(omega).tag_hermitian()
}

/// I(s) = U(s)·I0·U(s)†.
///
/// `path` must start at the identity (within 1e-10).
pub fn conjugate_schedule<F>(path: F, initial: DenseOperator) -> Result<InvariantSchedule>
where
    F: Fn(f64) -> DenseOperator + Send + Sync + 'static,
{
    let u0 = path(0.0);
    if u0.dim() != initial.dim() {
        return Err(Error::DimensionMismatch {
            left: u0.dim(),
            right: initial.dim(),
        });
    }
    let deviation = u0.max_abs_diff(&DenseOperator::identity(u0.dim()));
    if deviation > 1e-10 {
        return Err(Error::PathNotAtIdentity { deviation });
    }
    let dim = initial.dim();
    Ok(InvariantSchedule::new(dim, move |s| {
        let u = path(s);
        let m = u.matrix() * initial.matrix() * u.matrix().adjoint();
        DenseOperator::new(m)
    }))
}

/// Pointwise residual ‖∂I/∂s + iT[H, I]‖_F over a grid.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub grid: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max: f64,
}

impl ResidualReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .grid
            .iter()
            .zip(&self.residuals)
            .map(|(s, r)| vec![*s, *r])
            .collect();
        csvout::write_table(out, &["s".into(), "residual".into()], &rows)
    }
}

pub fn invariant_residual(
    invariant: &InvariantSchedule,
    hamiltonian: &HamiltonianSchedule,
    total_time: f64,
    grid: &[f64],
) -> Result<ResidualReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if invariant.dim() != hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            left: invariant.dim(),
            right: hamiltonian.dim(),
        });
    }
    check_time(total_time)?;
    let residuals: Vec<f64> = grid
        .iter()
        .map(|&s| residual_at(invariant, hamiltonian, total_time, s))
        .collect::<Result<_>>()?;
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport {
        grid: grid.to_vec(),
        residuals,
        max,
    })
}

fn residual_at(
    invariant: &InvariantSchedule,
    hamiltonian: &HamiltonianSchedule,
    total_time: f64,
    s: f64,
) -> Result<f64> {
    let di = invariant.derivative(s);
    let comm = commutator(&hamiltonian.value(s, total_time), &invariant.value(s))?;
    let r = &di + &comm.scale(C64::new(0.0, total_time));
    Ok(r.frobenius_norm())
}

pub(crate) fn check_time(total_time: f64) -> Result<()> {
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: format!("total time must be positive, got {total_time}"),
        });
    }
    Ok(())
}

/// Eigenvalue tracks of I(s) on a grid.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub grid: Vec<f64>,
    /// `eigenvalue_tracks[level][k]` is the level's eigenvalue at `grid[k]`.
    pub eigenvalue_tracks: Vec<Vec<f64>>,
    pub min_gap: f64,
    pub max_eigenvalue_drift: f64,
    /// Ground level touches the next one somewhere on the grid.
    pub degenerate: bool,
}

impl GapReport {
    /// Columns: s, λ_0 … λ_{dim−1}, gap.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let levels = self.eigenvalue_tracks.len();
        let mut header = vec!["s".to_string()];
        header.extend((0..levels).map(|i| format!("lambda_{i}")));
        header.push("gap".into());
        let rows: Vec<Vec<f64>> = self
            .grid
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let mut row = vec![s];
                row.extend(self.eigenvalue_tracks.iter().map(|t| t[k]));
                row.push(if levels > 1 {
                    self.eigenvalue_tracks[1][k] - self.eigenvalue_tracks[0][k]
                } else {
                    0.0
                });
                row
            })
            .collect();
        csvout::write_table(out, &header, &rows)
    }
}

pub fn spectrum_flow(invariant: &InvariantSchedule, grid: &[f64]) -> Result<GapReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let dim = invariant.dim();
    let mut tracks = vec![Vec::with_capacity(grid.len()); dim];
    for &s in grid {
        let spectrum = invariant.spectrum(s)?;
        for (track, lambda) in tracks.iter_mut().zip(spectrum.eigenvalues) {
            track.push(lambda);
        }
    }
    let max_eigenvalue_drift = tracks
        .iter()
        .flat_map(|t| t.iter().map(move |x| (x - t[0]).abs()))
        .fold(0.0, f64::max);
    let min_gap = if dim > 1 {
        tracks[1]
            .iter()
            .zip(&tracks[0])
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    Ok(GapReport {
        grid: grid.to_vec(),
        eigenvalue_tracks: tracks,
        min_gap,
        max_eigenvalue_drift,
        degenerate: min_gap < DEGENERACY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{exp_generator, qubit::*};
    use crate::numeric::unit_grid;
    use std::f64::consts::PI;

    #[test]
    fn projector_invariant_single_qubit() {
        let i0 = projector_invariant(&plus(), 1.0).unwrap();
        assert!(i0.max_abs_diff(&minus().projector()) < 1e-15);
        let i1 = projector_invariant(&ket0(), 2.0).unwrap();
        assert!(i1.max_abs_diff(&ket1().projector().scale_real(2.0)) < 1e-15);
    }

    #[test]
    fn projector_invariant_uniform_two_qubits() {
        let i0 = projector_invariant(&plus_n(2), 1.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = if r == c { 0.75 } else { -0.25 };
                assert!((i0.get(r, c) - C64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn projector_invariant_levels() {
        let phi = ComplexVector::uniform(8);
        let i0 = projector_invariant(&phi, 0.7).unwrap();
        let s = hermitian_eig_with_tol(&i0, 1e-12).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-14);
        for l in &s.eigenvalues[1..] {
            assert!((l - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn projector_invariant_rejects_bad_omega() {
        assert!(matches!(
            projector_invariant(&plus(), 0.0),
            Err(Error::InvalidParameter { name: "omega", .. })
        ));
        assert!(matches!(
            projector_invariant(&ComplexVector::from_real(&[1.0, 1.0]), 1.0),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn conjugation_by_z_rotation() {
        let z = sigma_z();
        let sched = conjugate_schedule(
            move |s| exp_generator(&z, PI * s / 2.0).unwrap(),
            minus().projector(),
        )
        .unwrap();
        for s in unit_grid(11) {
            let expected = &(&DenseOperator::identity(2) - &sigma_x().scale_real((PI * s).cos()))
                - &sigma_y().scale_real((PI * s).sin());
            assert!(sched.value(s).max_abs_diff(&expected.scale_real(0.5)) < 1e-14);
        }
    }

    #[test]
    fn conjugation_of_identity_is_constant() {
        let y = sigma_y();
        let sched = conjugate_schedule(
            move |s| exp_generator(&y, 3.0 * s).unwrap(),
            DenseOperator::identity(2),
        )
        .unwrap();
        for s in unit_grid(5) {
            assert!(sched.value(s).max_abs_diff(&DenseOperator::identity(2)) < 1e-14);
        }
    }

    #[test]
    fn conjugation_requires_identity_start() {
        let err = conjugate_schedule(|_| sigma_x(), DenseOperator::identity(2)).unwrap_err();
        assert!(matches!(err, Error::PathNotAtIdentity { .. }));
    }

    #[test]
    fn residual_with_zero_hamiltonian_is_derivative_norm() {
        let z = sigma_z();
        let sched = conjugate_schedule(
            move |s| exp_generator(&z, PI * s / 2.0).unwrap(),
            minus().projector(),
        )
        .unwrap();
        let h = HamiltonianSchedule::zero(2);
        let report = invariant_residual(&sched, &h, 1.0, &unit_grid(21)).unwrap();
        // ‖d/ds ½(cos πs X + sin πs Y)‖_F = (π/2)·‖(−sin, cos)·σ‖_F = π/√2
        assert!((report.max - PI / 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn residual_rejects_empty_grid() {
        let sched = InvariantSchedule::constant(DenseOperator::identity(2));
        let h = HamiltonianSchedule::zero(2);
        assert_eq!(invariant_residual(&sched, &h, 1.0, &[]).unwrap_err(), Error::EmptyGrid);
        assert!(invariant_residual(&sched, &h, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn flow_of_identity_is_degenerate() {
        let sched = InvariantSchedule::constant(DenseOperator::identity(3));
        let report = spectrum_flow(&sched, &unit_grid(5)).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.min_gap, 0.0);
        for t in &report.eigenvalue_tracks {
            assert!(t.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        }
        assert!(sched.ground_state(0.3).is_err());
    }

    #[test]
    fn gap_csv_columns() {
        let sched = InvariantSchedule::constant(minus().projector());
        let report = spectrum_flow(&sched, &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "s,lambda_0,lambda_1,gap");
        assert_eq!(text.lines().count(), 4);
    }
}
