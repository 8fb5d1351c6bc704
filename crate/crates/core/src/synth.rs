//! Hamiltonian synthesis from an invariant schedule.
//!
//! Two routes are provided:
//!
//! * the commuting case, where the invariant is rotated by
//!   `exp(−iα(s)U)` with an involutory `U` and the driver is
//!   `H(s, T) = α′(s)/T · U` in closed form;
//! * the general case, where the invariant is expanded over a Pauli basis
//!   closed under the bracket and the Hamiltonian coefficients follow, point
//!   by point in s, from a real linear system built from the structure
//!   constants. Underdetermined systems are resolved by minimum norm.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::csvout;
use crate::error::{Error, Result};
use crate::invariant::{check_time, InvariantSchedule, SCHEDULE_HERMITIAN_TOL};
use crate::linalg::{hermitian_eig_with_tol, qubit, DenseOperator, C64, I, ZERO};
use crate::numeric::{adaptive_simpson, operator_derivative, scalar_derivative, FD_STEP};
use crate::pauli::{
    decompose, project_onto, qubits_for_dim, to_dense, PauliBasis, PauliString, PauliSum,
    StructureConstant,
};

pub type HamiltonianFn = Arc<dyn Fn(f64, f64) -> DenseOperator + Send + Sync>;
pub type PauliFn = Arc<dyn Fn(f64, f64) -> PauliSum + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleSource {
    ClosedForm,
    Solver,
    User,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleMetadata {
    pub commuting_case: bool,
    pub source: ScheduleSource,
    /// H does not depend on s (T dependence is still allowed).
    pub time_independent: bool,
}

/// H(s, T) = ω(s, T)·G for a fixed operator G.
#[derive(Clone)]
pub struct ScalarProfile {
    omega: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    operator: DenseOperator,
}

impl ScalarProfile {
    pub fn omega(&self, s: f64, total_time: f64) -> f64 {
        (self.omega)(s, total_time)
    }

    pub fn operator(&self) -> &DenseOperator {
        &self.operator
    }
}

/// The driver (s, T) ↦ H(s, T).
#[derive(Clone)]
pub struct HamiltonianSchedule {
    dim: usize,
    value: HamiltonianFn,
    s_derivative: Option<HamiltonianFn>,
    pauli_view: Option<PauliFn>,
    profile: Option<ScalarProfile>,
    metadata: ScheduleMetadata,
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSchedule")
            .field("dim", &self.dim)
            .field("metadata", &self.metadata)
            .field("pauli_view", &self.pauli_view.is_some())
            .field("profile", &self.profile.is_some())
            .finish()
    }
}

impl HamiltonianSchedule {
    pub fn from_fn<F>(dim: usize, value: F) -> Self
    where
        F: Fn(f64, f64) -> DenseOperator + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            s_derivative: None,
            pauli_view: None,
            profile: None,
            metadata: ScheduleMetadata {
                commuting_case: false,
                source: ScheduleSource::User,
                time_independent: false,
            },
        }
    }

    pub fn zero(dim: usize) -> Self {
        let zero = DenseOperator::zeros(dim);
        let mut out = Self::from_fn(dim, move |_, _| zero.clone());
        out.metadata.time_independent = true;
        out
    }

    /// H(s, T) = scale/T · G, independent of s.
    pub fn constant_over_time(operator: DenseOperator, scale: f64) -> Self {
        let dim = operator.dim();
        let op = operator.clone();
        let mut out = Self::from_fn(dim, move |_, t| op.scale_real(scale / t));
        out.profile = Some(ScalarProfile {
            omega: Arc::new(move |_, t| scale / t),
            operator,
        });
        out.metadata.commuting_case = true;
        out.metadata.time_independent = true;
        out
    }

    pub fn with_metadata(mut self, metadata: ScheduleMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn with_pauli_view<F>(mut self, view: F) -> Self
    where
        F: Fn(f64, f64) -> PauliSum + Send + Sync + 'static,
    {
        self.pauli_view = Some(Arc::new(view));
        self
    }

    pub fn with_s_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64, f64) -> DenseOperator + Send + Sync + 'static,
    {
        self.s_derivative = Some(Arc::new(derivative));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, s: f64, total_time: f64) -> DenseOperator {
        (self.value)(s, total_time)
    }

    pub fn pauli(&self, s: f64, total_time: f64) -> Option<PauliSum> {
        self.pauli_view.as_ref().map(|v| v(s, total_time))
    }

    pub fn has_pauli_view(&self) -> bool {
        self.pauli_view.is_some()
    }

    pub fn profile(&self) -> Option<&ScalarProfile> {
        self.profile.as_ref()
    }

    pub fn metadata(&self) -> ScheduleMetadata {
        self.metadata
    }

    /// ∂H/∂s at fixed T.
    pub fn s_derivative(&self, s: f64, total_time: f64) -> DenseOperator {
        match &self.s_derivative {
            Some(d) => d(s, total_time),
            None => operator_derivative(|x| self.value(x, total_time), s, FD_STEP).value,
        }
    }

    /// Pauli coefficients, from the view when present, else by decomposition.
    pub fn pauli_coefficients(&self, s: f64, total_time: f64) -> Result<PauliSum> {
        match self.pauli(s, total_time) {
            Some(sum) => Ok(sum),
            None => {
                let n = qubits_for_dim(self.dim)?;
                decompose(&self.value(s, total_time), n)
            }
        }
    }

    /// V·H·V† for an isometry V (dim × k) from a k-dimensional schedule.
    pub fn embed(&self, isometry: &DMatrix<C64>) -> Result<Self> {
        if isometry.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                left: isometry.ncols(),
                right: self.dim,
            });
        }
        let big = isometry.nrows();
        let lift = {
            let v = isometry.clone();
            move |op: &DenseOperator| DenseOperator::new(&v * op.matrix() * v.adjoint())
        };
        let inner = self.value.clone();
        let lift_value = lift.clone();
        let mut out = Self::from_fn(big, move |s, t| lift_value(&inner(s, t)));
        if let Some(d) = self.s_derivative.clone() {
            let lift_d = lift.clone();
            out = out.with_s_derivative(move |s, t| lift_d(&d(s, t)));
        }
        out.profile = self.profile.as_ref().map(|p| ScalarProfile {
            omega: p.omega.clone(),
            operator: lift(&p.operator),
        });
        out.metadata = self.metadata;
        Ok(out)
    }

    /// Max Hermiticity defect over sampled (s, T).
    pub fn check_hermitian(&self, total_time: f64, grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &s in grid {
            let asymmetry = self.value(s, total_time).hermiticity_defect();
            if asymmetry > SCHEDULE_HERMITIAN_TOL {
                return Err(Error::NotHermitian { asymmetry });
            }
            worst = worst.max(asymmetry);
        }
        Ok(worst)
    }

    /// Columns: s, then one column per Pauli string seen on the grid.
    pub fn write_csv<W: Write>(&self, out: W, total_time: f64, grid: &[f64]) -> Result<()> {
        let sums: Vec<PauliSum> = grid
            .iter()
            .map(|&s| self.pauli_coefficients(s, total_time))
            .collect::<Result<_>>()?;
        let mut strings: Vec<PauliString> = sums.iter().flat_map(|p| p.strings().cloned()).collect();
        strings.sort();
        strings.dedup();
        let mut header = vec!["s".to_string()];
        header.extend(strings.iter().map(|p| p.to_string()));
        let rows: Vec<Vec<f64>> = grid
            .iter()
            .zip(&sums)
            .map(|(&s, sum)| {
                let mut row = vec![s];
                row.extend(strings.iter().map(|p| sum.coefficient(p).re));
                row
            })
            .collect();
        csvout::write_table(out, &header, &rows)
    }
}

/// Interpolation angle α(s) of the rotation exp(−iα(s)U).
#[derive(Clone)]
pub struct AlphaProfile {
    alpha: ScalarFn,
    derivative: ScalarFn,
    boundary_class: i64,
    linear: bool,
}

impl fmt::Debug for AlphaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlphaProfile")
            .field("boundary_class", &self.boundary_class)
            .field("linear", &self.linear)
            .finish()
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

impl AlphaProfile {
    /// α(s) = πs/2, giving an s-independent Hamiltonian.
    pub fn linear() -> Self {
        Self {
            alpha: Arc::new(|s| PI * s / 2.0),
            derivative: Arc::new(|_| PI / 2.0),
            boundary_class: 0,
            linear: true,
        }
    }

    /// α(s) = (π/2)·sin(πs/2).
    pub fn sinusoidal() -> Self {
        Self {
            alpha: Arc::new(|s| PI / 2.0 * (PI * s / 2.0).sin()),
            derivative: Arc::new(|s| PI * PI / 4.0 * (PI * s / 2.0).cos()),
            boundary_class: 0,
            linear: false,
        }
    }

    /// Custom profile; requires α(0) = nπ and α(1) = (n + ½)π.
    pub fn new<A, D>(alpha: A, derivative: D) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let start = alpha(0.0);
        let end = alpha(1.0);
        let n = (start / PI).round();
        if (start - n * PI).abs() > BOUNDARY_TOL || (end - (n + 0.5) * PI).abs() > BOUNDARY_TOL {
            return Err(Error::BoundaryConditions { start, end });
        }
        Ok(Self {
            alpha: Arc::new(alpha),
            derivative: Arc::new(derivative),
            boundary_class: n as i64,
            linear: false,
        })
    }

    /// Custom profile with α′ by finite differences.
    pub fn from_alpha<A>(alpha: A) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    {
        let a = alpha.clone();
        Self::new(alpha, move |s| scalar_derivative(&a, s, FD_STEP))
    }

    pub fn alpha(&self, s: f64) -> f64 {
        (self.alpha)(s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        (self.derivative)(s)
    }

    pub fn boundary_class(&self) -> i64 {
        self.boundary_class
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }
}

/// H(s, T) = α′(s)/T · U for Hermitian, unitary, involutory U.
pub fn commuting_hamiltonian(u: &DenseOperator, alpha: &AlphaProfile) -> Result<HamiltonianSchedule> {
    let u = u.clone().tag_hermitian()?.tag_unitary()?.tag_involutory()?;
    let dim = u.dim();
    let rate = alpha.derivative.clone();
    let pauli_u = qubits_for_dim(dim).ok().map(|n| decompose(&u, n)).transpose()?;

    let op = u.clone();
    let r = rate.clone();
    let mut schedule = HamiltonianSchedule::from_fn(dim, move |s, t| op.scale_real(r(s) / t));
    let r = rate.clone();
    schedule.profile = Some(ScalarProfile {
        omega: Arc::new(move |s, t| r(s) / t),
        operator: u.clone(),
    });
    if let Some(sum) = pauli_u {
        let r = rate.clone();
        schedule = schedule.with_pauli_view(move |s, t| sum.scale(C64::new(r(s) / t, 0.0)));
    }
    if alpha.linear {
        let zero = DenseOperator::zeros(dim);
        schedule = schedule.with_s_derivative(move |_, _| zero.clone());
    }
    schedule.metadata = ScheduleMetadata {
        commuting_case: true,
        source: ScheduleSource::ClosedForm,
        time_independent: alpha.linear,
    };
    Ok(schedule)
}

/// (σx, σy, σz) coefficients of the closed-form polynomial-variant driver
/// at T = 1.
///
/// Numerator and denominator are divided by s^{2·min(n,r)} first so every
/// remaining power is nonnegative and s = 0 evaluates to the limit.
pub fn polynomial_coefficients(n: u32, r: u32, xi_plus: f64, s: f64) -> [f64; 3] {
    let p = n.min(r);
    let q = n.max(r);
    let pow = |e: u32| s.powi(e as i32);
    let d = pow(2 * n - 2 * p) + pow(2 * r - 2 * p);
    let num = n as f64 * pow(2 * n - 2 * p) + r as f64 * pow(2 * r - 2 * p);
    let hx = if n == r {
        0.0
    } else {
        -(n as f64 - r as f64) * pow(q - p - 1) / d
    };
    let c = -PI * xi_plus * num / (2.0 * SQRT_2 * d);
    [hx, c * pow(n - 1), c * pow(r - 1)]
}

/// Coefficient of (σy + σz) in the n = r reduction, at T = 1.
pub fn equal_power_coefficient(n: u32, xi_plus: f64, s: f64) -> f64 {
    -PI * n as f64 * s.powi(n as i32 - 1) * xi_plus / (2.0 * SQRT_2)
}

/// Closed-form driver of the polynomial single-qubit interpolation.
pub fn dj_polynomial_hamiltonian(n: u32, r: u32, xi_plus: f64) -> Result<HamiltonianSchedule> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter {
            name: "n, r",
            reason: "powers must be at least 1".into(),
        });
    }
    if ![-1.0, 0.0, 1.0].contains(&xi_plus) {
        return Err(Error::InvalidParameter {
            name: "xi_plus",
            reason: format!("must be -1, 0 or 1, got {xi_plus}"),
        });
    }
    let paulis = [qubit::sigma_x(), qubit::sigma_y(), qubit::sigma_z()];
    let strings: [PauliString; 3] = ["X", "Y", "Z"].map(|w| w.parse().unwrap());
    let ops = paulis.clone();
    let mut schedule = HamiltonianSchedule::from_fn(2, move |s, t| {
        let h = polynomial_coefficients(n, r, xi_plus, s);
        let mut m = DenseOperator::zeros(2);
        for (c, p) in h.iter().zip(&ops) {
            m = &m + &p.scale_real(c / t);
        }
        m
    })
    .with_pauli_view(move |s, t| {
        let h = polynomial_coefficients(n, r, xi_plus, s);
        PauliSum::from_terms(
            1,
            strings.iter().cloned().zip(h.iter().map(|c| C64::new(c / t, 0.0))),
        )
        .expect("single-qubit strings")
    });
    if n == r {
        let sign = if xi_plus < 0.0 { -1.0 } else { 1.0 };
        let g = (&paulis[1] + &paulis[2]).scale_real(-sign);
        let abs_xi = xi_plus.abs();
        schedule.profile = Some(ScalarProfile {
            omega: Arc::new(move |s, t| -equal_power_coefficient(n, abs_xi, s) / t),
            operator: g,
        });
    }
    schedule.metadata = ScheduleMetadata {
        commuting_case: n == r,
        source: ScheduleSource::ClosedForm,
        time_independent: (n == r && n == 1) || (n == r && xi_plus == 0.0),
    };
    Ok(schedule)
}

/// Above this the coefficient system counts as ill-conditioned.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Least-squares residual (Frobenius, at T = 1) above which the invariant
/// cannot be driven from within the basis.
pub const CONSISTENCY_TOL: f64 = 1e-7;
/// Weight of I(s) outside span(basis ∪ {1}) tolerated.
pub const SPAN_TOL: f64 = 1e-10;

/// Per-point solution of the coefficient system, scaled to T = 1.
#[derive(Clone, Debug)]
pub struct PointSolution {
    pub s: f64,
    /// T·h_k(s, T), one per basis string.
    pub scaled_coefficients: Vec<f64>,
    pub max_imag: f64,
    pub residual: f64,
    pub condition: f64,
    pub rank: usize,
    pub outside_weight: f64,
}

/// Pointwise linear solver for the Hamiltonian coefficients.
#[derive(Clone)]
pub struct CoefficientSolver {
    invariant: InvariantSchedule,
    basis: PauliBasis,
    structure: Vec<StructureConstant>,
}

impl fmt::Debug for CoefficientSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSolver")
            .field("basis", &self.basis)
            .finish()
    }
}

impl CoefficientSolver {
    pub fn new(invariant: InvariantSchedule, basis: PauliBasis) -> Result<Self> {
        let n = qubits_for_dim(invariant.dim())?;
        if n != basis.n_qubits() {
            return Err(Error::QubitMismatch {
                left: n,
                right: basis.n_qubits(),
            });
        }
        let structure = basis.structure_constants();
        Ok(Self {
            invariant,
            basis,
            structure,
        })
    }

    pub fn basis(&self) -> &PauliBasis {
        &self.basis
    }

    /// Solves λ′_k + i Σ_{ij} (T h_i) λ_j C^k_{ij} = 0 for T·h at one s.
    pub fn solve_at(&self, s: f64) -> PointSolution {
        let strings = self.basis.strings();
        let m = strings.len();
        let value = self.invariant.value(s);
        let derivative = self.invariant.derivative(s);
        let lambda = project_onto(&value, strings);
        let lambda_dot = project_onto(&derivative, strings);

        let mut a = DMatrix::from_element(m, m, ZERO);
        for sc in &self.structure {
            a[(sc.k, sc.i)] += I * sc.coefficient * lambda[sc.j];
        }
        let b = DVector::from_iterator(m, lambda_dot.iter().map(|x| -x));

        let (h, condition, rank) = min_norm_solve(a, b);
        let max_imag = h.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let scaled_coefficients: Vec<f64> = h.iter().map(|z| z.re).collect();

        let k_op = self.operator_from(&scaled_coefficients);
        let comm = &(&k_op * &value) - &(&value * &k_op);
        let residual = (&derivative + &comm.scale(I)).frobenius_norm();
        let outside_weight = outside_span(&value, strings, &lambda);

        PointSolution {
            s,
            scaled_coefficients,
            max_imag,
            residual,
            condition,
            rank,
            outside_weight,
        }
    }

    fn operator_from(&self, coefficients: &[f64]) -> DenseOperator {
        to_dense(&self.pauli_sum(coefficients, 1.0))
    }

    fn pauli_sum(&self, scaled: &[f64], total_time: f64) -> PauliSum {
        PauliSum::from_terms(
            self.basis.n_qubits(),
            self.basis
                .strings()
                .iter()
                .cloned()
                .zip(scaled.iter().map(|c| C64::new(c / total_time, 0.0))),
        )
        .expect("basis strings share the qubit count")
    }

    /// Lazily solved schedule: each (s, T) sample re-solves at s.
    pub fn schedule(&self) -> HamiltonianSchedule {
        let dense_solver = self.clone();
        let view_solver = self.clone();
        HamiltonianSchedule::from_fn(self.invariant.dim(), move |s, t| {
            let sol = dense_solver.solve_at(s);
            to_dense(&dense_solver.pauli_sum(&sol.scaled_coefficients, t))
        })
        .with_pauli_view(move |s, t| {
            let sol = view_solver.solve_at(s);
            view_solver.pauli_sum(&sol.scaled_coefficients, t)
        })
        .with_metadata(ScheduleMetadata {
            commuting_case: false,
            source: ScheduleSource::Solver,
            time_independent: false,
        })
    }
}

/// Weight of `op` outside span(basis ∪ {1}), measured in Frobenius norm.
fn outside_span(op: &DenseOperator, basis: &[PauliString], lambda: &[C64]) -> f64 {
    let dim = op.dim();
    let mut rest = op.clone();
    let identity_weight = op.trace() / dim as f64;
    rest = &rest - &DenseOperator::identity(dim).scale(identity_weight);
    for (p, c) in basis.iter().zip(lambda) {
        rest = &rest - &p.to_dense().scale(*c);
    }
    rest.frobenius_norm()
}

/// Minimum-norm least squares via SVD; returns (x, condition, rank).
fn min_norm_solve(a: DMatrix<C64>, b: DVector<C64>) -> (DVector<C64>, f64, usize) {
    let m = a.ncols();
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return (DVector::from_element(m, ZERO), 1.0, 0);
    }
    let eps = (sigma_max * 1e-10).max(1e-14);
    let kept: Vec<f64> = svd
        .singular_values
        .iter()
        .copied()
        .filter(|&x| x > eps)
        .collect();
    let sigma_min = kept.iter().copied().fold(f64::INFINITY, f64::min);
    let x = svd.solve(&b, eps).expect("U and V were computed");
    (x, sigma_max / sigma_min, kept.len())
}

/// Solver output validated on a grid.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub schedule: HamiltonianSchedule,
    pub basis: PauliBasis,
    pub points: Vec<PointSolution>,
    pub total_time: f64,
    pub max_residual: f64,
    pub max_condition: f64,
    pub max_imag: f64,
}

impl Synthesis {
    /// h_k(s, T) at each grid point, one row per point.
    pub fn coefficient_rows(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                p.scaled_coefficients
                    .iter()
                    .map(|c| c / self.total_time)
                    .collect()
            })
            .collect()
    }

    /// h for string `p` at grid index `k`.
    pub fn coefficient(&self, k: usize, p: &PauliString) -> Option<f64> {
        let idx = self.basis.position(p)?;
        Some(self.points[k].scaled_coefficients[idx] / self.total_time)
    }
}

/// Bracket closure of every string that appears in I(s) on the grid.
pub fn basis_for(invariant: &InvariantSchedule, grid: &[f64]) -> Result<PauliBasis> {
    let n = qubits_for_dim(invariant.dim())?;
    let mut generators: Vec<PauliString> = Vec::new();
    for &s in grid {
        let sum = decompose(&invariant.value(s), n)?;
        generators.extend(sum.without_identity().strings().cloned());
    }
    generators.sort();
    generators.dedup();
    PauliBasis::closure(n, &generators)
}

/// Solves for the Hamiltonian coefficients over `basis` on `grid`.
pub fn solve_coefficients(
    invariant: &InvariantSchedule,
    basis: &PauliBasis,
    total_time: f64,
    grid: &[f64],
) -> Result<Synthesis> {
    check_time(total_time)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let solver = CoefficientSolver::new(invariant.clone(), basis.clone())?;
    let mut points = Vec::with_capacity(grid.len());
    for &s in grid {
        let p = solver.solve_at(s);
        if p.outside_weight > SPAN_TOL {
            return Err(Error::OutsideBasis {
                s,
                weight: p.outside_weight,
            });
        }
        if p.residual > CONSISTENCY_TOL {
            return Err(Error::Inconsistent {
                s,
                residual: p.residual,
            });
        }
        if p.condition > CONDITION_LIMIT {
            return Err(Error::IllConditioned {
                s,
                condition: p.condition,
            });
        }
        points.push(p);
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let max_condition = points.iter().map(|p| p.condition).fold(0.0, f64::max);
    let max_imag = points.iter().map(|p| p.max_imag).fold(0.0, f64::max);
    Ok(Synthesis {
        schedule: solver.schedule(),
        basis: basis.clone(),
        points,
        total_time,
        max_residual,
        max_condition,
        max_imag,
    })
}

/// [`basis_for`] followed by [`solve_coefficients`].
pub fn synthesize(invariant: &InvariantSchedule, total_time: f64, grid: &[f64]) -> Result<Synthesis> {
    let basis = basis_for(invariant, grid)?;
    solve_coefficients(invariant, &basis, total_time, grid)
}

/// Time average ∫₀¹ ω(s, T) ds of a scalar-profile schedule.
pub fn effective_frequency(hamiltonian: &HamiltonianSchedule, total_time: f64) -> Result<f64> {
    check_time(total_time)?;
    let profile = hamiltonian.profile().ok_or(Error::NoScalarProfile)?;
    adaptive_simpson(|s| profile.omega(s, total_time), 0.0, 1.0, 1e-12)
}

/// Largest |⟨n|dH/dt|m⟩| / (E_n − E_m)² on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticityReport {
    /// `f64::INFINITY` when a level crossing was found.
    pub value: f64,
    pub crossing_at: Option<f64>,
    /// Grid point where the finite maximum occurs.
    pub argmax: Option<f64>,
}

pub fn adiabaticity_metric(
    hamiltonian: &HamiltonianSchedule,
    total_time: f64,
    grid: &[f64],
) -> Result<AdiabaticityReport> {
    check_time(total_time)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best = 0.0f64;
    let mut argmax = None;
    for &s in grid {
        let h = hamiltonian.value(s, total_time);
        let dh_dt = hamiltonian.s_derivative(s, total_time).scale_real(1.0 / total_time);
        if dh_dt.max_abs() <= 1e-14 {
            continue;
        }
        let spectrum = hermitian_eig_with_tol(&h, SCHEDULE_HERMITIAN_TOL)?;
        let dim = h.dim();
        let vecs = DMatrix::from_columns(
            &spectrum
                .eigenvectors
                .iter()
                .map(|v| v.as_dvector().clone())
                .collect::<Vec<_>>(),
        );
        let coupling = vecs.adjoint() * dh_dt.matrix() * &vecs;
        let scale = h.max_abs().max(1.0);
        let gap_tol = 1e-10 * scale;
        let coupling_tol = 1e-10 * dh_dt.max_abs().max(1e-300);

        let e = &spectrum.eigenvalues;
        let mut start = 0;
        while start < dim {
            let mut end = start + 1;
            while end < dim && e[end] - e[end - 1] <= gap_tol {
                end += 1;
            }
            if end - start > 1 {
                // derivative must act as a multiple of the identity on the cluster
                let mean = (start..end).map(|k| coupling[(k, k)].re).sum::<f64>()
                    / (end - start) as f64;
                for a in start..end {
                    for b in start..end {
                        let target = if a == b { mean } else { 0.0 };
                        if (coupling[(a, b)] - C64::new(target, 0.0)).norm() > coupling_tol {
                            return Ok(AdiabaticityReport {
                                value: f64::INFINITY,
                                crossing_at: Some(s),
                                argmax,
                            });
                        }
                    }
                }
            }
            start = end;
        }
        for n in 0..dim {
            for m in 0..dim {
                let gap = e[n] - e[m];
                if gap.abs() <= gap_tol {
                    continue;
                }
                let value = coupling[(n, m)].norm() / (gap * gap);
                if value > best {
                    best = value;
                    argmax = Some(s);
                }
            }
        }
    }
    Ok(AdiabaticityReport {
        value: best,
        crossing_at: None,
        argmax,
    })
}
