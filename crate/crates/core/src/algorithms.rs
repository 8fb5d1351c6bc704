//! Problem builders: Deutsch-Jozsa in three flavours and Grover search.
//!
//! Each builder returns a [`ProblemInstance`] bundling the invariant
//! schedule, the driving Hamiltonian, the initial state (ground state of
//! I(0)) and the target state the evolution should reach at s = 1.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::evolve::{propagate, PropagatorOptions};
use crate::invariant::{check_time, conjugate_schedule, projector_invariant, InvariantSchedule};
use crate::linalg::{
    exp_generator, fidelity_up_to_phase, qubit, ComplexVector, DenseOperator, C64, I,
};
use crate::pauli::{decompose, PauliBasis, PauliString};
use crate::synth::{
    commuting_hamiltonian, dj_polynomial_hamiltonian, AlphaProfile, CoefficientSolver,
    HamiltonianSchedule,
};

/// The initial state must be the ground state of I(0) to this fidelity.
const GROUND_STATE_TOL: f64 = 1e-10;
/// Outcome probabilities strictly inside (lo, 1 − lo) break the promise.
const PROMISE_MARGIN: f64 = 0.01;
/// Grover runs below this fidelity indicate a broken construction.
const GROVER_MIN_FIDELITY: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Promise {
    Constant,
    Balanced,
}

impl fmt::Display for Promise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Promise::Constant => "constant",
            Promise::Balanced => "balanced",
        })
    }
}

/// Truth table of f: {0,1}ⁿ → {0,1}, `table[i] = f(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanFunction {
    bits: usize,
    table: Vec<bool>,
}

impl BooleanFunction {
    pub fn new(table: Vec<bool>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "table",
                reason: format!("length must be a power of two ≥ 2, got {len}"),
            });
        }
        Ok(Self {
            bits: len.trailing_zeros() as usize,
            table,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn value(&self, i: usize) -> bool {
        self.table[i]
    }

    pub fn sign(&self, i: usize) -> f64 {
        if self.table[i] {
            -1.0
        } else {
            1.0
        }
    }

    pub fn promise(&self) -> Result<Promise> {
        let ones = self.table.iter().filter(|&&b| b).count();
        if ones == 0 || ones == self.len() {
            Ok(Promise::Constant)
        } else if 2 * ones == self.len() {
            Ok(Promise::Balanced)
        } else {
            Err(Error::PromiseViolated(format!(
                "{self} has {ones} ones out of {}",
                self.len()
            )))
        }
    }

    /// ξ± = ½[(−1)^{f(0)} ± (−1)^{f(1)}] of a single-bit function.
    pub fn xi(&self) -> Result<(f64, f64)> {
        if self.bits != 1 {
            return Err(Error::InvalidParameter {
                name: "table",
                reason: "ξ± are defined for single-bit functions".into(),
            });
        }
        let (a, b) = (self.sign(0), self.sign(1));
        Ok((0.5 * (a + b), 0.5 * (a - b)))
    }

    /// U = diag((−1)^{f(i)}).
    pub fn oracle(&self) -> DenseOperator {
        let diag: Vec<C64> = (0..self.len()).map(|i| C64::new(self.sign(i), 0.0)).collect();
        DenseOperator::diagonal(&diag)
    }

    /// Every constant and balanced function on `bits` inputs.
    pub fn promise_functions(bits: usize) -> Vec<Self> {
        let len = 1usize << bits;
        let mut out = vec![
            Self::new(vec![false; len]).unwrap(),
            Self::new(vec![true; len]).unwrap(),
        ];
        // Subsets of size len/2, enumerated as bitmasks (fine for bits ≤ 4).
        for mask in 0u64..(1u64 << len) {
            if mask.count_ones() as usize == len / 2 {
                out.push(Self::new((0..len).map(|i| mask >> i & 1 == 1).collect()).unwrap());
            }
        }
        out
    }
}

impl FromStr for BooleanFunction {
    type Err = Error;

    /// Bitstring such as "0110", character i holding f(i).
    fn from_str(s: &str) -> Result<Self> {
        let table = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter {
                    name: "table",
                    reason: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(table)
    }
}

impl fmt::Display for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.table {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Where the polynomial variant's Hamiltonian comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HamiltonianSource {
    /// The printed closed form; exact only when n = r.
    ClosedForm,
    /// Pointwise coefficient solve over {X, Y, Z}.
    #[default]
    Solver,
}

/// ν, β, γ of the rotation exp[+i(ν s^m σx + β s^n σy + γ s^r σz)].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolynomialWeights {
    /// ν = 0, β = γ = πξ+/(2√2).
    Solution,
    Custom { nu: f64, beta: f64, gamma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialVariant {
    pub m: u32,
    pub n: u32,
    pub r: u32,
    pub weights: PolynomialWeights,
    pub source: HamiltonianSource,
}

impl PolynomialVariant {
    pub fn new(n: u32, r: u32) -> Self {
        Self {
            m: 1,
            n,
            r,
            weights: PolynomialWeights::Solution,
            source: if n == r {
                HamiltonianSource::ClosedForm
            } else {
                HamiltonianSource::Solver
            },
        }
    }

    pub fn with_source(mut self, source: HamiltonianSource) -> Self {
        self.source = source;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DjVariant {
    /// α(s) = πs/2, H = (π/2T)U.
    ConstantH,
    /// α(s) = (π/2)sin(πs/2), H = (π²/4T)cos(πs/2)U.
    Oscillating,
    /// Single-qubit non-commuting interpolation.
    Polynomial(PolynomialVariant),
}

impl fmt::Display for DjVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DjVariant::ConstantH => f.write_str("constant_H"),
            DjVariant::Oscillating => f.write_str("oscillating"),
            DjVariant::Polynomial(p) => write!(f, "polynomial({},{})", p.n, p.r),
        }
    }
}

/// How the measured |+…+⟩ probability maps to a label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelConvention {
    /// |+…+⟩ means constant.
    Standard,
    /// |+⟩ means balanced (single-qubit polynomial variant).
    Reversed,
}

impl LabelConvention {
    /// Maps a final state to the one the standard convention would produce.
    pub fn to_standard(self, state: &ComplexVector) -> Result<ComplexVector> {
        match self {
            LabelConvention::Standard => Ok(state.clone()),
            LabelConvention::Reversed => {
                let bits = state.dim().trailing_zeros() as usize;
                let mut flip = DenseOperator::identity(1);
                for _ in 0..bits {
                    flip = flip.kron(&qubit::sigma_z());
                }
                flip.apply(state)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMetadata {
    pub problem: &'static str,
    pub variant: String,
    pub label_convention: LabelConvention,
    /// Gap parameter of the invariant.
    pub omega: f64,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub invariant: InvariantSchedule,
    pub hamiltonian: HamiltonianSchedule,
    pub initial_state: ComplexVector,
    pub target_state: ComplexVector,
    pub total_time: f64,
    pub metadata: InstanceMetadata,
}

impl ProblemInstance {
    fn checked(self) -> Result<Self> {
        let ground = self.invariant.ground_state(0.0)?;
        let fidelity = fidelity_up_to_phase(&ground, &self.initial_state)?;
        if fidelity < 1.0 - GROUND_STATE_TOL {
            return Err(Error::ConstructionFailed { fidelity });
        }
        Ok(self)
    }

    /// Non-identity Pauli terms of H at mid-schedule.
    pub fn pauli_term_count(&self) -> Result<usize> {
        Ok(self
            .hamiltonian
            .pauli_coefficients(0.5, self.total_time)?
            .non_identity_len())
    }

    pub fn with_total_time(mut self, total_time: f64) -> Result<Self> {
        check_time(total_time)?;
        self.total_time = total_time;
        Ok(self)
    }
}

/// I(s) = Ũ I0 Ũ† for Ũ = exp(−iα(s)U), with the exact derivative
/// −iα′(s)[U, I(s)].
fn rotated_invariant(u: &DenseOperator, alpha: &AlphaProfile, i0: DenseOperator) -> Result<InvariantSchedule> {
    let (gen, a) = (u.clone(), alpha.clone());
    let schedule = conjugate_schedule(move |s| exp_generator(&gen, a.alpha(s)).unwrap(), i0)?;
    let value = schedule.clone();
    let (u, a) = (u.clone(), alpha.clone());
    Ok(schedule.with_derivative(move |s| {
        let i = value.value(s);
        (&(&u * &i) - &(&i * &u)).scale(-I * a.derivative(s))
    }))
}

/// Polynomial-variant invariant, conjugating ω|−⟩⟨−| by
/// exp[+i(ν s^m σx + β s^n σy + γ s^r σz)].
pub fn polynomial_invariant(variant: &PolynomialVariant, xi_plus: f64, omega: f64) -> Result<InvariantSchedule> {
    let (nu, beta, gamma) = match variant.weights {
        PolynomialWeights::Solution => (0.0, PI * xi_plus / (2.0 * SQRT_2), PI * xi_plus / (2.0 * SQRT_2)),
        PolynomialWeights::Custom { nu, beta, gamma } => (nu, beta, gamma),
    };
    let (m, n, r) = (variant.m as i32, variant.n as i32, variant.r as i32);
    let (x, y, z) = (qubit::sigma_x(), qubit::sigma_y(), qubit::sigma_z());
    let path = move |s: f64| {
        let v = &(&x.scale_real(nu * s.powi(m)) + &y.scale_real(beta * s.powi(n)))
            + &z.scale_real(gamma * s.powi(r));
        exp_generator(&v, -1.0).unwrap()
    };
    conjugate_schedule(path, projector_invariant(&qubit::plus(), omega)?)
}

/// Printed closed form of the solution-choice polynomial invariant at ω = 1.
pub fn polynomial_invariant_closed_form(n: u32, r: u32, xi_plus: f64, s: f64) -> DenseOperator {
    let (sn, sr) = (s.powi(n as i32), s.powi(r as i32));
    let rho = (sn * sn + sr * sr).sqrt();
    let phi = PI * xi_plus * ((sn * sn + sr * sr) / 2.0).sqrt();
    let (ys, zs) = if rho > 0.0 { (sr / rho, sn / rho) } else { (0.0, 0.0) };
    let sum = &(&DenseOperator::identity(2) - &qubit::sigma_x().scale_real(phi.cos()))
        + &(&qubit::sigma_y().scale_real(ys * phi.sin()) - &qubit::sigma_z().scale_real(zs * phi.sin()));
    sum.scale_real(0.5)
}

/// 1 − (1/N)Σ exp[−iπs ξ−^{(ij)}]|i⟩⟨j| for the linear profile at ω = 1.
pub fn dj_invariant_closed_form(f: &BooleanFunction, s: f64) -> DenseOperator {
    let dim = f.len();
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i in 0..dim {
        for j in 0..dim {
            let xi = 0.5 * (f.sign(i) - f.sign(j));
            let delta = if i == j { 1.0 } else { 0.0 };
            m[(i, j)] = C64::new(delta, 0.0) - C64::from_polar(1.0, -PI * s * xi) / dim as f64;
        }
    }
    DenseOperator::new(m)
}

/// Assembles a Deutsch-Jozsa instance.
pub fn dj_build(f: &BooleanFunction, variant: DjVariant, total_time: f64, omega: f64) -> Result<ProblemInstance> {
    check_time(total_time)?;
    f.promise()?;
    let initial = qubit::plus_n(f.bits());
    let i0 = projector_invariant(&initial, omega)?;
    let u = f.oracle();

    let (invariant, hamiltonian, target, convention) = match variant {
        DjVariant::ConstantH | DjVariant::Oscillating => {
            let alpha = if variant == DjVariant::ConstantH {
                AlphaProfile::linear()
            } else {
                AlphaProfile::sinusoidal()
            };
            let invariant = rotated_invariant(&u, &alpha, i0)?;
            let hamiltonian = commuting_hamiltonian(&u, &alpha)?;
            let target = u.apply(&initial)?;
            (invariant, hamiltonian, target, LabelConvention::Standard)
        }
        DjVariant::Polynomial(poly) => {
            if f.bits() != 1 {
                return Err(Error::InvalidParameter {
                    name: "variant",
                    reason: format!("polynomial variant needs a single-bit function, got {} bits", f.bits()),
                });
            }
            if poly.n == 0 || poly.r == 0 || poly.m == 0 {
                return Err(Error::InvalidParameter {
                    name: "variant",
                    reason: "powers m, n, r must be at least 1".into(),
                });
            }
            let (xi_plus, _) = f.xi()?;
            let invariant = polynomial_invariant(&poly, xi_plus, omega)?;
            let hamiltonian = match (poly.source, poly.weights) {
                (HamiltonianSource::ClosedForm, PolynomialWeights::Solution) => {
                    dj_polynomial_hamiltonian(poly.n, poly.r, xi_plus)?
                }
                (HamiltonianSource::ClosedForm, PolynomialWeights::Custom { .. }) => {
                    return Err(Error::InvalidParameter {
                        name: "variant",
                        reason: "closed-form Hamiltonian exists only for the solution weights".into(),
                    })
                }
                (HamiltonianSource::Solver, _) => {
                    let basis = PauliBasis::closure(1, &["X", "Y", "Z"].map(|w| w.parse::<PauliString>().unwrap()))?;
                    CoefficientSolver::new(invariant.clone(), basis)?.schedule()
                }
            };
            let target = invariant.ground_state(1.0)?;
            (invariant, hamiltonian, target, LabelConvention::Reversed)
        }
    };

    ProblemInstance {
        invariant,
        hamiltonian,
        initial_state: initial,
        target_state: target,
        total_time,
        metadata: InstanceMetadata {
            problem: "dj",
            variant: variant.to_string(),
            label_convention: convention,
            omega,
        },
    }
    .checked()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub label: Promise,
    /// |⟨+…+|ψ⟩|².
    pub certainty: f64,
}

/// Measures every qubit in the ± basis and reads off the promise class.
pub fn dj_classify(final_state: &ComplexVector, convention: LabelConvention) -> Result<Classification> {
    let dim = final_state.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::NotPowerOfTwo(dim));
    }
    let all_plus = qubit::plus_n(dim.trailing_zeros() as usize);
    let certainty = fidelity_up_to_phase(final_state, &all_plus)?;
    if certainty > PROMISE_MARGIN && certainty < 1.0 - PROMISE_MARGIN {
        return Err(Error::AmbiguousOutcome { certainty });
    }
    let plus_means_constant = convention == LabelConvention::Standard;
    let label = if (certainty > 0.5) == plus_means_constant {
        Promise::Constant
    } else {
        Promise::Balanced
    };
    Ok(Classification { label, certainty })
}

/// Oracle weights and initial overlaps of the search problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroverOracleSpec {
    pub items: usize,
    pub marked: usize,
    pub theta: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// ⟨w|φ0(0)⟩.
    pub overlap_alpha: f64,
    /// ⟨y|φ0(0)⟩.
    pub overlap_beta: f64,
}

impl GroverOracleSpec {
    /// θ = ε = 0, δ = 1 with the uniform-superposition overlaps.
    pub fn new(items: usize, marked: usize) -> Self {
        let n = items as f64;
        Self {
            items,
            marked,
            theta: 0.0,
            delta: 1.0,
            epsilon: 0.0,
            overlap_alpha: 1.0 / n.sqrt(),
            overlap_beta: ((n - 1.0) / n).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.items < 2 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("search space needs at least 2 items, got {}", self.items),
            });
        }
        if self.marked >= self.items {
            return Err(Error::InvalidParameter {
                name: "w",
                reason: format!("marked index {} outside 0..{}", self.marked, self.items),
            });
        }
        let norm = self.overlap_alpha.powi(2) + self.overlap_beta.powi(2);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "overlaps",
                reason: format!("α² + β² = {norm}, expected 1"),
            });
        }
        if (self.theta - self.epsilon).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("θ = {} must equal ε = {}", self.theta, self.epsilon),
            });
        }
        if self.r_vector()[2].hypot(self.r_vector()[1]) == 0.0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "δ + εα = 0 leaves no oracle term".into(),
            });
        }
        Ok(())
    }

    /// (r0, r_x, r_z) with the oracle acting as r0·1 + r⃗·σ⃗ on {|w⟩, |y⟩}.
    pub fn r_vector(&self) -> [f64; 3] {
        let (a, b) = (self.overlap_alpha, self.overlap_beta);
        let (t, d, e) = (self.theta, self.delta, self.epsilon);
        [
            (t + e + 2.0 * a * d) / 2.0,
            b * (d + e * a),
            (t - e + 2.0 * a * (d + e * a)) / 2.0,
        ]
    }

    /// U = r⃗·σ⃗/|r⃗| in the ordered basis (|w⟩, |y⟩).
    pub fn two_level_oracle(&self) -> DenseOperator {
        let [_, rx, rz] = self.r_vector();
        let norm = rx.hypot(rz);
        (&qubit::sigma_x().scale_real(rx / norm) + &qubit::sigma_z().scale_real(rz / norm)).clone()
    }
}

/// Isometry [|w⟩, |y⟩] from the two-level subspace into ℂᴺ.
pub fn grover_isometry(spec: &GroverOracleSpec) -> Result<DMatrix<C64>> {
    spec.validate()?;
    let n = spec.items;
    let phi0 = ComplexVector::uniform(n);
    let w = ComplexVector::basis(n, spec.marked);
    let a = w.inner(&phi0)?;
    let rest = phi0.as_dvector() - w.as_dvector() * a;
    let y = rest.normalize();
    let mut v = DMatrix::from_element(n, 2, C64::new(0.0, 0.0));
    v.set_column(0, w.as_dvector());
    v.set_column(1, &y);
    Ok(v)
}

/// Assembles a search instance driven by sign·(π/2T)·r⃗·σ⃗/|r⃗|.
pub fn grover_build(spec: &GroverOracleSpec, total_time: f64, sign: f64, omega: f64) -> Result<ProblemInstance> {
    check_time(total_time)?;
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidParameter {
            name: "sign",
            reason: format!("must be +1 or −1, got {sign}"),
        });
    }
    let v = grover_isometry(spec)?;
    let u2 = spec.two_level_oracle().scale_real(sign);
    let alpha = AlphaProfile::linear();
    let hamiltonian = commuting_hamiltonian(&u2, &alpha)?.embed(&v)?;

    let u_full = DenseOperator::new(&v * u2.matrix() * v.adjoint());
    let initial = ComplexVector::uniform(spec.items);
    let invariant = rotated_invariant(&u_full, &alpha, projector_invariant(&initial, omega)?)?;

    ProblemInstance {
        invariant,
        hamiltonian,
        initial_state: initial,
        target_state: ComplexVector::basis(spec.items, spec.marked),
        total_time,
        metadata: InstanceMetadata {
            problem: "grover",
            variant: if sign > 0.0 { "grover(+)" } else { "grover(-)" }.into(),
            label_convention: LabelConvention::Standard,
            omega,
        },
    }
    .checked()
}

/// 1 − cos²(πs/2)|φ0⟩⟨φ0| − sin²(πs/2)|w⟩⟨w| + sign·(i/2)sin(πs)(|w⟩⟨φ0| − |φ0⟩⟨w|).
pub fn grover_invariant_closed_form(items: usize, marked: usize, sign: f64, s: f64) -> DenseOperator {
    let phi0 = ComplexVector::uniform(items);
    let w = ComplexVector::basis(items, marked);
    let (c, sn) = ((PI * s / 2.0).cos(), (PI * s / 2.0).sin());
    let cross = DenseOperator::new(
        w.as_dvector() * phi0.as_dvector().adjoint() - phi0.as_dvector() * w.as_dvector().adjoint(),
    );
    let out = &(&DenseOperator::identity(items) - &phi0.projector().scale_real(c * c))
        - &w.projector().scale_real(sn * sn);
    &out + &cross.scale(I * (sign * 0.5 * (PI * s).sin()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOutcome {
    pub found: usize,
    pub fidelity: f64,
}

/// Propagates a search instance and reads out the most likely index.
pub fn grover_run(instance: &ProblemInstance, opts: PropagatorOptions) -> Result<SearchOutcome> {
    let result = propagate(&instance.hamiltonian, &instance.initial_state, instance.total_time, opts)?;
    let fidelity = fidelity_up_to_phase(&result.final_state, &instance.target_state)?;
    if fidelity < GROVER_MIN_FIDELITY {
        return Err(Error::ConstructionFailed { fidelity });
    }
    Ok(SearchOutcome {
        found: result.final_state.argmax_probability(),
        fidelity,
    })
}

/// Non-identity Pauli terms of the oracle U of a DJ function.
pub fn dj_oracle_terms(f: &BooleanFunction) -> Result<usize> {
    Ok(decompose(&f.oracle(), f.bits())?.non_identity_len())
}
