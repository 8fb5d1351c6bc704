//! Schrödinger propagation in normalized time.
//!
//! The state obeys `i ∂ψ/∂s = T·H(s, T)·ψ` on s ∈ [0, 1]. The default
//! integrator applies `exp(−iΔs·T·H(s_mid))` per step and is unitary by
//! construction; classical RK4 is kept as an independent cross-check.

use std::io::Write;

use nalgebra::DVector;

use crate::csvout;
use crate::error::{Error, Result};
use crate::invariant::{check_time, InvariantSchedule, SCHEDULE_HERMITIAN_TOL};
use crate::linalg::{
    exp_from_spectrum, fidelity_up_to_phase, hermitian_eig_with_tol, ComplexVector,
    DenseOperator, C64, STATE_NORM_TOL,
};
use crate::numeric::integrate_samples;
use crate::synth::HamiltonianSchedule;

pub const DEFAULT_STEPS: usize = 2000;

/// Grid and trajectory points closer than this count as the same s.
const GRID_MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ExponentialMidpoint,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropagatorOptions {
    pub steps: usize,
    pub scheme: Scheme,
    pub record_trajectory: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            scheme: Scheme::ExponentialMidpoint,
            record_trajectory: false,
        }
    }
}

impl PropagatorOptions {
    pub fn recording(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub final_state: ComplexVector,
    /// (s, ψ(s)) at every step boundary, when recorded.
    pub trajectory: Option<Vec<(f64, ComplexVector)>>,
    /// max |‖ψ‖ − 1| over the run.
    pub norm_drift: f64,
}

/// Fidelity and phase of the final state relative to a target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub fidelity: f64,
    /// arg⟨target|ψ(1)⟩ in (−π, π].
    pub global_phase: f64,
}

impl EvolutionResult {
    pub fn against(&self, target: &ComplexVector) -> Result<Outcome> {
        let fidelity = fidelity_up_to_phase(&self.final_state, target)?;
        let global_phase = target.inner(&self.final_state)?.arg();
        Ok(Outcome {
            fidelity,
            global_phase,
        })
    }

    /// Columns: s, re_k/im_k per amplitude, and the overlap with the
    /// invariant's ground state when `overlaps` is given.
    pub fn write_trajectory_csv<W: Write>(&self, out: W, overlaps: Option<&TrackingReport>) -> Result<()> {
        let trajectory = self.trajectory.as_ref().ok_or(Error::TrajectoryMismatch { s: 0.0 })?;
        let dim = self.final_state.dim();
        let mut header = vec!["s".to_string()];
        for k in 0..dim {
            header.push(format!("re_{k}"));
            header.push(format!("im_{k}"));
        }
        let mut selected: Vec<(f64, &ComplexVector)> = Vec::new();
        match overlaps {
            Some(report) => {
                header.push("overlap".into());
                for &s in &report.grid {
                    selected.push((s, lookup(trajectory, s)?));
                }
            }
            None => selected.extend(trajectory.iter().map(|(s, v)| (*s, v))),
        }
        let rows: Vec<Vec<f64>> = selected
            .iter()
            .enumerate()
            .map(|(k, (s, v))| {
                let mut row = vec![*s];
                for z in v.amplitudes() {
                    row.push(z.re);
                    row.push(z.im);
                }
                if let Some(report) = overlaps {
                    row.push(report.overlaps[k]);
                }
                row
            })
            .collect();
        csvout::write_table(out, &header, &rows)
    }
}

fn lookup(trajectory: &[(f64, ComplexVector)], s: f64) -> Result<&ComplexVector> {
    let idx = trajectory.partition_point(|(x, _)| *x < s - GRID_MATCH_TOL);
    match trajectory.get(idx) {
        Some((x, v)) if (x - s).abs() <= GRID_MATCH_TOL => Ok(v),
        _ => Err(Error::TrajectoryMismatch { s }),
    }
}

/// Integrates ψ from s = 0 to s = 1.
pub fn propagate(
    hamiltonian: &HamiltonianSchedule,
    initial: &ComplexVector,
    total_time: f64,
    opts: PropagatorOptions,
) -> Result<EvolutionResult> {
    check_time(total_time)?;
    if opts.steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: "at least one step is required".into(),
        });
    }
    if initial.dim() != hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            left: initial.dim(),
            right: hamiltonian.dim(),
        });
    }
    initial.check_normalized(STATE_NORM_TOL)?;

    let steps = opts.steps;
    let ds = 1.0 / steps as f64;
    let step_s = |k: usize| if k == steps { 1.0 } else { k as f64 * ds };
    let mut psi = initial.as_dvector().clone();
    let mut trajectory = opts
        .record_trajectory
        .then(|| vec![(0.0, initial.clone())]);
    let mut norm_drift = 0.0f64;

    let checked = |s: f64| -> Result<DenseOperator> {
        let h = hamiltonian.value(s, total_time);
        let asymmetry = h.hermiticity_defect();
        if asymmetry > SCHEDULE_HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(h)
    };

    match opts.scheme {
        Scheme::ExponentialMidpoint => {
            let fixed = if hamiltonian.metadata().time_independent {
                let h = checked(0.5)?;
                let spectrum = hermitian_eig_with_tol(&h, SCHEDULE_HERMITIAN_TOL)?;
                Some(exp_from_spectrum(&spectrum, ds * total_time))
            } else {
                None
            };
            for k in 0..steps {
                let step = match &fixed {
                    Some(u) => u.clone(),
                    None => {
                        let mid = (k as f64 + 0.5) * ds;
                        let spectrum = hermitian_eig_with_tol(&checked(mid)?, SCHEDULE_HERMITIAN_TOL)?;
                        exp_from_spectrum(&spectrum, ds * total_time)
                    }
                };
                psi = step.matrix() * psi;
                norm_drift = norm_drift.max((psi.norm() - 1.0).abs());
                if let Some(t) = trajectory.as_mut() {
                    t.push((step_s(k + 1), ComplexVector::from_dvector(psi.clone())));
                }
            }
        }
        Scheme::Rk4 => {
            let minus_i_t = C64::new(0.0, -total_time);
            let rhs = |h: &DenseOperator, v: &DVector<C64>| h.matrix() * v * minus_i_t;
            for k in 0..steps {
                let s = k as f64 * ds;
                let h0 = checked(s)?;
                let hm = checked(s + 0.5 * ds)?;
                let h1 = checked(step_s(k + 1))?;
                let half = C64::new(0.5 * ds, 0.0);
                let full = C64::new(ds, 0.0);
                let k1 = rhs(&h0, &psi);
                let k2 = rhs(&hm, &(&psi + &k1 * half));
                let k3 = rhs(&hm, &(&psi + &k2 * half));
                let k4 = rhs(&h1, &(&psi + &k3 * full));
                psi += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                    * C64::new(ds / 6.0, 0.0);
                norm_drift = norm_drift.max((psi.norm() - 1.0).abs());
                if let Some(t) = trajectory.as_mut() {
                    t.push((step_s(k + 1), ComplexVector::from_dvector(psi.clone())));
                }
            }
        }
    }

    Ok(EvolutionResult {
        final_state: ComplexVector::from_dvector(psi),
        trajectory,
        norm_drift,
    })
}

/// |⟨φ0(s)|ψ(s)⟩|² on a grid.
#[derive(Clone, Debug)]
pub struct TrackingReport {
    pub grid: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub min: f64,
}

/// Overlap of the recorded trajectory with the ground state of I(s).
pub fn track_invariant(
    invariant: &InvariantSchedule,
    result: &EvolutionResult,
    grid: &[f64],
) -> Result<TrackingReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let trajectory = result
        .trajectory
        .as_ref()
        .ok_or(Error::TrajectoryMismatch { s: grid[0] })?;
    let mut overlaps = Vec::with_capacity(grid.len());
    for &s in grid {
        let psi = lookup(trajectory, s)?;
        let phi = invariant.ground_state(s)?;
        let norm = psi.norm();
        overlaps.push((phi.inner(psi)?.norm_sqr() / (norm * norm)).min(1.0));
    }
    let min = overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TrackingReport {
        grid: grid.to_vec(),
        overlaps,
        min,
    })
}

/// Predicted arg⟨target|ψ(1)⟩ for ψ(0) = `initial` riding the ground
/// level of I(s).
///
/// The dynamical part −∫T⟨φ0|H|φ0⟩ds is integrated on the grid. The
/// geometric part is the phase picked up by parallel transport of φ0,
/// accumulated from the arguments of neighbouring overlaps; the discrete
/// sum is second order in the spacing, so it is evaluated on the grid and
/// on its midpoint refinement and Richardson-combined.
pub fn lewis_riesenfeld_phase(
    invariant: &InvariantSchedule,
    hamiltonian: &HamiltonianSchedule,
    total_time: f64,
    grid: &[f64],
    initial: &ComplexVector,
    target: &ComplexVector,
) -> Result<f64> {
    check_time(total_time)?;
    if grid.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    let ground: Vec<ComplexVector> = grid
        .iter()
        .map(|&s| invariant.ground_state(s))
        .collect::<Result<_>>()?;

    let dynamical: Vec<f64> = grid
        .iter()
        .zip(&ground)
        .map(|(&s, phi)| {
            hamiltonian
                .value(s, total_time)
                .expectation(phi)
                .map(|e| total_time * e.re)
        })
        .collect::<Result<_>>()?;
    let dynamical = integrate_samples(grid, &dynamical);

    let mut refined = Vec::with_capacity(2 * ground.len() - 1);
    for (k, phi) in ground.iter().enumerate() {
        refined.push(phi.clone());
        if k + 1 < grid.len() {
            refined.push(invariant.ground_state(0.5 * (grid[k] + grid[k + 1]))?);
        }
    }
    let coarse = transport_phase(&ground)?;
    let fine = transport_phase(&refined)?;
    let transport = (4.0 * fine - coarse) / 3.0;

    let c0 = ground[0].inner(initial)?;
    let end = target.inner(&ground[ground.len() - 1])?;
    Ok(c0.arg() - dynamical + transport + end.arg())
}

/// θ with χ_N = e^{iθ}·φ_N the parallel transport of φ_0 along the chain.
fn transport_phase(chain: &[ComplexVector]) -> Result<f64> {
    let mut theta = 0.0;
    for pair in chain.windows(2) {
        theta -= pair[0].inner(&pair[1])?.arg();
    }
    Ok(theta)
}
