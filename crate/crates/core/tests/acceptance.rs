//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p qcdi-core --test acceptance`.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qcdi::algorithms::{
    dj_build, dj_classify, grover_build, grover_run, BooleanFunction, DjVariant, GroverOracleSpec,
    HamiltonianSource, LabelConvention, PolynomialVariant, ProblemInstance, Promise,
};
use qcdi::evolve::{lewis_riesenfeld_phase, propagate, track_invariant, PropagatorOptions};
use qcdi::invariant::{invariant_residual, spectrum_flow};
use qcdi::linalg::{fidelity_up_to_phase, qubit};
use qcdi::numeric::{angle_distance, uniform_grid, unit_grid};
use qcdi::pauli::{PauliBasis, PauliString};
use qcdi::synth::{
    commuting_hamiltonian, effective_frequency, equal_power_coefficient, polynomial_coefficients,
    solve_coefficients, AlphaProfile,
};
use qcdi::Result;

const GRID_POINTS: usize = 201;
const STEPS: usize = 2000;

const CERTAINTY_TOL: f64 = 1e-8;
const RUN_TIME_LIMIT: Duration = Duration::from_secs(1);
const FIDELITY_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-6;
const DRIFT_TOL: f64 = 1e-8;
const GAP_TOL: f64 = 1e-8;
const FREQUENCY_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-6;
const CLOSED_FORM_POINTS: usize = 50;
const AGREEMENT_TOL: f64 = 1e-8;
const PHASE_TOL: f64 = 1e-6;
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(60);
const NEGATIVE_CONTROL_BOUND: f64 = 0.99;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn opts() -> PropagatorOptions {
    PropagatorOptions::default().with_steps(STEPS)
}

fn single_bit_functions() -> Vec<BooleanFunction> {
    ["00", "11", "01", "10"].iter().map(|s| s.parse().unwrap()).collect()
}

fn polynomial(n: u32, r: u32) -> DjVariant {
    DjVariant::Polynomial(PolynomialVariant::new(n, r))
}

/// Every instance the library ships: DJ variants for n ≤ 3 and Grover N ≤ 16.
fn built_in_instances(total_time: f64) -> Result<Vec<ProblemInstance>> {
    let mut out = Vec::new();
    for bits in 1..=3 {
        for f in BooleanFunction::promise_functions(bits) {
            out.push(dj_build(&f, DjVariant::ConstantH, total_time, 1.0)?);
            out.push(dj_build(&f, DjVariant::Oscillating, total_time, 1.0)?);
        }
    }
    for f in single_bit_functions() {
        for (n, r) in [(1, 1), (2, 2), (1, 2), (2, 3)] {
            out.push(dj_build(&f, polynomial(n, r), total_time, 1.0)?);
        }
    }
    for items in [2, 4, 8, 16] {
        for marked in 0..items {
            for sign in [1.0, -1.0] {
                out.push(grover_build(&GroverOracleSpec::new(items, marked), total_time, sign, 1.0)?);
            }
        }
    }
    Ok(out)
}

fn label(inst: &ProblemInstance) -> String {
    format!("{} {}", inst.metadata.problem, inst.metadata.variant)
}

fn criterion_1() -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut correct = true;
    for f in single_bit_functions() {
        let start = Instant::now();
        let inst = dj_build(&f, DjVariant::ConstantH, 1.0, 1.0)?;
        let run = propagate(&inst.hamiltonian, &inst.initial_state, 1.0, opts())?;
        let class = dj_classify(&run.final_state, LabelConvention::Standard)?;
        slowest = slowest.max(start.elapsed());
        let expected = f.promise()?;
        let outcome = if expected == Promise::Constant { qubit::plus() } else { qubit::minus() };
        let certainty = fidelity_up_to_phase(&run.final_state, &outcome)?;
        worst = worst.max((1.0 - certainty).abs());
        correct &= class.label == expected;
    }
    verdict(
        correct && worst <= CERTAINTY_TOL && slowest < RUN_TIME_LIMIT,
        format!("labels correct: {correct}, max |1 − certainty| = {worst:.3e}, slowest run {slowest:.2?}"),
    )
}

fn criterion_2() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for t in [0.1, 1.0, 100.0] {
        let grover = grover_build(&GroverOracleSpec::new(4, 2), t, 1.0, 1.0)?;
        let mut instances = vec![grover];
        for f in single_bit_functions() {
            instances.push(dj_build(&f, DjVariant::ConstantH, t, 1.0)?);
        }
        for inst in instances {
            let run = propagate(&inst.hamiltonian, &inst.initial_state, t, opts())?;
            let fidelity = run.against(&inst.target_state)?.fidelity;
            worst = worst.max(1.0 - fidelity);
        }
    }
    verdict(worst <= FIDELITY_TOL, format!("max 1 − fidelity over T ∈ {{0.1, 1, 100}} = {worst:.3e}"))
}

fn criterion_3() -> Result<Verdict> {
    let grid = unit_grid(GRID_POINTS);
    let mut worst = (0.0f64, String::new());
    let instances = built_in_instances(1.0)?;
    for inst in &instances {
        let r = invariant_residual(&inst.invariant, &inst.hamiltonian, inst.total_time, &grid)?;
        if r.max >= worst.0 {
            worst = (r.max, label(inst));
        }
    }
    verdict(
        worst.0 <= RESIDUAL_TOL,
        format!("{} instances, max residual {:.3e} ({})", instances.len(), worst.0, worst.1),
    )
}

fn criterion_4() -> Result<Verdict> {
    let grid = unit_grid(GRID_POINTS);
    let mut drift = 0.0f64;
    let mut gap_error = 0.0f64;
    let mut count = 0;
    for omega in [1.0, 2.5] {
        let mut instances = if omega == 1.0 { built_in_instances(1.0)? } else { Vec::new() };
        if omega != 1.0 {
            for f in single_bit_functions() {
                instances.push(dj_build(&f, DjVariant::Oscillating, 1.0, omega)?);
                instances.push(dj_build(&f, polynomial(1, 2), 1.0, omega)?);
            }
            instances.push(grover_build(&GroverOracleSpec::new(8, 5), 1.0, 1.0, omega)?);
        }
        for inst in &instances {
            let flow = spectrum_flow(&inst.invariant, &grid)?;
            drift = drift.max(flow.max_eigenvalue_drift);
            gap_error = gap_error.max((flow.min_gap - omega).abs());
            count += 1;
        }
    }
    verdict(
        drift <= DRIFT_TOL && gap_error <= GAP_TOL,
        format!("{count} schedules, max drift {drift:.3e}, max |min gap − ω| {gap_error:.3e}"),
    )
}

fn criterion_5() -> Result<Verdict> {
    let mut worst_osc = 0.0f64;
    let mut worst_poly = 0.0f64;
    let constant: BooleanFunction = "00".parse().unwrap();
    for t in [0.1, 1.0, 7.0] {
        for f in single_bit_functions() {
            let inst = dj_build(&f, DjVariant::Oscillating, t, 1.0)?;
            let w = effective_frequency(&inst.hamiltonian, t)?;
            worst_osc = worst_osc.max((w - PI / (2.0 * t)).abs());
        }
        for n in 1..=3 {
            let inst = dj_build(&constant, polynomial(n, n), t, 1.0)?;
            let w = effective_frequency(&inst.hamiltonian, t)?;
            worst_poly = worst_poly.max((w - PI / (2.0 * SQRT_2 * t)).abs());
        }
    }
    verdict(
        worst_osc <= FREQUENCY_TOL && worst_poly <= FREQUENCY_TOL,
        format!("oscillating max error {worst_osc:.3e}, polynomial n=r max error {worst_poly:.3e}"),
    )
}

fn criterion_6() -> Result<Verdict> {
    let grid = uniform_grid(0.05, 1.0, CLOSED_FORM_POINTS);
    let basis = PauliBasis::closure(1, &["X", "Y", "Z"].map(|w| w.parse::<PauliString>().unwrap()))?;
    let strings: Vec<PauliString> = ["X", "Y", "Z"].iter().map(|w| w.parse().unwrap()).collect();
    let f: BooleanFunction = "00".parse().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (n, r) in [(1u32, 1u32), (1, 2), (2, 3)] {
        let solver_variant = DjVariant::Polynomial(PolynomialVariant::new(n, r).with_source(HamiltonianSource::Solver));
        let inst = dj_build(&f, solver_variant, 1.0, 1.0)?;
        let synthesis = solve_coefficients(&inst.invariant, &basis, 1.0, &grid)?;
        let mut gap = 0.0f64;
        for (k, &s) in grid.iter().enumerate() {
            let closed = polynomial_coefficients(n, r, 1.0, s);
            for (p, c) in strings.iter().zip(closed) {
                gap = gap.max((synthesis.coefficient(k, p).unwrap() - c).abs());
            }
        }
        let closed_variant = DjVariant::Polynomial(PolynomialVariant::new(n, r).with_source(HamiltonianSource::ClosedForm));
        let closed = dj_build(&f, closed_variant, 1.0, 1.0)?;
        let closed_residual = invariant_residual(&closed.invariant, &closed.hamiltonian, 1.0, &grid)?.max;
        pass &= gap <= CLOSED_FORM_TOL;
        parts.push(format!("({n},{r}) max gap {gap:.3e} [closed-form residual {closed_residual:.2e}]"));
    }
    // n = r reduction of the closed form, coefficient by coefficient.
    let mut reduction = 0.0f64;
    for n in 1..=6 {
        for xi in [-1.0, 0.0, 1.0] {
            for s in unit_grid(GRID_POINTS) {
                let [hx, hy, hz] = polynomial_coefficients(n, n, xi, s);
                let c = equal_power_coefficient(n, xi, s);
                reduction = reduction.max(hx.abs()).max((hy - c).abs()).max((hz - c).abs());
            }
        }
    }
    pass &= reduction <= 1e-14;
    parts.push(format!("n=r reduction error {reduction:.1e}"));
    verdict(pass, parts.join("; "))
}

fn criterion_7() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for f in single_bit_functions() {
        let mut finals = Vec::new();
        for variant in [DjVariant::ConstantH, DjVariant::Oscillating, polynomial(1, 1)] {
            let inst = dj_build(&f, variant, 1.0, 1.0)?;
            let run = propagate(&inst.hamiltonian, &inst.initial_state, 1.0, opts())?;
            finals.push(inst.metadata.label_convention.to_standard(&run.final_state)?);
        }
        for i in 0..finals.len() {
            for j in i + 1..finals.len() {
                worst = worst.max(1.0 - fidelity_up_to_phase(&finals[i], &finals[j])?);
            }
        }
    }
    verdict(worst <= AGREEMENT_TOL, format!("max pairwise 1 − fidelity {worst:.3e}"))
}

fn criterion_8() -> Result<Verdict> {
    let grid = unit_grid(GRID_POINTS);
    let mut instances = Vec::new();
    for f in single_bit_functions() {
        instances.push(dj_build(&f, DjVariant::ConstantH, 1.0, 1.0)?);
    }
    for sign in [1.0, -1.0] {
        instances.push(grover_build(&GroverOracleSpec::new(4, 2), 1.0, sign, 1.0)?);
    }
    let mut worst = 0.0f64;
    for inst in &instances {
        let predicted = lewis_riesenfeld_phase(
            &inst.invariant,
            &inst.hamiltonian,
            inst.total_time,
            &grid,
            &inst.initial_state,
            &inst.target_state,
        )?;
        let run = propagate(&inst.hamiltonian, &inst.initial_state, inst.total_time, opts())?;
        let propagated = run.against(&inst.target_state)?.global_phase;
        worst = worst.max(angle_distance(predicted, propagated));
    }
    let balanced = &instances[2];
    let phase = lewis_riesenfeld_phase(
        &balanced.invariant,
        &balanced.hamiltonian,
        1.0,
        &grid,
        &balanced.initial_state,
        &balanced.target_state,
    )?;
    let balanced_error = angle_distance(phase, -PI / 2.0);
    verdict(
        worst <= PHASE_TOL && balanced_error <= PHASE_TOL,
        format!("max |predicted − propagated| {worst:.3e} rad, balanced phase {phase:.9} (error {balanced_error:.1e})"),
    )
}

fn criterion_9() -> Result<Verdict> {
    let start = Instant::now();
    let mut count = 0;
    let mut wrong = 0;
    let mut worst = 0.0f64;
    for bits in 1..=3 {
        for f in BooleanFunction::promise_functions(bits) {
            let inst = dj_build(&f, DjVariant::ConstantH, 1.0, 1.0)?;
            let run = propagate(&inst.hamiltonian, &inst.initial_state, 1.0, opts())?;
            let class = dj_classify(&run.final_state, LabelConvention::Standard)?;
            let exact = if class.certainty > 0.5 { 1.0 } else { 0.0 };
            worst = worst.max((class.certainty - exact).abs());
            if class.label != f.promise()? {
                wrong += 1;
            }
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        wrong == 0 && worst <= CERTAINTY_TOL && elapsed < SWEEP_TIME_LIMIT,
        format!("{count} functions, {wrong} misclassified, max certainty deviation {worst:.3e}, {elapsed:.2?}"),
    )
}

fn criterion_10() -> Result<Verdict> {
    let mut misses = 0;
    let mut worst = 0.0f64;
    let mut runs = 0;
    for items in [2, 4, 8, 16] {
        for marked in 0..items {
            for sign in [1.0, -1.0] {
                let inst = grover_build(&GroverOracleSpec::new(items, marked), 1.0, sign, 1.0)?;
                let out = grover_run(&inst, opts())?;
                if out.found != marked {
                    misses += 1;
                }
                worst = worst.max(1.0 - out.fidelity);
                runs += 1;
            }
        }
    }
    verdict(
        misses == 0 && worst <= FIDELITY_TOL,
        format!("{runs} runs, {misses} wrong indices, max 1 − fidelity {worst:.3e}"),
    )
}

fn criterion_11() -> Result<Verdict> {
    let grid = unit_grid(GRID_POINTS);
    let f: BooleanFunction = "01".parse().unwrap();
    let inst = dj_build(&f, DjVariant::ConstantH, 1.0, 1.0)?;
    let wrong = commuting_hamiltonian(&qubit::sigma_x(), &AlphaProfile::linear())?;
    let run = propagate(&wrong, &inst.initial_state, 1.0, opts().recording())?;
    let tracking = track_invariant(&inst.invariant, &run, &grid)?;
    let residual = invariant_residual(&inst.invariant, &wrong, 1.0, &grid)?.max;
    let right = propagate(&inst.hamiltonian, &inst.initial_state, 1.0, opts().recording())?;
    let right_tracking = track_invariant(&inst.invariant, &right, &grid)?.min;
    verdict(
        tracking.min < NEGATIVE_CONTROL_BOUND,
        format!(
            "σx driver: min overlap {:.3e}, residual {residual:.3e}; σz driver: min overlap {right_tracking:.12}",
            tracking.min
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Verdict>); 11] = [
        ("DJ single-qubit classification", criterion_1),
        ("T-independence", criterion_2),
        ("invariant residual", criterion_3),
        ("spectrum constancy and gap", criterion_4),
        ("effective frequencies", criterion_5),
        ("polynomial closed form vs solver", criterion_6),
        ("DJ variant agreement", criterion_7),
        ("Lewis-Riesenfeld phase", criterion_8),
        ("brute-force promise sweep", criterion_9),
        ("Grover correctness", criterion_10),
        ("negative control", criterion_11),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} ({:.2?})",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
