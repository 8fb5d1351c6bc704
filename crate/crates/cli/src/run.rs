//! Executes a run spec: one job per (T, variant), reports and a summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use qcdi::algorithms::{dj_build, dj_classify, grover_build, ProblemInstance};
use qcdi::csvout::{format_float, write_text_table};
use qcdi::evolve::{lewis_riesenfeld_phase, propagate, track_invariant, PropagatorOptions};
use qcdi::invariant::{invariant_residual, spectrum_flow};
use qcdi::numeric::{angle_distance, unit_grid};
use qcdi::synth::adiabaticity_metric;

use crate::spec::{Job, JobKind, Problem, RunSpec};

pub const OUT_DIR_ENV: &str = "QCDI_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qcdi-out";

/// --out, then the spec's `out`, then the environment, then the default.
pub fn resolve_out_dir(flag: Option<&Path>, spec: &RunSpec) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| spec.out.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub index: usize,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub variant: String,
    /// Promise label for DJ, found index for search.
    pub outcome: Option<String>,
    pub certainty: Option<f64>,
    pub fidelity: Option<f64>,
    pub global_phase: Option<f64>,
    pub norm_drift: Option<f64>,
    pub pauli_terms: Option<usize>,
    pub max_residual: Option<f64>,
    pub min_gap: Option<f64>,
    pub eigenvalue_drift: Option<f64>,
    pub min_tracking: Option<f64>,
    /// Absent when a level crossing makes the metric infinite.
    pub adiabaticity: Option<f64>,
    pub crossing_at: Option<f64>,
    pub predicted_phase: Option<f64>,
    pub phase_error: Option<f64>,
    pub error: Option<String>,
    pub breaches: Vec<String>,
    pub files: Vec<String>,
    pub wall_time_ms: f64,
}

impl RunRecord {
    fn new(index: usize, job: &Job) -> Self {
        Self {
            index,
            total_time: job.total_time,
            variant: job.label(),
            outcome: None,
            certainty: None,
            fidelity: None,
            global_phase: None,
            norm_drift: None,
            pauli_terms: None,
            max_residual: None,
            min_gap: None,
            eigenvalue_drift: None,
            min_tracking: None,
            adiabaticity: None,
            crossing_at: None,
            predicted_phase: None,
            phase_error: None,
            error: None,
            breaches: Vec::new(),
            files: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.breaches.is_empty()
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub problem: String,
    pub passed: bool,
    pub warnings: Vec<String>,
    pub runs: Vec<RunRecord>,
}

/// Runs every job, writes reports into `out_dir` and returns the summary.
pub fn execute(spec: &RunSpec, out_dir: &Path, warnings: &[String]) -> anyhow::Result<Summary> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let jobs = spec.jobs();
    let results: Vec<(RunRecord, Vec<(String, Vec<u8>)>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| run_job(spec, index, job))
        .collect();

    let mut runs = Vec::with_capacity(results.len());
    for (record, files) in results {
        for (name, bytes) in files {
            let path = out_dir.join(&name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        runs.push(record);
    }

    let mut table = Vec::new();
    write_runs_table(&mut table, &runs)?;
    fs::write(out_dir.join("runs.csv"), table).context("writing runs.csv")?;

    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        problem: problem_name(&spec.problem).into(),
        passed: runs.iter().all(RunRecord::passed),
        warnings: warnings.to_vec(),
        runs,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out_dir.join("summary.json"), json + "\n").context("writing summary.json")?;
    Ok(summary)
}

fn problem_name(problem: &Problem) -> &'static str {
    match problem {
        Problem::Dj { .. } => "dj",
        Problem::Grover { .. } => "grover",
    }
}

fn file_stem(index: usize, job: &Job) -> String {
    let label: String = job
        .label()
        .replace("(+)", "_plus")
        .replace("(-)", "_minus")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("run{index:03}_{}", label.trim_end_matches('_'))
}

fn run_job(spec: &RunSpec, index: usize, job: &Job) -> (RunRecord, Vec<(String, Vec<u8>)>) {
    let start = Instant::now();
    let mut record = RunRecord::new(index, job);
    let mut files = Vec::new();
    if let Err(e) = fill_record(spec, index, job, &mut record, &mut files) {
        record.error = Some(e.to_string());
    }
    record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    (record, files)
}

fn build(spec: &RunSpec, job: &Job) -> qcdi::Result<ProblemInstance> {
    match (&spec.problem, job.kind) {
        (Problem::Dj { function, .. }, JobKind::Dj(variant)) => dj_build(function, variant, job.total_time, spec.omega),
        (Problem::Grover { oracle, .. }, JobKind::Grover(sign)) => grover_build(oracle, job.total_time, sign, spec.omega),
        _ => unreachable!("jobs are generated from the spec's own problem"),
    }
}

fn fill_record(
    spec: &RunSpec,
    index: usize,
    job: &Job,
    record: &mut RunRecord,
    files: &mut Vec<(String, Vec<u8>)>,
) -> anyhow::Result<()> {
    let stem = file_stem(index, job);
    let mut emit = |record: &mut RunRecord, kind: &str, bytes: Vec<u8>| {
        let name = format!("{stem}_{kind}.csv");
        record.files.push(name.clone());
        files.push((name, bytes));
    };
    let limits = &spec.thresholds;
    let grid = unit_grid(spec.grid);
    let t = job.total_time;
    let instance = build(spec, job)?;
    record.pauli_terms = Some(instance.pauli_term_count()?);

    let mut opts = PropagatorOptions::default()
        .with_steps(spec.steps)
        .with_scheme(spec.scheme);
    if spec.report.trajectory {
        opts = opts.recording();
    }
    let run = propagate(&instance.hamiltonian, &instance.initial_state, t, opts)?;
    let outcome = run.against(&instance.target_state)?;
    record.fidelity = Some(outcome.fidelity);
    record.global_phase = Some(outcome.global_phase);
    record.norm_drift = Some(run.norm_drift);
    if outcome.fidelity < limits.min_fidelity {
        record
            .breaches
            .push(format!("fidelity {:.12} below {:.12}", outcome.fidelity, limits.min_fidelity));
    }

    match &spec.problem {
        Problem::Dj { function, .. } => {
            let expected = function.promise()?;
            match dj_classify(&run.final_state, instance.metadata.label_convention) {
                Ok(c) => {
                    record.outcome = Some(c.label.to_string());
                    record.certainty = Some(c.certainty);
                    if c.label != expected {
                        record.breaches.push(format!("classified {} but f is {expected}", c.label));
                    }
                }
                Err(e) => record.breaches.push(format!("classification failed: {e}")),
            }
        }
        Problem::Grover { oracle, .. } => {
            let found = run.final_state.argmax_probability();
            record.outcome = Some(found.to_string());
            if found != oracle.marked {
                record
                    .breaches
                    .push(format!("found index {found} but {} is marked", oracle.marked));
            }
        }
    }

    if spec.report.residual {
        let residual = invariant_residual(&instance.invariant, &instance.hamiltonian, t, &grid)?;
        record.max_residual = Some(residual.max);
        if residual.max > limits.max_residual {
            record
                .breaches
                .push(format!("residual {:.3e} above {:.3e}", residual.max, limits.max_residual));
        }
        let mut buf = Vec::new();
        residual.write_csv(&mut buf)?;
        emit(record, "residual", buf);
    }

    if spec.report.spectrum {
        let flow = spectrum_flow(&instance.invariant, &grid)?;
        record.min_gap = Some(flow.min_gap);
        record.eigenvalue_drift = Some(flow.max_eigenvalue_drift);
        let mut buf = Vec::new();
        flow.write_csv(&mut buf)?;
        emit(record, "spectrum", buf);
    }

    if spec.report.trajectory {
        let tracking = track_invariant(&instance.invariant, &run, &grid)?;
        record.min_tracking = Some(tracking.min);
        if tracking.min < limits.min_tracking {
            record
                .breaches
                .push(format!("tracking {:.12} below {:.12}", tracking.min, limits.min_tracking));
        }
        let mut buf = Vec::new();
        run.write_trajectory_csv(&mut buf, Some(&tracking))?;
        emit(record, "trajectory", buf);
    }

    if spec.report.adiabaticity {
        let report = adiabaticity_metric(&instance.hamiltonian, t, &grid)?;
        record.adiabaticity = report.value.is_finite().then_some(report.value);
        record.crossing_at = report.crossing_at;
    }

    if spec.report.phase {
        let predicted = lewis_riesenfeld_phase(
            &instance.invariant,
            &instance.hamiltonian,
            t,
            &grid,
            &instance.initial_state,
            &instance.target_state,
        )?;
        let error = angle_distance(predicted, outcome.global_phase);
        record.predicted_phase = Some(predicted);
        record.phase_error = Some(error);
        if error > limits.max_phase_error {
            record
                .breaches
                .push(format!("phase error {error:.3e} above {:.3e}", limits.max_phase_error));
        }
    }

    if spec.report.schedule {
        let mut buf = Vec::new();
        instance.hamiltonian.write_csv(&mut buf, t, &grid)?;
        emit(record, "schedule", buf);
    }
    Ok(())
}

/// One row per run; deterministic, so wall times are left to the summary.
fn write_runs_table(out: &mut Vec<u8>, runs: &[RunRecord]) -> anyhow::Result<()> {
    let header: Vec<String> = [
        "index",
        "T",
        "variant",
        "outcome",
        "fidelity",
        "max_residual",
        "min_gap",
        "min_tracking",
        "adiabaticity",
        "phase_error",
        "passed",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let num = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                format_float(r.total_time),
                r.variant.clone(),
                r.outcome.clone().unwrap_or_default(),
                num(r.fidelity),
                num(r.max_residual),
                num(r.min_gap),
                num(r.min_tracking),
                num(r.adiabaticity),
                num(r.phase_error),
                r.passed().to_string(),
            ]
        })
        .collect();
    write_text_table(out, &header, &rows)?;
    Ok(())
}
