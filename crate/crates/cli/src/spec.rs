//! Run specifications: a JSON document describing one sweep.
//!
//! Parsing walks the document by hand so that every error names the field
//! path it came from, and so unknown keys can be fatal (strict) or reported
//! as warnings (lenient).

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde_json::{Map, Value};
use thiserror::Error;

use qcdi::algorithms::{
    BooleanFunction, DjVariant, GroverOracleSpec, HamiltonianSource, PolynomialVariant,
    PolynomialWeights,
};
use qcdi::evolve::{Scheme, DEFAULT_STEPS};
use qcdi::numeric::DEFAULT_GRID_POINTS;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("malformed run spec: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

fn field_error(path: &str, message: impl Into<String>) -> SpecError {
    SpecError::Field {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReportToggles {
    pub residual: bool,
    pub spectrum: bool,
    pub trajectory: bool,
    pub adiabaticity: bool,
    pub phase: bool,
    pub schedule: bool,
}

impl Default for ReportToggles {
    fn default() -> Self {
        Self {
            residual: true,
            spectrum: true,
            trajectory: false,
            adiabaticity: true,
            phase: true,
            schedule: false,
        }
    }
}

impl ReportToggles {
    pub fn all() -> Self {
        Self {
            residual: true,
            spectrum: true,
            trajectory: true,
            adiabaticity: true,
            phase: true,
            schedule: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub min_fidelity: f64,
    pub max_residual: f64,
    pub min_tracking: f64,
    pub max_phase_error: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_fidelity: 1.0 - 1e-8,
            max_residual: 1e-6,
            min_tracking: 1.0 - 1e-6,
            max_phase_error: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Dj {
        function: BooleanFunction,
        variants: Vec<DjVariant>,
    },
    Grover {
        oracle: GroverOracleSpec,
        signs: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub problem: Problem,
    pub times: Vec<f64>,
    pub omega: f64,
    pub grid: usize,
    pub steps: usize,
    pub scheme: Scheme,
    pub out: Option<PathBuf>,
    pub report: ReportToggles,
    pub thresholds: Thresholds,
}

impl RunSpec {
    /// (T, variant label) pairs in report order.
    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for &t in &self.times {
            match &self.problem {
                Problem::Dj { variants, .. } => {
                    jobs.extend(variants.iter().map(|&v| Job {
                        total_time: t,
                        kind: JobKind::Dj(v),
                    }));
                }
                Problem::Grover { signs, .. } => {
                    jobs.extend(signs.iter().map(|&sign| Job {
                        total_time: t,
                        kind: JobKind::Grover(sign),
                    }));
                }
            }
        }
        jobs.sort_by(|a, b| {
            a.total_time
                .total_cmp(&b.total_time)
                .then_with(|| a.label().cmp(&b.label()))
        });
        jobs.dedup_by(|a, b| a.total_time == b.total_time && a.label() == b.label());
        jobs
    }

    /// Rechecks the numeric settings after command-line overrides.
    pub fn revalidate(&self) -> Result<(), SpecError> {
        if self.grid < 2 {
            return Err(field_error("grid", format!("need at least 2 grid points, got {}", self.grid)));
        }
        if self.steps == 0 {
            return Err(field_error("steps", "need at least one step"));
        }
        self.cross_check()
    }

    /// Checks that depend on more than one field.
    fn cross_check(&self) -> Result<(), SpecError> {
        if self.report.trajectory && self.steps % (self.grid - 1) != 0 {
            return Err(field_error(
                "steps",
                format!(
                    "trajectory reporting needs steps to be a multiple of grid − 1 = {}, got {}",
                    self.grid - 1,
                    self.steps
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Job {
    pub total_time: f64,
    pub kind: JobKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JobKind {
    Dj(DjVariant),
    Grover(f64),
}

impl Job {
    pub fn label(&self) -> String {
        match self.kind {
            JobKind::Dj(v) => v.to_string(),
            JobKind::Grover(sign) => if sign > 0.0 { "grover(+)" } else { "grover(-)" }.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSpec {
    pub spec: RunSpec,
    /// Unknown keys skipped in lenient mode.
    pub warnings: Vec<String>,
}

/// Object reader that remembers which keys were consumed.
struct Fields<'a> {
    path: String,
    map: &'a Map<String, Value>,
    used: BTreeSet<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(path: &str, value: &'a Value) -> Result<Self, SpecError> {
        let map = value
            .as_object()
            .ok_or_else(|| field_error(if path.is_empty() { "<root>" } else { path }, "expected an object"))?;
        Ok(Self {
            path: path.to_string(),
            map,
            used: BTreeSet::new(),
        })
    }

    fn child(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn take(&mut self, key: &'a str) -> Option<&'a Value> {
        let v = self.map.get(key)?;
        self.used.insert(key);
        Some(v)
    }

    fn require(&mut self, key: &'a str) -> Result<&'a Value, SpecError> {
        let path = self.child(key);
        self.take(key).ok_or_else(|| field_error(&path, "missing required field"))
    }

    fn f64(&mut self, key: &'a str) -> Result<Option<f64>, SpecError> {
        let path = self.child(key);
        self.take(key).map(|v| number(&path, v)).transpose()
    }

    fn usize(&mut self, key: &'a str) -> Result<Option<usize>, SpecError> {
        let path = self.child(key);
        self.take(key)
            .map(|v| {
                v.as_u64()
                    .map(|x| x as usize)
                    .ok_or_else(|| field_error(&path, format!("expected a nonnegative integer, got {v}")))
            })
            .transpose()
    }

    fn str(&mut self, key: &'a str) -> Result<Option<&'a str>, SpecError> {
        let path = self.child(key);
        self.take(key)
            .map(|v| v.as_str().ok_or_else(|| field_error(&path, format!("expected a string, got {v}"))))
            .transpose()
    }

    fn bool(&mut self, key: &'a str) -> Result<Option<bool>, SpecError> {
        let path = self.child(key);
        self.take(key)
            .map(|v| v.as_bool().ok_or_else(|| field_error(&path, format!("expected true or false, got {v}"))))
            .transpose()
    }

    fn finish(self, mode: Mode, warnings: &mut Vec<String>) -> Result<(), SpecError> {
        for key in self.map.keys() {
            if !self.used.contains(key.as_str()) {
                let path = self.child(key);
                match mode {
                    Mode::Strict => return Err(field_error(&path, "unknown key")),
                    Mode::Lenient => warnings.push(format!("{path}: unknown key ignored")),
                }
            }
        }
        Ok(())
    }
}

fn number(path: &str, v: &Value) -> Result<f64, SpecError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| field_error(path, format!("expected a finite number, got {v}")))
}

/// A value or a list of values.
fn one_or_many<'a>(v: &'a Value) -> Vec<(usize, &'a Value)> {
    match v {
        Value::Array(items) => items.iter().enumerate().collect(),
        other => vec![(0, other)],
    }
}

fn indexed(path: &str, v: &Value, k: usize) -> String {
    if v.is_array() {
        format!("{path}[{k}]")
    } else {
        path.to_string()
    }
}

pub fn parse_run_spec(text: &str, mode: Mode) -> Result<ParsedSpec, SpecError> {
    let root: Value = serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
    let mut warnings = Vec::new();
    let mut fields = Fields::new("", &root)?;

    let problem_name = fields
        .str("problem")?
        .ok_or_else(|| field_error("problem", "missing required field"))?;

    let times_value = fields.require("T")?;
    let mut times = Vec::new();
    for (k, v) in one_or_many(times_value) {
        let path = indexed("T", times_value, k);
        let t = number(&path, v)?;
        if t <= 0.0 {
            return Err(field_error(&path, format!("total time must be positive, got {t}")));
        }
        times.push(t);
    }
    if times.is_empty() {
        return Err(field_error("T", "at least one total time is required"));
    }

    let omega = fields.f64("omega")?.unwrap_or(1.0);
    if omega <= 0.0 {
        return Err(field_error("omega", format!("gap parameter must be positive, got {omega}")));
    }
    let grid = fields.usize("grid")?.unwrap_or(DEFAULT_GRID_POINTS);
    if grid < 2 {
        return Err(field_error("grid", format!("need at least 2 grid points, got {grid}")));
    }
    let steps = fields.usize("steps")?.unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        return Err(field_error("steps", "need at least one step"));
    }
    let scheme = match fields.str("scheme")? {
        None | Some("exponential_midpoint") => Scheme::ExponentialMidpoint,
        Some("rk4") => Scheme::Rk4,
        Some(other) => {
            return Err(field_error(
                "scheme",
                format!("expected exponential_midpoint or rk4, got {other:?}"),
            ))
        }
    };
    let out = fields.str("out")?.map(PathBuf::from);
    let report = match fields.take("report") {
        Some(v) => parse_report(v, mode, &mut warnings)?,
        None => ReportToggles::default(),
    };
    let thresholds = match fields.take("thresholds") {
        Some(v) => parse_thresholds(v, mode, &mut warnings)?,
        None => Thresholds::default(),
    };

    let problem = match problem_name {
        "dj" => parse_dj(&mut fields, mode, &mut warnings)?,
        "grover" => parse_grover(&mut fields)?,
        other => return Err(field_error("problem", format!("expected dj or grover, got {other:?}"))),
    };
    fields.finish(mode, &mut warnings)?;

    let spec = RunSpec {
        problem,
        times,
        omega,
        grid,
        steps,
        scheme,
        out,
        report,
        thresholds,
    };
    spec.cross_check()?;
    Ok(ParsedSpec { spec, warnings })
}

fn parse_report(v: &Value, mode: Mode, warnings: &mut Vec<String>) -> Result<ReportToggles, SpecError> {
    let mut f = Fields::new("report", v)?;
    let d = ReportToggles::default();
    let toggles = ReportToggles {
        residual: f.bool("residual")?.unwrap_or(d.residual),
        spectrum: f.bool("spectrum")?.unwrap_or(d.spectrum),
        trajectory: f.bool("trajectory")?.unwrap_or(d.trajectory),
        adiabaticity: f.bool("adiabaticity")?.unwrap_or(d.adiabaticity),
        phase: f.bool("phase")?.unwrap_or(d.phase),
        schedule: f.bool("schedule")?.unwrap_or(d.schedule),
    };
    f.finish(mode, warnings)?;
    Ok(toggles)
}

fn parse_thresholds(v: &Value, mode: Mode, warnings: &mut Vec<String>) -> Result<Thresholds, SpecError> {
    let mut f = Fields::new("thresholds", v)?;
    let d = Thresholds::default();
    let t = Thresholds {
        min_fidelity: f.f64("min_fidelity")?.unwrap_or(d.min_fidelity),
        max_residual: f.f64("max_residual")?.unwrap_or(d.max_residual),
        min_tracking: f.f64("min_tracking")?.unwrap_or(d.min_tracking),
        max_phase_error: f.f64("max_phase_error")?.unwrap_or(d.max_phase_error),
    };
    f.finish(mode, warnings)?;
    Ok(t)
}

fn parse_dj(fields: &mut Fields, mode: Mode, warnings: &mut Vec<String>) -> Result<Problem, SpecError> {
    let table = fields
        .str("table")?
        .ok_or_else(|| field_error("table", "missing required field"))?;
    let function: BooleanFunction = table.parse().map_err(|e| field_error("table", format!("{e}")))?;
    function.promise().map_err(|e| field_error("table", format!("{e}")))?;

    let poly = match fields.take("poly") {
        Some(v) => Some(parse_poly(v, mode, warnings)?),
        None => None,
    };

    let key = if fields.map.contains_key("variants") { "variants" } else { "variant" };
    let mut variants = Vec::new();
    match fields.take(key) {
        None => variants.push(DjVariant::ConstantH),
        Some(value) => {
            for (k, v) in one_or_many(value) {
                let path = indexed(key, value, k);
                let name = v
                    .as_str()
                    .ok_or_else(|| field_error(&path, format!("expected a variant name, got {v}")))?;
                variants.push(match name {
                    "constant_H" => DjVariant::ConstantH,
                    "oscillating" => DjVariant::Oscillating,
                    "polynomial" => {
                        if function.bits() != 1 {
                            return Err(field_error(
                                &path,
                                format!("polynomial variant needs a single-bit table, got {} bits", function.bits()),
                            ));
                        }
                        DjVariant::Polynomial(poly.unwrap_or_else(|| PolynomialVariant::new(1, 1)))
                    }
                    other => {
                        return Err(field_error(
                            &path,
                            format!("expected constant_H, oscillating or polynomial, got {other:?}"),
                        ))
                    }
                });
            }
        }
    }
    if variants.is_empty() {
        return Err(field_error(key, "at least one variant is required"));
    }
    Ok(Problem::Dj { function, variants })
}

fn parse_poly(v: &Value, mode: Mode, warnings: &mut Vec<String>) -> Result<PolynomialVariant, SpecError> {
    let mut f = Fields::new("poly", v)?;
    let power = |key: &'static str, f: &mut Fields| -> Result<u32, SpecError> {
        let p = f.usize(key)?.unwrap_or(1);
        if p == 0 || p > 64 {
            return Err(field_error(&format!("poly.{key}"), format!("power must be in 1..=64, got {p}")));
        }
        Ok(p as u32)
    };
    let m = power("m", &mut f)?;
    let n = power("n", &mut f)?;
    let r = power("r", &mut f)?;
    let mut variant = PolynomialVariant::new(n, r);
    variant.m = m;
    if let Some(w) = f.take("weights") {
        let mut wf = Fields::new("poly.weights", w)?;
        let nu = wf.f64("nu")?.unwrap_or(0.0);
        let beta = wf.f64("beta")?.ok_or_else(|| field_error("poly.weights.beta", "missing required field"))?;
        let gamma = wf.f64("gamma")?.ok_or_else(|| field_error("poly.weights.gamma", "missing required field"))?;
        wf.finish(mode, warnings)?;
        variant.weights = PolynomialWeights::Custom { nu, beta, gamma };
        variant.source = HamiltonianSource::Solver;
    }
    match f.str("hamiltonian")? {
        None => {}
        Some("closed_form") => {
            if matches!(variant.weights, PolynomialWeights::Custom { .. }) {
                return Err(field_error(
                    "poly.hamiltonian",
                    "closed_form is only available without custom weights",
                ));
            }
            variant.source = HamiltonianSource::ClosedForm;
        }
        Some("solver") => variant.source = HamiltonianSource::Solver,
        Some(other) => {
            return Err(field_error(
                "poly.hamiltonian",
                format!("expected closed_form or solver, got {other:?}"),
            ))
        }
    }
    f.finish(mode, warnings)?;
    Ok(variant)
}

fn parse_grover(fields: &mut Fields) -> Result<Problem, SpecError> {
    let items = fields.usize("N")?.ok_or_else(|| field_error("N", "missing required field"))?;
    if items < 2 {
        return Err(field_error("N", format!("search space needs at least 2 items, got {items}")));
    }
    let marked = fields.usize("w")?.ok_or_else(|| field_error("w", "missing required field"))?;
    if marked >= items {
        return Err(field_error("w", format!("marked index {marked} outside 0..{items}")));
    }
    let mut oracle = GroverOracleSpec::new(items, marked);
    if let Some(theta) = fields.f64("theta")? {
        oracle.theta = theta;
    }
    if let Some(delta) = fields.f64("delta")? {
        oracle.delta = delta;
    }
    if let Some(epsilon) = fields.f64("epsilon")? {
        oracle.epsilon = epsilon;
    }
    oracle.validate().map_err(|e| {
        let path = match &e {
            qcdi::Error::InvalidParameter { name: "delta", .. } => "delta",
            _ => "theta",
        };
        field_error(path, format!("{e}"))
    })?;

    let mut signs = Vec::new();
    match fields.take("sign") {
        None => signs.push(1.0),
        Some(value) => {
            for (k, v) in one_or_many(value) {
                let path = indexed("sign", value, k);
                match v.as_i64() {
                    Some(1) => signs.push(1.0),
                    Some(-1) => signs.push(-1.0),
                    _ => return Err(field_error(&path, format!("expected 1 or -1, got {v}"))),
                }
            }
        }
    }
    if signs.is_empty() {
        return Err(field_error("sign", "at least one sign is required"));
    }
    Ok(Problem::Grover { oracle, signs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strict(text: &str) -> Result<RunSpec, SpecError> {
        parse_run_spec(text, Mode::Strict).map(|p| p.spec)
    }

    fn path_of(err: SpecError) -> String {
        match err {
            SpecError::Field { path, .. } => path,
            other => panic!("expected a field error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_dj_spec() {
        let spec = strict(r#"{"problem": "dj", "table": "01", "variant": "constant_H", "T": [1.0]}"#).unwrap();
        assert_eq!(spec.times, vec![1.0]);
        assert_eq!(spec.grid, 201);
        assert_eq!(spec.steps, 2000);
        match spec.problem {
            Problem::Dj { function, variants } => {
                assert_eq!(function.to_string(), "01");
                assert_eq!(variants, vec![DjVariant::ConstantH]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_time_list_names_field() {
        let err = strict(r#"{"problem": "dj", "table": "01", "T": []}"#).unwrap_err();
        assert_eq!(path_of(err), "T");
    }

    #[test]
    fn grover_sweep_expands() {
        let spec = strict(r#"{"problem": "grover", "N": 4, "w": 2, "T": [0.5, 50]}"#).unwrap();
        let jobs = spec.jobs();
        assert_eq!(jobs.len(), 2);
        assert_eq!(jobs[0].total_time, 0.5);
        assert_eq!(jobs[1].total_time, 50.0);
    }

    #[test]
    fn unknown_keys() {
        let text = r#"{"problem": "dj", "table": "01", "T": [1], "tabel": "10", "report": {"phse": true}}"#;
        let err = strict(text).unwrap_err();
        assert_eq!(path_of(err), "report.phse");
        let parsed = parse_run_spec(text, Mode::Lenient).unwrap();
        assert_eq!(parsed.warnings.len(), 2);
        assert!(parsed.warnings[1].starts_with("tabel"));
    }

    #[test]
    fn field_paths_of_invalid_values() {
        let cases = [
            (r#"{"problem": "dj", "table": "0111", "T": [1]}"#, "table"),
            (r#"{"problem": "dj", "table": "01", "T": [1, -2]}"#, "T[1]"),
            (r#"{"problem": "dj", "table": "01", "T": 1, "grid": 1}"#, "grid"),
            (r#"{"problem": "dj", "table": "0110", "T": [1], "variant": "polynomial"}"#, "variant"),
            (r#"{"problem": "dj", "table": "01", "T": [1], "variants": ["constant_H", "slow"]}"#, "variants[1]"),
            (r#"{"problem": "dj", "table": "01", "T": [1], "poly": {"n": 0}}"#, "poly.n"),
            (r#"{"problem": "dj", "table": "01", "T": [1], "poly": {"hamiltonian": "x"}}"#, "poly.hamiltonian"),
            (r#"{"problem": "grover", "N": 4, "w": 4, "T": [1]}"#, "w"),
            (r#"{"problem": "grover", "N": 1, "w": 0, "T": [1]}"#, "N"),
            (r#"{"problem": "grover", "N": 4, "w": 1, "T": [1], "theta": 0.3}"#, "theta"),
            (r#"{"problem": "grover", "N": 4, "w": 1, "T": [1], "sign": [1, 2]}"#, "sign[1]"),
            (r#"{"problem": "shor", "T": [1]}"#, "problem"),
            (r#"{"problem": "dj", "table": "01"}"#, "T"),
            (r#"{"problem": "dj", "table": "01", "T": [1], "steps": 7, "report": {"trajectory": true}}"#, "steps"),
            (r#"{"problem": "dj", "table": "01", "T": [1], "thresholds": {"min_fidelity": "high"}}"#, "thresholds.min_fidelity"),
        ];
        for (text, path) in cases {
            assert_eq!(path_of(strict(text).unwrap_err()), path, "{text}");
        }
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(strict("{"), Err(SpecError::Syntax(_))));
        assert_eq!(path_of(strict("[1]").unwrap_err()), "<root>");
    }

    #[test]
    fn polynomial_options() {
        let spec = strict(
            r#"{"problem": "dj", "table": "00", "T": [1], "variants": ["polynomial"],
                "poly": {"n": 1, "r": 2, "hamiltonian": "closed_form"}}"#,
        )
        .unwrap();
        let Problem::Dj { variants, .. } = spec.problem else { panic!() };
        let DjVariant::Polynomial(p) = variants[0] else { panic!() };
        assert_eq!((p.n, p.r), (1, 2));
        assert_eq!(p.source, HamiltonianSource::ClosedForm);
    }

    #[test]
    fn jobs_sorted_by_time_then_variant() {
        let spec = strict(
            r#"{"problem": "dj", "table": "01", "T": [10, 1], "variants": ["oscillating", "constant_H"]}"#,
        )
        .unwrap();
        let labels: Vec<(f64, String)> = spec.jobs().iter().map(|j| (j.total_time, j.label())).collect();
        assert_eq!(
            labels,
            vec![
                (1.0, "constant_H".into()),
                (1.0, "oscillating".into()),
                (10.0, "constant_H".into()),
                (10.0, "oscillating".into()),
            ]
        );
    }
}
