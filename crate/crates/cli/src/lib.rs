//! Declarative runner for qcdi experiments.
//!
//! A run spec is a JSON file naming a problem, the variants to build and
//! the total times to sweep. Every (T, variant) pair becomes one run; runs
//! are executed in parallel and reported in (T, variant) order.

pub mod run;
pub mod spec;

use spec::{parse_run_spec, Mode, ParsedSpec, SpecError};

/// Built-in demonstrations, expressed as run specs.
pub fn demo_spec(name: &str) -> Option<ParsedSpec> {
    let text = match name {
        "dj" => {
            r#"{
                "problem": "dj",
                "table": "01",
                "variants": ["constant_H", "oscillating", "polynomial"],
                "T": [0.1, 1, 100]
            }"#
        }
        "grover" => r#"{"problem": "grover", "N": 4, "w": 2, "sign": [1, -1], "T": [0.5, 50]}"#,
        _ => return None,
    };
    Some(parse_run_spec(text, Mode::Strict).expect("built-in demo specs are valid"))
}

pub fn read_spec(path: &std::path::Path, mode: Mode) -> anyhow::Result<Result<ParsedSpec, SpecError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Ok(parse_run_spec(&text, mode))
}

#[cfg(test)]
mod tests {
    #[test]
    fn demos_parse() {
        assert_eq!(super::demo_spec("dj").unwrap().spec.jobs().len(), 9);
        assert_eq!(super::demo_spec("grover").unwrap().spec.jobs().len(), 4);
        assert!(super::demo_spec("shor").is_none());
    }
}
