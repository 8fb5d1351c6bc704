//! CSV emission shared by the report writers.
//!
//! Numbers are written in scientific notation with 17 significant digits so
//! that a parse of the file reproduces the in-memory value exactly. The first
//! line is a `#` comment carrying the tool version.

use std::io::Write;

use crate::error::Result;

pub const VERSION_LINE: &str = concat!("# qcdi ", env!("CARGO_PKG_VERSION"));

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the version comment, a header row and numeric rows.
pub fn write_table<W: Write>(out: W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let text: Vec<Vec<String>> = rows
        .iter()
        .map(|row| row.iter().map(|&x| format_float(x)).collect())
        .collect();
    write_text_table(out, header, &text)
}

/// As [`write_table`] for preformatted cells; numbers should go through
/// [`format_float`].
pub fn write_text_table<W: Write>(mut out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "{VERSION_LINE}")?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, std::f64::consts::PI, -1.0e-300, 12345.678901234567] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_layout() {
        let mut buf = Vec::new();
        write_table(&mut buf, &["s".into(), "x".into()], &[vec![0.0, 1.5]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# qcdi "));
        assert_eq!(lines[1], "s,x");
        assert_eq!(lines[2], "0.0000000000000000e0,1.5000000000000000e0");
    }
}
