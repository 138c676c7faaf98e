//! File formats: dataset CSVs, the model-spec configuration file, draw and
//! pointwise log-likelihood files, and the derived tables (summaries,
//! curves, WAIC comparisons).
//!
//! All writers emit deterministic byte streams: fixed column order and
//! 17-significant-digit scientific notation for reals, which round-trips
//! every finite f64 exactly.

mod dataset;
mod draws;
mod specfile;
mod tables;

pub use dataset::{parse_dataset, write_dataset};
pub use draws::{
    read_blocks, read_chain, read_draws, read_pointwise, write_blocks, write_chain, write_draws,
    write_pointwise, write_states,
};
pub use specfile::{parse_model_spec, parse_model_spec_str, write_model_spec};
pub use tables::{
    export_curves, summarize, write_curves, write_summary, write_waic_table, CurveRow,
    SummaryRow, WaicTableRow,
};

use crate::error::{Error, Result};

/// Canonical float formatting: 17 significant digits, scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_float(s: &str, line: usize, what: &str) -> Result<f64> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::parse(line, format!("blank {what}")));
    }
    t.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("malformed {what}: {t:?}")))
}

pub(crate) fn parse_binary(s: &str, line: usize, what: &str) -> Result<u8> {
    match s.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::parse(
            line,
            format!("{what} must be 0 or 1, got {other:?}"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0,
            -1.5,
            std::f64::consts::PI,
            1e-300,
            -3.1234567890123457e250,
            f64::INFINITY,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    #[test]
    fn parse_float_reports_line_numbers() {
        match parse_float("abc", 7, "value") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_float("", 3, "value").is_err());
        assert_eq!(parse_float(" 2.5 ", 1, "value").unwrap(), 2.5);
    }
}
