//! Dataset ingestion and persistence.
//!
//! Longitudinal file: `id,time_years,y_sqrt_cd4`, one row per exam.
//! Survival file: `id,event_time_years,event,gender,age50,prevoi`, one row
//! per subject (covariates are baseline-constant, so they live here).
//! Values must be complete: rows with blanks are parse errors, and ids may
//! not contain commas (fields are never quoted).

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_float, parse_binary, parse_float};
use crate::model::{Dataset, Subject};

pub const LONGITUDINAL_HEADER: &str = "id,time_years,y_sqrt_cd4";
pub const SURVIVAL_HEADER: &str = "id,event_time_years,event,gender,age50,prevoi";

struct SurvivalRow {
    id: String,
    line: usize,
    event_time: f64,
    event: bool,
    sex: u8,
    age: u8,
    prevoi: u8,
}

/// Read and join the two files; every survival row must have at least one
/// longitudinal row and vice versa. Subjects keep the survival-file order.
pub fn parse_dataset(longitudinal: &Path, survival: &Path) -> Result<Dataset> {
    let surv_text = fs::read_to_string(survival)?;
    let mut surv_rows: Vec<SurvivalRow> = Vec::new();
    let mut surv_index: HashMap<String, usize> = HashMap::new();
    let mut lines = surv_text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == SURVIVAL_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(
                1,
                format!("survival header must be {SURVIVAL_HEADER:?}, got {h:?}"),
            ))
        }
        None => return Err(Error::parse(1, "empty survival file")),
    }
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                lineno,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let id = fields[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::parse(lineno, "blank id"));
        }
        if surv_index.contains_key(&id) {
            return Err(Error::parse(lineno, format!("duplicate subject id {id:?}")));
        }
        let event_time = parse_float(fields[1], lineno, "event_time_years")?;
        let event = parse_binary(fields[2], lineno, "event")? == 1;
        let sex = parse_binary(fields[3], lineno, "gender")?;
        let age = parse_binary(fields[4], lineno, "age50")?;
        let prevoi = parse_binary(fields[5], lineno, "prevoi")?;
        if !(event_time >= 0.0) || !event_time.is_finite() {
            return Err(Error::parse(
                lineno,
                format!("event_time_years must be nonnegative, got {event_time}"),
            ));
        }
        surv_index.insert(id.clone(), surv_rows.len());
        surv_rows.push(SurvivalRow {
            id,
            line: lineno,
            event_time,
            event,
            sex,
            age,
            prevoi,
        });
    }
    if surv_rows.is_empty() {
        return Err(Error::parse(1, "survival file has no data rows"));
    }

    let long_text = fs::read_to_string(longitudinal)?;
    let mut lines = long_text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == LONGITUDINAL_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(
                1,
                format!("longitudinal header must be {LONGITUDINAL_HEADER:?}, got {h:?}"),
            ))
        }
        None => return Err(Error::parse(1, "empty longitudinal file")),
    }
    let mut measurements: Vec<Vec<(f64, f64)>> = vec![Vec::new(); surv_rows.len()];
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let id = fields[0].trim();
        let slot = *surv_index.get(id).ok_or_else(|| {
            Error::parse(
                lineno,
                format!("longitudinal id {id:?} has no survival row"),
            )
        })?;
        let t = parse_float(fields[1], lineno, "time_years")?;
        let y = parse_float(fields[2], lineno, "y_sqrt_cd4")?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::parse(
                lineno,
                format!("time_years must be nonnegative, got {t}"),
            ));
        }
        if measurements[slot].iter().any(|(t0, _)| *t0 == t) {
            return Err(Error::parse(
                lineno,
                format!("duplicate (id, time) pair ({id:?}, {t})"),
            ));
        }
        measurements[slot].push((t, y));
    }

    let mut subjects = Vec::with_capacity(surv_rows.len());
    for (row, meas) in surv_rows.into_iter().zip(measurements) {
        if meas.is_empty() {
            return Err(Error::parse(
                row.line,
                format!("survival id {:?} has no longitudinal rows", row.id),
            ));
        }
        let mut meas = meas;
        meas.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
        let (times, y): (Vec<f64>, Vec<f64>) = meas.into_iter().unzip();
        subjects.push(Subject::new(
            row.id,
            times,
            y,
            row.event_time,
            row.event,
            row.sex,
            row.age,
            row.prevoi,
        )?);
    }
    Dataset::new(subjects)
}

/// Write the two CSV files for a dataset (inverse of [`parse_dataset`]).
pub fn write_dataset(dataset: &Dataset, longitudinal: &Path, survival: &Path) -> Result<()> {
    for s in dataset.subjects() {
        if s.id().contains(',') || s.id().contains('\n') {
            return Err(Error::invalid(format!(
                "id {:?} contains a field or line separator",
                s.id()
            )));
        }
    }
    let mut long = String::from(LONGITUDINAL_HEADER);
    long.push('\n');
    let mut surv = String::from(SURVIVAL_HEADER);
    surv.push('\n');
    for s in dataset.subjects() {
        for (t, y) in s.times().iter().zip(s.y()) {
            long.push_str(s.id());
            long.push(',');
            long.push_str(&fmt_float(*t));
            long.push(',');
            long.push_str(&fmt_float(*y));
            long.push('\n');
        }
        surv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.id(),
            fmt_float(s.event_time()),
            s.event() as u8,
            s.sex(),
            s.age(),
            s.prevoi()
        ));
    }
    std::fs::write(longitudinal, long)?;
    std::fs::write(survival, surv)?;
    Ok(())
}
