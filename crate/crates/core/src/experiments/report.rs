//! CSV layouts for experiment outputs and replay inputs.
//!
//! | file                    | columns                                                                        |
//! |-------------------------|--------------------------------------------------------------------------------|
//! | `sweep.csv`             | trial_id, stroke_mm, model_dtheta_deg, model_dtheta_noelong_deg, estimated_dtheta_deg |
//! | `steering.csv`          | phi_deg, trial_id, theoretical_dx_mm, measured_dx_mm                           |
//! | `steering_summary.csv`  | phi_deg, theoretical_dx_mm, mean_dx_mm, std_dx_mm, percent_error               |
//! | `calibration.csv`       | iteration, l_mm, c, residual_rmse_deg                                          |
//!
//! Missing values are empty cells. Replay inputs use the sweep and
//! steering layouts with the model columns left out; extra columns are
//! ignored, so a previous run's output can be fed straight back in.

use std::io::Read;
use std::path::Path;

use super::{CalibrationResult, SteeringRecord, SweepRecord};
use crate::error::{Result, TagError};

pub const SWEEP_HEADER: [&str; 5] = [
    "trial_id",
    "stroke_mm",
    "model_dtheta_deg",
    "model_dtheta_noelong_deg",
    "estimated_dtheta_deg",
];
pub const STEERING_HEADER: [&str; 4] =
    ["phi_deg", "trial_id", "theoretical_dx_mm", "measured_dx_mm"];
pub const STEERING_SUMMARY_HEADER: [&str; 5] = [
    "phi_deg",
    "theoretical_dx_mm",
    "mean_dx_mm",
    "std_dx_mm",
    "percent_error",
];
pub const CALIBRATION_HEADER: [&str; 4] = ["iteration", "l_mm", "c", "residual_rmse_deg"];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn render<const N: usize>(
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| TagError::Parse(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| TagError::Parse(e.to_string()))
}

pub fn sweep_csv(records: &[SweepRecord]) -> Result<String> {
    render(
        SWEEP_HEADER,
        records.iter().map(|r| {
            [
                r.trial_id.to_string(),
                num(r.stroke_mm),
                opt(r.model_dtheta_deg),
                opt(r.model_dtheta_noelong_deg),
                opt(r.estimated_dtheta_deg),
            ]
        }),
    )
}

/// One row per trial; trial ids start at 1.
pub fn steering_csv(records: &[SteeringRecord]) -> Result<String> {
    render(
        STEERING_HEADER,
        records.iter().flat_map(|r| {
            r.measured_dx_mm.iter().enumerate().map(move |(i, m)| {
                [
                    num(r.phi_deg),
                    (i + 1).to_string(),
                    num(r.theoretical_dx_mm),
                    num(*m),
                ]
            })
        }),
    )
}

pub fn steering_summary_csv(records: &[SteeringRecord]) -> Result<String> {
    render(
        STEERING_SUMMARY_HEADER,
        records.iter().map(|r| {
            [
                num(r.phi_deg),
                num(r.theoretical_dx_mm),
                num(r.mean_dx_mm),
                num(r.std_dx_mm),
                num(r.percent_error),
            ]
        }),
    )
}

pub fn calibration_csv(result: &CalibrationResult) -> Result<String> {
    render(
        CALIBRATION_HEADER,
        result.history.iter().map(|h| {
            [
                h.iteration.to_string(),
                num(h.l_mm),
                format!("{:.9}", h.c),
                num(h.residual_rmse_deg),
            ]
        }),
    )
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| TagError::InvalidConfig(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents).map_err(|e| TagError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| TagError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMeasurement {
    pub trial_id: usize,
    pub stroke_mm: f64,
    pub estimated_dtheta_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringMeasurement {
    pub phi_deg: f64,
    pub trial_id: usize,
    pub measured_dx_mm: f64,
}

struct Table {
    columns: Vec<usize>,
    rows: Vec<csv::StringRecord>,
}

fn read_table<R: Read>(input: R, wanted: &[&str]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let columns = wanted
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| TagError::Parse(format!("missing column `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Table { columns, rows })
}

fn cell(row: &csv::StringRecord, col: usize, line: usize) -> Result<&str> {
    row.get(col)
        .ok_or_else(|| TagError::Parse(format!("row {line}: missing cell {col}")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| TagError::Parse(format!("row {line}: bad {what} `{s}`")))
}

/// Reads `trial_id, stroke_mm, estimated_dtheta_deg`.
pub fn read_sweep_replay<R: Read>(input: R) -> Result<Vec<SweepMeasurement>> {
    let t = read_table(input, &["trial_id", "stroke_mm", "estimated_dtheta_deg"])?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let line = i + 2;
            let est = cell(row, t.columns[2], line)?;
            Ok(SweepMeasurement {
                trial_id: parse(cell(row, t.columns[0], line)?, "trial_id", line)?,
                stroke_mm: parse(cell(row, t.columns[1], line)?, "stroke_mm", line)?,
                estimated_dtheta_deg: if est.is_empty() {
                    None
                } else {
                    Some(parse(est, "estimated_dtheta_deg", line)?)
                },
            })
        })
        .collect()
}

/// Reads `phi_deg, trial_id, measured_dx_mm`.
pub fn read_steering_replay<R: Read>(input: R) -> Result<Vec<SteeringMeasurement>> {
    let t = read_table(input, &["phi_deg", "trial_id", "measured_dx_mm"])?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let line = i + 2;
            Ok(SteeringMeasurement {
                phi_deg: parse(cell(row, t.columns[0], line)?, "phi_deg", line)?,
                trial_id: parse(cell(row, t.columns[1], line)?, "trial_id", line)?,
                measured_dx_mm: parse(cell(row, t.columns[2], line)?, "measured_dx_mm", line)?,
            })
        })
        .collect()
}
