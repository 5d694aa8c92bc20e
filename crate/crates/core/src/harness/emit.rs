use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::TrainingTrace;

use super::experiment::{OutputFormat, ResultRow, RunSpec};

pub const CSV_HEADER: &str = "steps,runtime_s,value,rel_error,error_order,std_dev,seed";

/// Name of the standard-deviation convention recorded in JSON output.
pub const STD_CONVENTION: &str = "sample (n-1) over per-run values";

/// Scientific notation with four decimals and a signed two-digit exponent,
/// e.g. `1.8337e-03`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sci).unwrap_or_default()
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.steps,
            format_sci(r.runtime_s),
            format_sci(r.value),
            opt(r.rel_error),
            opt(r.error_order),
            format_sci(r.std_dev),
            r.seed
        );
    }
    out
}

/// One JSON record: the row, the reference it was measured against and the
/// configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    #[serde(flatten)]
    pub row: ResultRow,
    pub reference: Option<f64>,
    pub std_convention: String,
    pub config: RunSpec,
}

pub fn to_json(rows: &[ResultRow], reference: Option<f64>, spec: &RunSpec) -> Result<String> {
    let records: Vec<RowRecord> = rows
        .iter()
        .map(|row| RowRecord {
            row: row.clone(),
            reference,
            std_convention: STD_CONVENTION.into(),
            config: spec.clone(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&records)?;
    s.push('\n');
    Ok(s)
}

pub fn render(rows: &[ResultRow], reference: Option<f64>, spec: &RunSpec, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(to_csv(rows)),
        OutputFormat::Json => to_json(rows, reference, spec),
    }
}

pub fn emit(rows: &[ResultRow], reference: Option<f64>, spec: &RunSpec, format: OutputFormat, path: &Path) -> Result<()> {
    fs::write(path, render(rows, reference, spec, format)?)?;
    Ok(())
}

/// Columns `iteration loss theta_u0`.
pub fn write_loss_curve(path: &Path, trace: &TrainingTrace) -> Result<()> {
    let mut out = String::from("# iteration loss theta_u0\n");
    for (i, (l, y)) in trace.losses.iter().zip(&trace.theta_u0).enumerate() {
        let _ = writeln!(out, "{i} {l:e} {y:e}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Columns `steps rel_error std_dev` for plotting error against N.
pub fn write_error_curve(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut out = String::from("# steps rel_error std_dev\n");
    for r in rows {
        let _ = writeln!(out, "{} {} {}", r.steps, opt(r.rel_error), format_sci(r.std_dev));
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::{mean, sample_std};
    use crate::solver::SolverConfig;

    fn row() -> ResultRow {
        ResultRow {
            steps: 20,
            runtime_s: 72.5,
            value: 5.2899e-2,
            rel_error: Some(1.8337e-3),
            error_order: None,
            std_dev: 1.2e-4,
            seed: 7,
            run_values: vec![0.0528, 0.0529, 0.05297],
            run_runtimes: vec![72.0, 73.0, 72.5],
            run_seeds: vec![7, 8, 9],
        }
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(format_sci(1.8337e-3), "1.8337e-03");
        assert_eq!(format_sci(21.299), "2.1299e+01");
        assert_eq!(format_sci(0.0), "0.0000e+00");
        assert_eq!(format_sci(-3.5e-120), "-3.5000e-120");
    }

    #[test]
    fn empty_rows_give_a_header_only_csv() {
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn missing_order_is_an_empty_cell() {
        let csv = to_csv(&[row()]);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "20,7.2500e+01,5.2899e-02,1.8337e-03,,1.2000e-04,7"
        );
    }

    #[test]
    fn json_round_trip_and_summary_recomputation() {
        let spec = RunSpec::new("allen_cahn", 100, SolverConfig::default());
        let json = to_json(&[row()], Some(0.052802), &spec).unwrap();
        let back: Vec<RowRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].row, row());
        assert_eq!(back[0].config, spec);
        let r = &back[0].row;
        let m = mean(&r.run_values);
        assert_eq!(sample_std(&r.run_values), sample_std(&row().run_values));
        assert!(m.is_finite());
    }
}
