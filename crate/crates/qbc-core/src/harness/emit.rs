use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use super::SweepResult;
use crate::adversary::{AdamSuccess, Method};
use crate::error::{Error, Result};
use crate::numfmt::format_g;

pub const CSV_HEADER: [&str; 20] = [
    "protocol",
    "n",
    "n0",
    "m",
    "epsilon1",
    "theta",
    "mCheck",
    "Nc",
    "pBc",
    "pAc_lower",
    "pAc_upper",
    "F",
    "Fprime",
    "method",
    "trials",
    "stderr",
    "acceptRate",
    "oracleAcceptRate",
    "zScore",
    "skipped",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// From a path's extension.
    pub fn infer(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

fn real(x: f64) -> String {
    format_g(x, 17)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Spec(format!("csv: {other:?}")),
    }
}

pub fn to_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in &result.rows {
        let p = &row.parameters;
        let mut rec: Vec<String> = vec![
            serde_json::to_value(p.protocol)?.as_str().unwrap_or_default().to_string(),
            p.n.to_string(),
            p.n0.to_string(),
            p.m.to_string(),
            real(p.epsilon1.0),
            real(p.theta.0),
            p.m_check.to_string(),
            p.nc.to_string(),
        ];
        match &row.report {
            Some(r) => {
                let (lo, hi) = match &r.p_ac {
                    AdamSuccess::Value(v) => (v.0, v.0),
                    AdamSuccess::Interval { lower, upper } => (lower.0, upper.0),
                };
                rec.extend([real(r.p_bc.0), real(lo), real(hi), real(r.fidelity_f.0)]);
                rec.push(r.fidelity_fprime.map_or_else(String::new, |f| real(f.0)));
                match &r.method {
                    Method::Exact => rec.extend(["Exact".into(), String::new(), String::new()]),
                    Method::MonteCarlo { trials, stderr } => {
                        rec.extend(["MonteCarlo".into(), trials.to_string(), real(stderr.0)])
                    }
                }
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 8)),
        }
        match &row.simulation {
            Some(s) => {
                rec.push(real(s.accept_rate.0));
                rec.push(s.oracle_accept_rate.map_or_else(String::new, |x| real(x.0)));
                rec.push(s.z_score.map_or_else(String::new, |x| real(x.0)));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 3)),
        }
        rec.push(row.skipped.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    Ok(text)
}

/// Writes `result` to `path`, creating parent directories.
pub fn emit_report(result: &SweepResult, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(result)?,
        Format::Json => to_json(result)?,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}
