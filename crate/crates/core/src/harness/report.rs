use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::{MinimumSet, Regime};

pub const CSV_HEADER: [&str; 7] = [
    "n", "beta_n", "kappa_n", "m_thermo", "e_finite", "scaled_m", "scaled_e",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: u64,
    pub beta_n: f64,
    pub kappa_n: f64,
    pub m_thermo: f64,
    /// `E|S_n/n|`; absent in thermodynamic-only reports.
    pub e_finite: Option<f64>,
    /// `n^{θα} m`.
    pub scaled_m: f64,
    /// `n^{θα} E` below the threshold, `n^{θα₀} E` at or above it.
    pub scaled_e: Option<f64>,
    /// Standard error of `e_finite` for Monte Carlo rows.
    pub e_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConstants {
    pub sequence: &'static str,
    pub alpha: String,
    pub alpha0: f64,
    pub theta: f64,
    pub regime: Regime,
    pub x_bar: f64,
    pub minimum_set: MinimumSet,
    pub y_bar: Option<f64>,
    pub z_bar: Option<f64>,
    /// The constant `scaled_e` (or `scaled_m`) is expected to approach.
    pub target: Option<f64>,
    /// Aitken extrapolation of the last three scaled values.
    pub extrapolated: Option<f64>,
    pub banner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub rows: Vec<ReportRow>,
    pub constants: ReportConstants,
}

/// 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Resource {
        op: "write_csv",
        msg: e.to_string(),
    }
}

impl AsymptoticsReport {
    /// CSV with header `n,beta_n,kappa_n,m_thermo,e_finite,scaled_m,scaled_e`;
    /// missing values are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_f64(r.beta_n),
                fmt_f64(r.kappa_n),
                fmt_f64(r.m_thermo),
                opt(r.e_finite),
                fmt_f64(r.scaled_m),
                opt(r.scaled_e),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(csv_err)
    }

    /// Pretty-printed JSON of the constants block.
    pub fn constants_json(&self) -> String {
        serde_json::to_string_pretty(&self.constants).expect("constants serialize") + "\n"
    }
}
