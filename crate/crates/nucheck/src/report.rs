//! Structured check reports: every verified inequality is emitted as a
//! {name, anchor, lhs, rhs, margin, slack, tolerance, pass} object, grouped
//! into per-command JSON documents with a schema version. Serialization is
//! deterministic (fixed field order, no unordered maps), so identical runs
//! produce byte-identical files.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::scenario::Scenario;

pub const SCHEMA_VERSION: u32 = 1;

/// One verified inequality. `pass` means margin ≥ −tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Stable identifier of the claim the check instantiates.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Quantified methodological slack (truncation leakage etc.); informative.
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        anchor: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let margin = rhs - lhs;
        Check {
            name: name.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            margin,
            slack: 0.0,
            tolerance,
            pass: margin >= -tolerance,
        }
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }
}

/// A command report: scenario echo plus the checks and free-form data payload.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
    pub scenario: Scenario,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        scenario: &Scenario,
        seed: u64,
        checks: Vec<Check>,
        data: serde_json::Value,
    ) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            seed,
            pass,
            checks,
            data,
            scenario: scenario.clone(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// One row of a correlation-scan CSV: (x0, x1, …, xs, re, im, modulus, bound, margin).
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub x: Vec<f64>,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Writes scan rows with the fixed header `x0,…,x{s},re,im,modulus,bound,margin`.
pub fn write_scan_csv(path: &Path, s: usize, rows: &[ScanRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = String::new();
    for a in 0..=s {
        out.push_str(&format!("x{a},"));
    }
    out.push_str("re,im,modulus,bound,margin\n");
    for row in rows {
        for c in &row.x {
            out.push_str(&format!("{c:.17e},"));
        }
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            row.re, row.im, row.modulus, row.bound, row.margin
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Kernel-sweep CSV: radius, computed norm, bound, margin.
pub fn write_kernel_csv(
    path: &Path,
    rows: &[crate::correlations::KernelBound],
) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = String::from("radius,computed,bound,margin\n");
    for row in rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            row.x_radius, row.computed, row.bound, row.margin
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
