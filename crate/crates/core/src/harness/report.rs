//! CSV reports and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::geometry::EarthConstants;
use crate::metrics::MetricsReport;

pub const CSV_HEADER: &str =
    "scheme,n,scenario,trials,pairs,disconnected_fraction,sr,ods_p50,ods_p95,uds_p50,uds_p95,seed";

/// `x` rounded to 6 significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let exponent: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        let rounded: f64 = sci.parse().expect("round-trips");
        format!("{rounded:.decimals$}")
    } else {
        sci
    }
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_else(|| "NA".into())
}

pub fn csv_row(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.scheme,
        r.n,
        r.scenario,
        r.trials,
        r.pair_count,
        format_sig6(r.disconnected_fraction),
        format_sig6(r.sr),
        optional(r.ods_p50),
        optional(r.ods_p95),
        optional(r.uds_p50),
        optional(r.uds_p95),
        r.seed
    )
}

pub fn write_csv<W: Write>(reports: &[MetricsReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(out, "{}", csv_row(r))?;
    }
    out.flush()
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub constants: EarthConstants,
    pub constants_overridden: bool,
    pub percentile_method: &'static str,
    pub sr_denominator: &'static str,
    pub complete: bool,
}

impl<'a> RunManifest<'a> {
    pub fn new(config: &'a ExperimentConfig, complete: bool) -> Self {
        let constants = config.constants();
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            constants,
            constants_overridden: !constants.is_standard(),
            percentile_method: "nearest-rank; aggregated scenarios pool per-pair values",
            sr_denominator: "connected pairs; disconnected pairs reported separately",
            complete,
        }
    }
}

/// `report.csv` → `report.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Writes the CSV report and its manifest next to it. `complete` is false
/// when the run aborted and `reports` holds partial results.
pub fn emit_report(
    reports: &[MetricsReport],
    config: &ExperimentConfig,
    complete: bool,
    path: &Path,
) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(reports, std::io::BufWriter::new(file)).map_err(|e| HarnessError::io(path, e))?;
    let manifest_path = manifest_path(path);
    let json = serde_json::to_string_pretty(&RunManifest::new(config, complete))
        .expect("manifest serializes");
    std::fs::write(&manifest_path, json + "\n").map_err(|e| HarnessError::io(&manifest_path, e))
}
