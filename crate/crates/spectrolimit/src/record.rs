//! Output records: the flat CSV row and the JSON point record.

use std::io::Write;

use serde::Serialize;
use spectrolimit_core::params::{angular_to_mhz, ModelParams};
use spectrolimit_core::pipeline::{PointResult, Route};
use spectrolimit_core::Error as CoreError;

/// Bumped whenever [`CSV_COLUMNS`] changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 14] = [
    "detuning_mhz",
    "rate_a_mhz",
    "rate_b_mhz",
    "density_per_m3",
    "s_plus_m2",
    "s_minus_m2",
    "sigma_plus_ratio",
    "sigma_minus_ratio",
    "sens_full",
    "sens_intensity",
    "sens_phase",
    "sens_psn",
    "regime",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub detuning_mhz: f64,
    pub rate_a_mhz: f64,
    pub rate_b_mhz: f64,
    pub density_per_m3: f64,
    pub s_plus_m2: f64,
    pub s_minus_m2: f64,
    pub sigma_plus_ratio: f64,
    pub sigma_minus_ratio: f64,
    pub sens_full: f64,
    pub sens_intensity: f64,
    pub sens_phase: f64,
    pub sens_psn: f64,
    pub regime: String,
    pub status: String,
}

impl Row {
    fn inputs(params: &ModelParams) -> Row {
        let m = &params.molecule;
        Row {
            detuning_mhz: angular_to_mhz(m.state_a.detuning),
            rate_a_mhz: angular_to_mhz(m.rate_a),
            rate_b_mhz: angular_to_mhz(m.rate_b),
            density_per_m3: params.sample.density,
            s_plus_m2: f64::NAN,
            s_minus_m2: f64::NAN,
            sigma_plus_ratio: f64::NAN,
            sigma_minus_ratio: f64::NAN,
            sens_full: f64::NAN,
            sens_intensity: f64::NAN,
            sens_phase: f64::NAN,
            sens_psn: f64::NAN,
            regime: String::new(),
            status: String::new(),
        }
    }

    pub fn from_outcome(params: &ModelParams, outcome: &Result<PointResult, CoreError>) -> Row {
        let mut row = Row::inputs(params);
        match outcome {
            Ok(r) => {
                let rep = &r.report;
                row.s_plus_m2 = r.s_plus;
                row.s_minus_m2 = r.s_minus;
                row.sigma_plus_ratio = rep.diagnostics.sigma_plus_ratio;
                row.sigma_minus_ratio = rep.diagnostics.sigma_minus_ratio;
                row.sens_full = rep.rel_full;
                row.sens_intensity = rep.rel_intensity;
                row.sens_phase = rep.rel_phase;
                row.sens_psn = rep.rel_psn;
                row.regime = rep.regime.label().to_string();
                row.status = "ok".to_string();
            }
            Err(e) => row.status = e.kind().to_string(),
        }
        row
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub route: &'static str,
    #[serde(flatten)]
    pub row: Row,
    pub thickness_m: f64,
    pub spectral_gap_mhz: Option<f64>,
    pub fit_residual: f64,
    pub within_adiabatic_gate: bool,
}

impl PointRecord {
    pub fn new(params: &ModelParams, route: Route, result: &PointResult) -> Self {
        PointRecord {
            route: route.label(),
            row: Row::from_outcome(params, &Ok(*result)),
            thickness_m: result.z,
            spectral_gap_mhz: result.spectral_gap.map(angular_to_mhz),
            fit_residual: result.expansion.fit_residual,
            within_adiabatic_gate: result.within_adiabatic_gate,
        }
    }
}

/// (adiabatic − full)/full for each metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeDeviation {
    pub s_plus_m2: f64,
    pub s_minus_m2: f64,
    pub sigma_plus_ratio: f64,
    pub sigma_minus_ratio: f64,
    pub sens_full: f64,
    pub sens_intensity: f64,
    pub sens_phase: f64,
}

impl RelativeDeviation {
    pub fn between(full: &Row, adiabatic: &Row) -> Self {
        let rel = |f: f64, a: f64| (a - f) / f.abs();
        RelativeDeviation {
            s_plus_m2: rel(full.s_plus_m2, adiabatic.s_plus_m2),
            s_minus_m2: rel(full.s_minus_m2, adiabatic.s_minus_m2),
            sigma_plus_ratio: rel(full.sigma_plus_ratio, adiabatic.sigma_plus_ratio),
            sigma_minus_ratio: rel(full.sigma_minus_ratio, adiabatic.sigma_minus_ratio),
            sens_full: rel(full.sens_full, adiabatic.sens_full),
            sens_intensity: rel(full.sens_intensity, adiabatic.sens_intensity),
            sens_phase: rel(full.sens_phase, adiabatic.sens_phase),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub full: PointRecord,
    pub adiabatic: PointRecord,
    pub relative_deviation: RelativeDeviation,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_pinned_schema() {
        let mut buf = Vec::new();
        let row = Row::inputs(&ModelParams::reference());
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(SCHEMA_VERSION, 1);
    }

    #[test]
    fn empty_output_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            CSV_COLUMNS.join(",")
        );
    }

    #[test]
    fn failed_point_has_nan_metrics() {
        let p = ModelParams::reference();
        let row = Row::from_outcome(&p, &Err(CoreError::DegenerateSignal));
        assert_eq!(row.status, "DegenerateSignal");
        assert!(row.sens_full.is_nan() && row.s_plus_m2.is_nan());
        assert!(!row.is_ok());
    }
}
