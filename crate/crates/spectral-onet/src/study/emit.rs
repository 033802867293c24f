//! Report emission: CSV rows, JSON mirror, and static SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{StudyError, StudyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(format!("unknown format '{other}' (csv|json|svg)")),
        }
    }
}

/// Write the report in the requested format; returns the file written.
pub fn emit_report(
    report: &StudyReport,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<PathBuf, StudyError> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!(
        "{}.{}",
        report.kind,
        match format {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Svg => "svg",
        }
    ));
    let text = match format {
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).map_err(|e| StudyError::StudyFailed(e.to_string()))?
        }
        ReportFormat::Svg => to_svg(report),
    };
    fs::write(&path, text)?;
    Ok(path)
}

pub fn to_csv(report: &StudyReport) -> String {
    let mut out = report.columns.join(",");
    out.push('\n');
    for row in &report.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// One polyline per data column, plotted against the first column. Columns
/// whose values are all positive get a log ordinate.
pub fn to_svg(report: &StudyReport) -> String {
    let (w, h, ml, mb) = (640.0, 480.0, 60.0, 40.0);
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = write!(
        svg,
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/><text x=\"10\" y=\"20\" font-size=\"14\">{}</text>",
        report.kind
    );
    if report.rows.is_empty() || report.columns.len() < 2 {
        svg.push_str("</svg>");
        return svg;
    }
    let xs: Vec<f64> = report.rows.iter().map(|r| r[0]).collect();
    let (x_lo, x_hi) = bounds(&xs);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];
    for (series, name) in report.columns.iter().enumerate().skip(1) {
        let ys: Vec<f64> = report.rows.iter().map(|r| r[series]).collect();
        let log = ys.iter().all(|v| *v > 0.0);
        let t: Vec<f64> = if log {
            ys.iter().map(|v| v.log10()).collect()
        } else {
            ys.clone()
        };
        let (y_lo, y_hi) = bounds(&t);
        let mut points = String::new();
        for (x, y) in xs.iter().zip(&t) {
            let px = ml + (w - ml - 20.0) * (x - x_lo) / (x_hi - x_lo).max(1e-12);
            let py = (h - mb) - (h - mb - 40.0) * (y - y_lo) / (y_hi - y_lo).max(1e-12);
            let _ = write!(points, "{px:.2},{py:.2} ");
        }
        let color = colors[(series - 1) % colors.len()];
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.trim_end()
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            w - 150.0,
            30.0 + 14.0 * series as f64
        );
    }
    let _ = write!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - 20.0,
        h - mb
    );
    let _ = write!(
        svg,
        "<line x1=\"{ml}\" y1=\"40\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );
    svg.push_str("</svg>");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::Fit;

    fn sample_report() -> StudyReport {
        let mut r = StudyReport::new("demo", 42, &["p", "h1_error"]);
        r.rows.push(vec![3.0, 0.5]);
        r.rows.push(vec![4.0, 0.1]);
        r.fits.push(Fit {
            name: "slope".into(),
            value: -1.6,
        });
        r
    }

    #[test]
    fn empty_report_yields_header_only_csv() {
        let r = StudyReport::new("empty", 0, &["a", "b"]);
        assert_eq!(to_csv(&r), "a,b\n");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample_report();
        let text = serde_json::to_string(&r).unwrap();
        let back: StudyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let r = sample_report();
        let svg = to_svg(&r);
        assert_eq!(svg.matches("<polyline").count(), 1);
        let mut wide = r.clone();
        wide.columns.push("size".into());
        for (i, row) in wide.rows.iter_mut().enumerate() {
            row.push(10.0 + i as f64);
        }
        assert_eq!(to_svg(&wide).matches("<polyline").count(), 2);
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample_report();
        for fmt in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg] {
            let path = emit_report(&r, fmt, dir.path()).unwrap();
            assert!(path.exists());
        }
    }
}
