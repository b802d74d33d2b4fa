//! Report emission: CSV or JSON to a file or stdout, plus an optional
//! plot-data export of (x, y) pairs grouped by record family.

use std::io::Write;
use std::path::Path;

use nllab_core::ExperimentReport;

use crate::config::Format;

/// Serializes the report in the chosen format. CSV is the fixed-column
/// schema from the report module; JSON mirrors it.
pub fn render(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            // The report contains no maps and no non-string keys, so
            // serialization cannot fail.
            let mut out = report.to_json().expect("report serializes");
            if !out.ends_with('\n') {
                out.push('\n');
            }
            out
        }
    }
}

/// Writes rendered output to the path, or to stdout when no path is given.
pub fn write_out(content: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(p, content.as_bytes())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())
        }
    }
}

/// Plot-data export: records are grouped by the prefix of their input
/// descriptor (everything before `=`), and each group becomes a block of
/// `x,y` lines, where `x` is the numeric suffix when it parses as a number
/// (its index in the group otherwise) and `y` is the measured value.
pub fn plot_data(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let mut groups: Vec<(&str, Vec<(String, f64)>)> = Vec::new();
    for record in &report.records {
        let (prefix, suffix) = match record.input.split_once('=') {
            Some((p, s)) => (p, s),
            None => (record.input.as_str(), ""),
        };
        let entry = match groups.iter_mut().find(|(name, _)| *name == prefix) {
            Some((_, rows)) => rows,
            None => {
                groups.push((prefix, Vec::new()));
                &mut groups.last_mut().expect("just pushed").1
            }
        };
        entry.push((suffix.to_string(), record.measured));
    }
    for (name, rows) in groups {
        out.push_str(&format!("# {name}\n"));
        for (index, (suffix, measured)) in rows.iter().enumerate() {
            let x = match suffix.parse::<f64>() {
                Ok(v) => format!("{v:.16e}"),
                Err(_) => format!("{index}"),
            };
            out.push_str(&format!("{x},{measured:.16e}\n"));
        }
    }
    out
}
