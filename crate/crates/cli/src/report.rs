//! Plain-text tables and report documents.

use serde::Serialize;

/// Marker line that precedes the machine-readable block of a report.
pub const JSON_MARKER: &str = "[json]";

/// Left-aligned columns separated by two spaces, with a rule under the header.
pub fn aligned_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(headers.to_vec());
    out.push_str(&line(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// Human-readable text followed by a pretty JSON block.
pub fn document<T: Serialize>(text: &str, data: &T) -> String {
    let json = serde_json::to_string_pretty(data).expect("report data serializes");
    format!("{text}\n{JSON_MARKER}\n{json}\n")
}

/// Extracts the JSON block of a report document.
pub fn json_block(report: &str) -> Option<serde_json::Value> {
    let start = report.find(&format!("\n{JSON_MARKER}\n"))? + JSON_MARKER.len() + 2;
    serde_json::from_str(&report[start..]).ok()
}

pub fn fmt_metric(v: f64) -> String {
    format!("{v:.4}")
}
