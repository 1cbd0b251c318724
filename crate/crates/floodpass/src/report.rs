//! JSON rendering of evaluation reports.

use floodpass_core::EvalReport;

/// Pretty JSON with a trailing newline. Field order is fixed and maps are
/// sorted, so equal reports render to equal bytes.
pub fn to_json(r: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> serde_json::Result<EvalReport> {
    serde_json::from_str(text)
}
