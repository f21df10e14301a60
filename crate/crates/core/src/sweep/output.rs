use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::run::{Annotation, Cell, SweepResult};
use super::{TOOL, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

fn cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => x.to_string(),
        Cell::Text(s) => (*s).to_string(),
    }
}

fn pairs<I: IntoIterator<Item = String>>(items: I) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(","))
}

fn feature_line(a: &Annotation) -> String {
    match a {
        Annotation::Features { curve, report } => format!(
            "curve={curve} esd_time={} has_revivals={} revivals={} plateaus={}",
            report
                .esd_time
                .map_or_else(|| "none".to_string(), |t| t.to_string()),
            report.has_revivals,
            pairs(report.revival_windows.iter().map(|(s, e)| format!("({s},{e})"))),
            pairs(
                report
                    .plateaus
                    .iter()
                    .map(|p| format!("({},{},{})", p.time, p.level, p.k))
            ),
        ),
        Annotation::Skipped { curve, reason } => format!("curve={curve} skipped={reason}"),
        Annotation::Threshold { report } => format!(
            "g_bar={} bracket=({},{}) horizon_gamma_t={}",
            report.g_bar, report.bracket.0, report.bracket.1, report.horizon_gamma_t
        ),
        Annotation::ThresholdUnavailable { reason } => format!("g_bar=none reason={reason}"),
        Annotation::Validation {
            points,
            within_3,
            max_abs_z,
            passed,
        } => format!("points={points} within_3={within_3} max_abs_z={max_abs_z} passed={passed}"),
    }
}

/// CSV with a version line, the config record, the column header, data rows
/// and trailing `# feature:` lines. Contains nothing time-dependent.
pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {TOOL} v{VERSION}");
    let _ = writeln!(out, "# config: {}", result.config);
    out.push_str(&result.columns.join(","));
    out.push('\n');
    for row in &result.rows {
        out.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    for a in &result.annotations {
        let _ = writeln!(out, "# feature: {}", feature_line(a));
    }
    out
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    tool: &'static str,
    version: &'static str,
    /// Seconds since the Unix epoch.
    timestamp: u64,
    #[serde(flatten)]
    result: &'a SweepResult,
}

pub fn render_json(result: &SweepResult) -> String {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let doc = JsonDocument {
        tool: TOOL,
        version: VERSION,
        timestamp,
        result,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("sweep results serialize");
    s.push('\n');
    s
}
