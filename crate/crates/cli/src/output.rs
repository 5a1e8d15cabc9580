//! Writers for the frozen output formats (see `docs/formats.md`).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use meanfield::branch_tracer::{BranchRow, RootKind};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip every `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    schema_version: u32,
    params: &'a Value,
    results: &'a [R],
    diagnostics: &'a Value,
}

pub fn json<R: Serialize>(params: &Value, results: &[R], diagnostics: &Value) -> Result<Vec<u8>, CliError> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        params,
        results,
        diagnostics,
    };
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// Standalone scatter of `(λ, s_root)`, one `<circle>` per row.
pub fn svg_scatter(rows: &[BranchRow], lambda_range: (f64, f64)) -> String {
    let (l0, l1) = lambda_range;
    let (mut s0, mut s1) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.s_root), hi.max(r.s_root)));
    if !(s0 < s1) {
        let c = if s0.is_finite() { s0 } else { 0.0 };
        (s0, s1) = (c - 1.0, c + 1.0);
    }
    let pad = 0.05 * (s1 - s0);
    let (s0, s1) = (s0 - pad, s1 + pad);
    let x = |l: f64| MARGIN + (l - l0) / (l1 - l0) * (WIDTH - 2.0 * MARGIN);
    let y = |s: f64| HEIGHT - MARGIN - (s - s0) / (s1 - s0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        "<style>.trivial{{fill:#1f77b4}}.nonzero{{fill:#d62728}}text{{font:12px sans-serif}}</style>"
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (xa, xb, yb, ya) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{xa} {ya} L{xa} {yb} L{xb} {yb}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">lambda in ({l0}, {l1}]</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">s_root in [{s0:.3}, {s1:.3}]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for r in rows {
        let class = match r.kind {
            RootKind::Trivial => "trivial",
            RootKind::Nonzero => "nonzero",
        };
        let _ = writeln!(
            svg,
            r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="3"><title>lambda={} s={}</title></circle>"#,
            x(r.lambda),
            y(r.s_root),
            r.lambda,
            r.s_root
        );
    }
    svg.push_str("</svg>\n");
    svg
}
