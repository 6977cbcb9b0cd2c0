//! Output formats: JSON with 17 significant digits, CSV tables, two-column
//! plot data, atomic file replacement.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Embedded in every JSON document the tools emit.
pub const SCHEMA_VERSION: &str = "fbmlab-output/1";

/// Formats a double with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>, depth: usize) {
    let newline = |out: &mut String, d: usize| {
        if let Some(w) = indent {
            out.push('\n');
            out.extend(std::iter::repeat_n(' ', w * d));
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_value(out, item, indent, depth + 1);
            }
            newline(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, item, indent, depth + 1);
            }
            newline(out, depth);
            out.push('}');
        }
    }
}

/// Single-line JSON with keys in sorted order.
pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, None, 0);
    Ok(out)
}

/// Indented JSON with keys in sorted order.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, Some(2), 0);
    out.push('\n');
    Ok(out)
}

/// Wraps a payload as `{"schema_version": ..., "kind": ..., "data": ...}`.
pub fn envelope<T: Serialize>(kind: &str, data: &T) -> Result<Value> {
    Ok(serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "data": serde_json::to_value(data)?,
    }))
}

/// Replaces `path` by writing a sibling temporary file and renaming it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Comma-separated table with a header row; floats use 17 digits.
pub fn csv_table(headers: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = headers.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| if x.is_finite() { fmt_f64(x) } else { "nan".into() }).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Whitespace-separated two-column data with a `#` comment header.
pub fn plot_data(comment: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("# {comment}\n");
    for &(x, y) in points {
        writeln!(out, "{} {}", fmt_f64(x), fmt_f64(y)).unwrap();
    }
    out
}
