//! Comma-separated tables of floats written with 17 significant digits, so
//! every value parses back to the same `f64`.

use std::fmt::Write;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{}", format_float(*v)).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`write_table`]: the header and the numeric rows.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty table")?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let row = l
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != header.len() {
                return Err(format!("row {} has {} fields, expected {}", i + 1, row.len(), header.len()));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}
