//! Canonical text rendering of result tables and length-capped responses.

use super::exec::ResultTable;

/// Smallest cap accepted by [`render_rows`]; smaller values are raised to it.
pub const MIN_RENDER_CHARS: usize = 64;

fn render_row(columns: &[String], row: &[super::Value]) -> String {
    let mut out = String::from("{");
    for (i, (c, v)) in columns.iter().zip(row).enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&crate::pyrepr::py_str(c));
        out.push_str(": ");
        v.render(&mut out);
    }
    out.push('}');
    out
}

fn rows_marker(omitted: usize) -> String {
    format!(" …(truncated, {omitted} rows omitted)")
}

/// Renders rows as a list of per-row maps, e.g. `[{'a': 1}]`. When the text
/// would exceed `max_chars` characters, keeps the longest prefix of whole
/// rows that fits together with a truncation marker.
pub fn render_rows(table: &ResultTable, max_chars: usize) -> String {
    let max_chars = max_chars.max(MIN_RENDER_CHARS);
    let rendered: Vec<String> = table
        .rows
        .iter()
        .map(|r| render_row(&table.columns, r))
        .collect();
    let lens: Vec<usize> = rendered.iter().map(|r| r.chars().count()).collect();
    let total = 2 + lens.iter().sum::<usize>() + 2 * lens.len().saturating_sub(1);
    if total <= max_chars {
        return format!("[{}]", rendered.join(", "));
    }
    let n = rendered.len();
    let mut kept = 0;
    let mut body = 2;
    for (i, len) in lens.iter().enumerate() {
        let next = body + len + if i > 0 { 2 } else { 0 };
        if next + rows_marker(n - i - 1).chars().count() > max_chars {
            break;
        }
        body = next;
        kept = i + 1;
    }
    format!("[{}]{}", rendered[..kept].join(", "), rows_marker(n - kept))
}

/// Caps free text at `max_chars` characters, appending a marker that counts
/// the omitted characters. The result never exceeds the cap.
pub fn truncate_text(text: &str, max_chars: usize) -> String {
    let len = text.chars().count();
    if len <= max_chars {
        return text.to_string();
    }
    // The marker width depends on the omitted count, so settle it iteratively.
    let mut keep = max_chars;
    loop {
        let marker = format!(" …(truncated, {} chars omitted)", len - keep);
        let marker_len = marker.chars().count();
        if keep + marker_len <= max_chars || keep == 0 {
            let head: String = text.chars().take(keep).collect();
            return format!("{head}{marker}");
        }
        keep = max_chars.saturating_sub(marker_len).min(keep - 1);
    }
}
