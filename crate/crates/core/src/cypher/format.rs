use super::ResultTable;
use crate::graph::AttrValue;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn cell(v: &AttrValue) -> String {
    match v {
        AttrValue::Text(s) => quote(s),
        AttrValue::Absent => "''".to_string(),
        other => other.to_string(),
    }
}

/// Render rows as a list of keyed maps, e.g.
/// `[{'n.name': 'Bi', 'n.matID': 'MAT00028196'}]`, keeping at most `max_rows`.
pub fn format_results(t: &ResultTable, max_rows: usize) -> String {
    let shown: Vec<String> = t
        .rows
        .iter()
        .take(max_rows)
        .map(|row| {
            let fields: Vec<String> = t
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| format!("{}: {}", quote(c), cell(v)))
                .collect();
            format!("{{{}}}", fields.join(", "))
        })
        .collect();
    let mut out = format!("[{}]", shown.join(", "));
    if t.rows.len() > max_rows {
        out.push_str(&format!(" (+{} more rows)", t.rows.len() - max_rows));
    }
    out
}
