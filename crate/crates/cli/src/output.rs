//! Deterministic rendering. Floats carry 15 significant digits, CSV fields
//! get RFC-4180 quoting when they need it, and JSON objects keep sorted
//! keys, so identical runs produce identical bytes.

use std::fmt::Write as _;

pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.14e}")
}

pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV document with `#`-prefixed metadata lines above an ordinary header
/// record.
pub struct Table {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn row(&mut self, fields: Vec<String>) {
        assert_eq!(fields.len(), self.columns.len(), "row width mismatch");
        self.rows.push(fields);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        let join =
            |fields: &[String]| fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
        writeln!(out, "{}", join(&self.columns)).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", join(row)).unwrap();
        }
        out
    }
}

pub fn render_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON rendering cannot fail");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_15_digits() {
        assert_eq!(fmt_f(std::f64::consts::PI), "3.14159265358979e0");
        assert_eq!(fmt_f(-1e-10), "-1.00000000000000e-10");
        assert_eq!(fmt_f(0.0), "0.00000000000000e0");
    }

    #[test]
    fn quoting_is_rfc_4180_style() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn table_renders_meta_then_header_then_rows() {
        let mut t = Table::new(vec!["x", "y"]);
        t.meta("tool", "demo 0.0.0");
        t.row(vec!["1".into(), "2".into()]);
        assert_eq!(t.render(), "# tool: demo 0.0.0\nx,y\n1,2\n");
    }
}
