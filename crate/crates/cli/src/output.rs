//! CSV rendering.

use serde_json::Value;

use freecurves::{Error, Result};

fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                walk(&key, x, rows);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                walk(&format!("{prefix}.{i}"), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// One `key,value` row per leaf, keys as dotted paths.
pub fn flatten_csv(v: &Value) -> Result<String> {
    let mut rows = vec![];
    walk("", v, &mut rows);
    let mut w = csv::Writer::from_writer(vec![]);
    let err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(["key", "value"]).map_err(err)?;
    for (k, x) in rows {
        w.write_record([k, x]).map_err(err)?;
    }
    table_string(w)
}

pub fn table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    let err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    table_string(w)
}

fn table_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(format!("csv: {e}")))
}
