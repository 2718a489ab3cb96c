//! Tabular output as CSV or JSON lines.
//!
//! CSV files start with `#` comment lines carrying `schema_version` and any
//! run metadata, followed by a fixed header. Numbers are written with 17
//! significant digits so that parsing a file gives back the exact values.
//! List-valued cells are `;`-separated in CSV and arrays in JSON.
//! JSON-lines output starts with a `{"meta": {...}}` line.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::config::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Empty,
    Text(String),
    Num(f64),
    Int(u64),
    Nums(Vec<f64>),
    Ints(Vec<u64>),
    Texts(Vec<String>),
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_num(x: f64) -> Value {
    // JSON has no non-finite numbers; keep their text form
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_num(x)), Value::Number)
}

impl Cell {
    pub fn csv(&self) -> String {
        let join = |v: Vec<String>| v.join(";");
        match self {
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Nums(v) => join(v.iter().map(|x| fmt_num(*x)).collect()),
            Cell::Ints(v) => join(v.iter().map(u64::to_string).collect()),
            Cell::Texts(v) => v.join(";"),
        }
    }

    pub fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
            Cell::Num(x) => json_num(*x),
            Cell::Int(i) => json!(i),
            Cell::Nums(v) => Value::Array(v.iter().map(|x| json_num(*x)).collect()),
            Cell::Ints(v) => json!(v),
            Cell::Texts(v) => json!(v),
        }
    }
}

/// A row type with a fixed column set.
pub trait Record: Sized {
    const COLUMNS: &'static [&'static str];

    fn cells(&self) -> Vec<Cell>;

    /// Rebuild from the CSV text of each cell.
    fn from_text(cells: &[&str]) -> Result<Self, String>;
}

/// Text of a JSON cell in the CSV convention, so that JSON rows parse
/// through [`Record::from_text`].
fn json_to_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_u64() {
            Some(i) if !n.is_f64() => i.to_string(),
            _ => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::Array(items) => items.iter().map(json_to_text).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

pub fn write_table<R: Record>(
    out: &mut dyn Write,
    rows: &[R],
    format: Format,
    meta: &[(&str, String)],
) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# schema_version={SCHEMA_VERSION}")?;
            for (k, v) in meta {
                writeln!(out, "# {k}={v}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            w.write_record(R::COLUMNS)?;
            for r in rows {
                w.write_record(r.cells().iter().map(Cell::csv))?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let mut m = Map::new();
            m.insert("schema_version".into(), json!(SCHEMA_VERSION));
            for (k, v) in meta {
                m.insert((*k).into(), json!(v));
            }
            writeln!(out, "{}", json!({ "meta": m }))?;
            for r in rows {
                let obj: Map<String, Value> = R::COLUMNS
                    .iter()
                    .zip(r.cells())
                    .map(|(k, c)| ((*k).to_string(), c.json()))
                    .collect();
                writeln!(out, "{}", Value::Object(obj))?;
            }
            Ok(())
        }
    }
}

pub fn render_table<R: Record>(rows: &[R], format: Format, meta: &[(&str, String)]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_table(&mut buf, rows, format, meta).expect("writing to memory cannot fail");
    buf
}

pub fn parse_csv<R: Record>(text: &str) -> Result<Vec<R>, String> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(R::COLUMNS.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            R::from_text(&rec.iter().collect::<Vec<_>>())
        })
        .collect()
}

pub fn parse_jsonl<R: Record>(text: &str) -> Result<Vec<R>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Value>(l).map_err(|e| e.to_string()))
        .filter(|v| !matches!(v, Ok(Value::Object(m)) if m.contains_key("meta")))
        .map(|v| {
            let v = v?;
            let texts: Vec<String> = R::COLUMNS.iter().map(|k| json_to_text(&v[*k])).collect();
            R::from_text(&texts.iter().map(String::as_str).collect::<Vec<_>>())
        })
        .collect()
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// so that readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn parse_num(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("bad number '{s}'"))
}

pub fn parse_opt_num(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

pub fn parse_opt_int(s: &str) -> Result<Option<u64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad integer '{s}'"))
    }
}

pub fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.is_empty() {
        Ok(Vec::new())
    } else {
        s.split(';').map(f).collect()
    }
}
