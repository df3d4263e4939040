//! Number formatting and file emission. Everything numeric goes out with
//! 12 significant digits so identical runs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal form of `round12(x)`.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round12(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Num(x) => fmt12(*x),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s.replace(',', ";"),
            })
            .collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

pub struct Writer {
    dir: PathBuf,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn put(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        eprintln!("wrote {}", path.display());
        Ok(path)
    }

    pub fn csv(&self, name: &str, csv: &Csv) -> Result<PathBuf, CliError> {
        self.put(name, csv.as_str())
    }

    pub fn json<T: Serialize>(&self, name: &str, payload: &T) -> Result<PathBuf, CliError> {
        let mut v = serde_json::to_value(payload).map_err(|e| CliError::Config(e.to_string()))?;
        round_value(&mut v);
        let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Config(e.to_string()))? + "\n";
        self.put(name, &text)
    }
}

/// File-name fragment for an SNR value.
pub fn snr_tag(snr_db: f64) -> String {
    format!("{}dB", fmt12(snr_db))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(5.316_700_449_321_5), "5.31670044932");
        assert_eq!(fmt12(0.1 + 0.2), "0.3");
        assert_eq!(fmt12(-5.0), "-5");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(1.234_567_890_123_4e-9), "0.00000000123456789012");
    }

    #[test]
    fn csv_rows_end_with_lf() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[Cell::Num(1.5), Cell::Text("x,y".into())]);
        assert_eq!(c.as_str(), "a,b\n1.5,x;y\n");
    }

    #[test]
    fn json_numbers_are_rounded() {
        let mut v = serde_json::json!({"x": [0.1 + 0.2, 2], "y": {"z": 1.0 / 3.0}});
        round_value(&mut v);
        assert_eq!(v.to_string(), r#"{"x":[0.3,2],"y":{"z":0.333333333333}}"#);
    }
}
