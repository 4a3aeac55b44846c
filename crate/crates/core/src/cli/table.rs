//! Rows-of-records text and JSON documents for command output.
//!
//! Records form, one block per table:
//!
//! ```text
//! # table profile
//! # i lambda psi lattice
//! -2 2.5000000000000000e-1 1.3364032364175358e-2 true
//! ```
//!
//! Other `#` lines are notes. Floats always carry an exponent and 17
//! significant digits, so they read back to the same `f64`.

use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(BigInt),
    Float(f64),
    Bool(bool),
    /// No whitespace.
    Text(String),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        let s = s.into();
        debug_assert!(!s.is_empty() && !s.contains(char::is_whitespace));
        Cell::Text(s)
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn parse(token: &str) -> Cell {
        if let Ok(v) = token.parse::<BigInt>() {
            return Cell::Int(v);
        }
        match token {
            "true" => return Cell::Bool(true),
            "false" => return Cell::Bool(false),
            _ => {}
        }
        let looks_float = token.contains(['e', 'E']) || matches!(token, "inf" | "-inf" | "NaN");
        match token.parse::<f64>() {
            Ok(v) if looks_float => Cell::Float(v),
            _ => Cell::Text(token.to_string()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => match i64::try_from(v) {
                Ok(small) => json!(small),
                Err(_) => json!(v.to_string()),
            },
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&num_bigint::BigUint> for Cell {
    fn from(v: &num_bigint::BigUint) -> Self {
        Cell::Int(BigInt::from(v.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    /// Cell by column name in row `row`.
    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|n| n == column)?;
        self.rows.get(row)?.get(c)
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let record: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect();
                    Value::Object(record)
                })
                .collect(),
        )
    }
}

/// Everything a command prints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    pub command: String,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
}

impl Output {
    pub fn new(command: &str) -> Self {
        Output {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_records(&self) -> String {
        let mut out = format!("# dyadic {}\n", self.command);
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        for t in &self.tables {
            out.push_str(&format!("# table {}\n# {}\n", t.name, t.columns.join(" ")));
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Cell::render).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse_records(text: &str) -> Result<Output> {
        let mut out = Output::default();
        let mut expect_header = false;
        for (n, line) in text.lines().enumerate() {
            let err = |message: String| Error::ParseLine { line: n + 1, message };
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.strip_prefix(' ').unwrap_or(comment);
                if expect_header {
                    let table = out.tables.last_mut().expect("header follows a table line");
                    table.columns = comment.split_whitespace().map(str::to_string).collect();
                    expect_header = false;
                } else if let Some(name) = comment.strip_prefix("table ") {
                    out.tables.push(Table::new(name.trim(), &[]));
                    expect_header = true;
                } else if n == 0 {
                    out.command = comment.strip_prefix("dyadic ").unwrap_or(comment).to_string();
                } else {
                    out.notes.push(comment.to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let table = out
                .tables
                .last_mut()
                .ok_or_else(|| err("row before any table".into()))?;
            let row: Vec<Cell> = line.split_whitespace().map(Cell::parse).collect();
            if row.len() != table.columns.len() {
                return Err(err(format!(
                    "expected {} fields, found {}",
                    table.columns.len(),
                    row.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        let doc = json!({
            "command": self.command,
            "notes": self.notes,
            "tables": tables,
        });
        serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Output {
        let mut t = Table::new("profile", &["i", "lambda", "psi", "lattice", "label"]);
        t.push(vec![
            (-3i64).into(),
            0.125.into(),
            (1.0f64 / 3.0).into(),
            true.into(),
            Cell::text("a/2^3"),
        ]);
        t.push(vec![
            Cell::Int("123456789012345678901234567890".parse().unwrap()),
            f64::MIN_POSITIVE.into(),
            (-0.0f64).into(),
            false.into(),
            Cell::text("whole_space"),
        ]);
        let mut u = Table::new("limits", &["psi_infinity"]);
        u.push(vec![std::f64::consts::PI.into()]);
        Output {
            command: "profile".into(),
            notes: vec!["s = 0.5".into()],
            tables: vec![t, u],
        }
    }

    #[test]
    fn records_round_trip() {
        let out = sample();
        let text = out.to_records();
        assert_eq!(Output::parse_records(&text).unwrap(), out);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(Cell::Float(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(1.0).render(), "1.0000000000000000e0");
    }

    #[test]
    fn json_is_keyed_by_column() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["tables"]["profile"][0]["i"], json!(-3));
        assert_eq!(v["tables"]["profile"][1]["i"], json!("123456789012345678901234567890"));
        assert_eq!(v["tables"]["limits"][0]["psi_infinity"], json!(std::f64::consts::PI));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = "# dyadic x\n# table a\n# p q\n1 2\n3\n";
        assert!(matches!(
            Output::parse_records(text),
            Err(Error::ParseLine { line: 5, .. })
        ));
    }
}
