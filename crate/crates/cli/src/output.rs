//! CSV and JSON-lines tables.
//!
//! Every row starts with `config_hash`, `seed`, `core_version` and
//! `cli_version`, followed by the fields of the record in declaration
//! order. Floats use the shortest representation that round-trips, `None`
//! becomes an empty CSV cell (`null` in JSON).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

pub struct Sink {
    dir: PathBuf,
    config_hash: String,
    seed: u64,
}

impl Sink {
    pub fn new(dir: &Path, config_hash: String, seed: u64) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            config_hash,
            seed,
        })
    }

    fn row<T: Serialize>(&self, record: &T) -> Map<String, Value> {
        let mut row = Map::new();
        row.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        row.insert("seed".into(), Value::from(self.seed));
        row.insert("core_version".into(), Value::String(rwrp_core::VERSION.into()));
        row.insert("cli_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        match serde_json::to_value(record).expect("records serialize") {
            Value::Object(fields) => row.extend(fields),
            other => panic!("record is not a struct: {other}"),
        }
        row
    }

    /// Writes `<name>.csv` and `<name>.jsonl` and returns the CSV path.
    pub fn write<T: Serialize>(&self, name: &str, records: &[T]) -> std::io::Result<PathBuf> {
        let rows: Vec<Map<String, Value>> = records.iter().map(|r| self.row(r)).collect();
        let csv_path = self.dir.join(format!("{name}.csv"));
        let mut csv = csv::Writer::from_path(&csv_path)?;
        if let Some(first) = rows.first() {
            csv.write_record(first.keys())?;
        }
        for row in &rows {
            csv.write_record(row.values().map(cell))?;
        }
        csv.flush()?;

        let mut jsonl = BufWriter::new(fs::File::create(self.dir.join(format!("{name}.jsonl")))?);
        for row in &rows {
            serde_json::to_writer(&mut jsonl, row)?;
            jsonl.write_all(b"\n")?;
        }
        jsonl.flush()?;
        Ok(csv_path)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Rec {
        n: i64,
        x: f64,
        label: &'static str,
        fit: Option<f64>,
    }

    #[test]
    fn rows_carry_provenance_and_fields_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let sink = Sink::new(dir.path(), "abc".into(), 9).unwrap();
        let path = sink
            .write(
                "t",
                &[
                    Rec {
                        n: 1,
                        x: 0.1,
                        label: "a,b",
                        fit: None,
                    },
                    Rec {
                        n: 2,
                        x: 1e-300,
                        label: "c",
                        fit: Some(2.5),
                    },
                ],
            )
            .unwrap();
        let text = fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "config_hash,seed,core_version,cli_version,n,x,label,fit");
        assert!(lines[1].ends_with(",1,0.1,\"a,b\","));
        assert!(lines[2].ends_with(",2,1e-300,c,2.5"));
        let json = fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
        let first: Value = serde_json::from_str(json.lines().next().unwrap()).unwrap();
        assert_eq!(first["seed"], 9);
        assert_eq!(first["fit"], Value::Null);
    }
}
