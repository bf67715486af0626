//! CSV datasets with an optional JSON sidecar describing each column.
//!
//! ```json
//! { "columns": { "X1": { "role": "angle" },
//!                "X2": { "role": "feature", "dimension": [0, 0, 0, 0, 0] },
//!                "Y":  { "role": "output" } } }
//! ```
//!
//! Without a sidecar every dimension is unknown and the output is the
//! column named `Y`, or the last column when there is none.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Column, DataError, Dataset, Dimension, Role};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnMeta {
    #[serde(default)]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Dimension>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub columns: BTreeMap<String, ColumnMeta>,
}

impl Metadata {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut columns = BTreeMap::new();
        for c in ds.features() {
            columns.insert(c.name.clone(), ColumnMeta { role: c.role, dimension: c.dimension });
        }
        let out = ds.output();
        columns.insert(out.name.clone(), ColumnMeta { role: Role::Output, dimension: out.dimension });
        Metadata { columns }
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        let file = File::open(path).map_err(|e| DataError::io(path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| DataError::Metadata(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| DataError::Metadata(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| DataError::io(path, e))
    }
}

pub fn read_csv_from<R: Read>(reader: R, meta: Option<&Metadata>) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < 2 {
        return Err(DataError::Csv("need at least one feature and one output column".into()));
    }
    let mut values = vec![Vec::new(); header.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(DataError::Csv(format!("row {} has {} fields, expected {}", row + 1, rec.len(), header.len())));
        }
        for (col, field) in rec.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| DataError::Parse {
                column: header[col].clone(),
                row,
                text: field.to_owned(),
            })?;
            values[col].push(x);
        }
    }

    if let Some(meta) = meta {
        if let Some(unknown) = meta.columns.keys().find(|k| !header.contains(k)) {
            return Err(DataError::MissingColumn(unknown.clone()));
        }
    }
    let meta_of = |name: &str| meta.and_then(|m| m.columns.get(name));
    let output_idx = header
        .iter()
        .position(|h| meta_of(h).is_some_and(|m| m.role == Role::Output))
        .or_else(|| header.iter().position(|h| h == "Y"))
        .unwrap_or(header.len() - 1);

    let mut features = Vec::new();
    let mut output = None;
    for (i, (name, vals)) in header.into_iter().zip(values).enumerate() {
        let m = meta_of(&name).cloned().unwrap_or_default();
        let mut col = Column::new(name, vals);
        col.dimension = m.dimension;
        col.role = m.role;
        if col.role == Role::Angle && col.dimension.is_none() {
            col.dimension = Some(Dimension::angle());
        }
        if i == output_idx {
            col.role = Role::Output;
            output = Some(col);
        } else {
            if col.role == Role::Output {
                col.role = Role::Feature;
            }
            features.push(col);
        }
    }
    Dataset::new(features, output.expect("output index is in range"))
}

pub fn read_csv(path: &Path, meta_path: Option<&Path>) -> Result<Dataset, DataError> {
    let meta = meta_path.map(Metadata::read).transpose()?;
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    read_csv_from(BufReader::new(file), meta.as_ref())
}

pub fn write_csv_to<W: Write>(writer: W, ds: &Dataset) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    let cols: Vec<&Column> = ds.features().iter().chain(std::iter::once(ds.output())).collect();
    w.write_record(cols.iter().map(|c| c.name.as_str())).map_err(csv_err)?;
    for row in 0..ds.n_rows() {
        // `{}` on f64 is the shortest representation that round-trips.
        w.write_record(cols.iter().map(|c| c.values[row].to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

pub fn write_csv(path: &Path, ds: &Dataset) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    write_csv_to(BufWriter::new(file), ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = Dataset::from_columns(
            vec![vec![0.1, 1.0 / 3.0, 2e-7], vec![1e300, -5.5, 0.0]],
            vec![std::f64::consts::PI, 2.0, -1.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &ds).unwrap();
        let back = read_csv_from(buf.as_slice(), None).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn output_column_selection() {
        let text = "a,Y,b\n1,2,3\n4,5,6\n";
        let ds = read_csv_from(text.as_bytes(), None).unwrap();
        assert_eq!(ds.output().name, "Y");
        assert_eq!(ds.features().iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["a", "b"]);

        let text = "a,b,c\n1,2,3\n4,5,6\n";
        let ds = read_csv_from(text.as_bytes(), None).unwrap();
        assert_eq!(ds.output().name, "c");

        let meta: Metadata = serde_json::from_str(
            r#"{"columns":{"a":{"role":"output"},"b":{"role":"angle"},"c":{"dimension":[1,0,0,0,0]}}}"#,
        )
        .unwrap();
        let ds = read_csv_from(text.as_bytes(), Some(&meta)).unwrap();
        assert_eq!(ds.output().name, "a");
        assert_eq!(ds.feature(0).dimension, Some(Dimension::angle()));
        assert_eq!(ds.feature(0).role, Role::Angle);
        assert_eq!(ds.feature(1).dimension, Some(Dimension::length()));
    }

    #[test]
    fn bad_fields_are_reported() {
        let err = read_csv_from("x,y\n1,2\nfoo,3\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::Parse { row: 1, .. }), "{err}");
        let meta = Metadata {
            columns: [("nope".to_string(), ColumnMeta::default())].into_iter().collect(),
        };
        let err = read_csv_from("x,y\n1,2\n3,4\n".as_bytes(), Some(&meta)).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(_)));
    }
}
