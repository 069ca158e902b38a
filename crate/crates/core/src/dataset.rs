//! Named numeric columns, with CSV input/output and ordinal encodings for
//! categorical columns.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset needs at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("column {name} has {got} rows, expected {expected}")]
    RaggedColumn { name: String, got: usize, expected: usize },
    #[error("duplicate column name {0}")]
    DuplicateColumn(String),
    #[error("invalid column name {0:?}")]
    InvalidName(String),
    #[error("non-finite value in column {name} at row {row}")]
    NonFinite { name: String, row: usize },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("row {row}, column {name}: cannot parse {value:?}")]
    Parse { row: usize, name: String, value: String },
    #[error("encoding names column {0}, which is not in the data")]
    EncodingColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid encoding JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl DatasetError {
    pub fn kind(&self) -> &'static str {
        match self {
            DatasetError::TooFewRows(_) => "TooFewRows",
            DatasetError::RaggedColumn { .. } => "RaggedColumn",
            DatasetError::DuplicateColumn(_) => "DuplicateColumn",
            DatasetError::InvalidName(_) => "InvalidName",
            DatasetError::NonFinite { .. } => "NonFinite",
            DatasetError::UnknownColumn(_) => "UnknownColumn",
            DatasetError::Parse { .. } => "Parse",
            DatasetError::EncodingColumn(_) => "EncodingColumn",
            DatasetError::Csv(_) => "Csv",
            DatasetError::Json(_) => "Json",
        }
    }
}

/// Ordinal level lists per column: `{"HeatingSystem": ["Boiler", "DH", "ASHP"]}`
/// maps Boiler→0, DH→1, ASHP→2.
pub type OrdinalEncoding = BTreeMap<String, Vec<String>>;

pub fn parse_encoding(src: &str) -> Result<OrdinalEncoding, DatasetError> {
    Ok(serde_json::from_str(src)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<Self, DatasetError> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        if rows < 3 {
            return Err(DatasetError::TooFewRows(rows));
        }
        let mut seen = HashSet::new();
        for (name, col) in &columns {
            if !crate::graph::valid_name(name) {
                return Err(DatasetError::InvalidName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateColumn(name.clone()));
            }
            if col.len() != rows {
                return Err(DatasetError::RaggedColumn { name: name.clone(), got: col.len(), expected: rows });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { name: name.clone(), row });
            }
        }
        let (names, columns) = columns.into_iter().unzip();
        Ok(Dataset { names, columns })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_count(&self) -> usize {
        self.names.len()
    }

    pub fn row_count(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, DatasetError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&[f64], DatasetError> {
        Ok(&self.columns[self.column_index(name)?])
    }

    pub fn column_at(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
        }
    }

    /// Reads CSV with a header row. Columns listed in `encoding` may hold level
    /// labels, which are mapped to their ordinal position; numeric cells in
    /// those columns are accepted as-is.
    pub fn from_csv<R: Read>(reader: R, encoding: Option<&OrdinalEncoding>) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if let Some(enc) = encoding {
            if let Some(missing) = enc.keys().find(|k| !headers.contains(k)) {
                return Err(DatasetError::EncodingColumn(missing.clone()));
            }
        }
        let levels: Vec<Option<&Vec<String>>> =
            headers.iter().map(|h| encoding.and_then(|e| e.get(h))).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (j, cell) in rec.iter().enumerate() {
                let value = match cell.parse::<f64>() {
                    Ok(v) => v,
                    Err(_) => levels[j]
                        .and_then(|l| l.iter().position(|x| x == cell))
                        .map(|p| p as f64)
                        .ok_or_else(|| DatasetError::Parse {
                            row: row + 1,
                            name: headers[j].clone(),
                            value: cell.to_string(),
                        })?,
                };
                columns[j].push(value);
            }
        }
        Dataset::new(headers.into_iter().zip(columns).collect())
    }

    pub fn from_csv_str(src: &str, encoding: Option<&OrdinalEncoding>) -> Result<Self, DatasetError> {
        Self::from_csv(src.as_bytes(), encoding)
    }

    /// Writes CSV using the shortest round-tripping decimal form of each value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for r in 0..self.row_count() {
            w.write_record(self.columns.iter().map(|c| format!("{:?}", c[r])))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}
