//! Observation files: a CSV with a header naming the input columns, then
//! `t` and `y`.

use std::path::Path;

use lurk_core::Dataset;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("header: {0}")]
    Header(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    Width { row: usize, expected: usize, found: usize },
    #[error("row {row}, column '{column}': missing value")]
    Missing { row: usize, column: String },
    #[error("row {row}, column '{column}': cannot parse '{text}' as a number")]
    Number { row: usize, column: String, text: String },
    #[error("row {row}, column '{column}': value {value} is not finite")]
    NotFinite { row: usize, column: String, value: f64 },
    #[error("no data rows")]
    Empty,
}

/// Raw observations as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub input_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl RawData {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Min-max scaled dataset.
    pub fn to_dataset(&self) -> lurk_core::Result<Dataset> {
        Dataset::new(self.x.clone(), self.t.clone(), self.y.clone())
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        Self {
            input_names: (1..=data.p()).map(|k| format!("x{k}")).collect(),
            x: (0..data.n()).map(|i| data.raw_x(i)).collect(),
            t: (0..data.n()).map(|i| data.raw_t(i)).collect(),
            y: data.y().to_vec(),
        }
    }
}

/// Row numbers in messages count data rows from 1 (the header is row 0).
pub fn read_csv(path: &Path) -> Result<RawData, DataError> {
    let io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(io)?;
    let header: Vec<String> = reader.headers().map_err(io)?.iter().map(str::to_string).collect();
    let find = |name: &str| -> Result<usize, DataError> {
        let hits: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.as_str() == name)
            .map(|(k, _)| k)
            .collect();
        match hits.as_slice() {
            [k] => Ok(*k),
            [] => Err(DataError::Header(format!("no '{name}' column"))),
            _ => Err(DataError::Header(format!("'{name}' appears more than once"))),
        }
    };
    let t_col = find("t")?;
    let y_col = find("y")?;
    let x_cols: Vec<usize> = (0..header.len()).filter(|&k| k != t_col && k != y_col).collect();
    if let Some(k) = x_cols.iter().find(|&&k| header[k].is_empty()) {
        return Err(DataError::Header(format!("column {} has an empty name", k + 1)));
    }

    let mut out = RawData {
        input_names: x_cols.iter().map(|&k| header[k].clone()).collect(),
        x: Vec::new(),
        t: Vec::new(),
        y: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(io)?;
        if record.len() != header.len() {
            return Err(DataError::Width {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let cell = |k: usize| -> Result<f64, DataError> {
            let text = &record[k];
            let column = header[k].clone();
            if text.is_empty() {
                return Err(DataError::Missing { row, column });
            }
            let value: f64 = text.parse().map_err(|_| DataError::Number {
                row,
                column: column.clone(),
                text: text.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NotFinite { row, column, value });
            }
            Ok(value)
        };
        out.x.push(x_cols.iter().map(|&k| cell(k)).collect::<Result<_, _>>()?);
        out.t.push(cell(t_col)?);
        out.y.push(cell(y_col)?);
    }
    if out.y.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(out)
}

pub fn write_csv(path: &Path, data: &RawData) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = data.input_names.clone();
    header.push("t".into());
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.x[i].iter().map(f64::to_string).collect();
        rec.push(data.t[i].to_string());
        rec.push(data.y[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
