//! CSV ingestion.
//!
//! The first row is a header. The response column must hold 0/1 values;
//! every other column that parses as numbers is a covariate. Columns with
//! no numeric entry at all (identifiers, free text) are skipped. An empty
//! or `NA` cell in a used column is an error.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "null" | "NULL")
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a dataset, optionally appending all pairwise products (`interactions = 2`).
pub fn read_csv_dataset(path: &Path, response: &str, interactions: u8) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv_from(file, response, interactions)
}

pub fn read_csv_from<R: Read>(reader: R, response: &str, interactions: u8) -> Result<Dataset> {
    if interactions > 2 || interactions == 0 {
        return Err(Error::InvalidArgument(format!(
            "interactions must be 1 (none) or 2 (pairwise), got {interactions}"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let n = records.len();
    let yi = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::UnknownColumn(response.to_string()))?;

    let cell = |row: usize, col: usize| records[row].get(col).unwrap_or("");
    let mut y = Vec::with_capacity(n);
    for row in 0..n {
        let c = cell(row, yi);
        let v = parse_cell(c).ok_or_else(|| {
            Error::Csv(format!("response {response:?} has non-numeric value {c:?} on line {}", row + 2))
        })?;
        y.push(v);
    }

    let mut labels = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (col, name) in headers.iter().enumerate() {
        if col == yi {
            continue;
        }
        let numeric = (0..n).filter(|&r| parse_cell(cell(r, col)).is_some()).count();
        if numeric == 0 {
            log::info!("skipping non-numeric column {name:?}");
            continue;
        }
        let mut values = Vec::with_capacity(n);
        for row in 0..n {
            let c = cell(row, col);
            match parse_cell(c) {
                Some(v) => values.push(v),
                None if is_missing(c) => {
                    return Err(Error::Csv(format!("missing value in column {name:?} on line {}", row + 2)))
                }
                None => {
                    return Err(Error::Csv(format!(
                        "non-numeric value {c:?} in column {name:?} on line {}",
                        row + 2
                    )))
                }
            }
        }
        labels.push(name.clone());
        columns.push(values);
    }
    if columns.is_empty() {
        return Err(Error::Csv("no numeric covariate columns".into()));
    }
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let ds = Dataset::new(y, x, labels)?;
    if interactions == 2 {
        ds.with_pairwise_interactions()
    } else {
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_numeric_columns_and_skips_text() {
        let csv = "id,y,a,b\nu1,0,1.5,2\nu2,1,-1,3\nu3,1,0,4\n";
        let ds = read_csv_from(csv.as_bytes(), "y", 1).unwrap();
        assert_eq!(ds.labels(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.y(), &[0.0, 1.0, 1.0]);
        assert_eq!(ds.column(0), &[1.5, -1.0, 0.0]);
    }

    #[test]
    fn interactions_append_products() {
        let csv = "y,a,b,c\n0,1,2,3\n1,2,3,4\n";
        let ds = read_csv_from(csv.as_bytes(), "y", 2).unwrap();
        assert_eq!(ds.d(), 6);
        assert_eq!(ds.labels()[3], "a:b");
        assert_eq!(ds.labels()[5], "b:c");
        assert_eq!(ds.column(5), &[6.0, 12.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            read_csv_from("y,a\n0,1\n1,2\n".as_bytes(), "z", 1),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            read_csv_from("y,a\n0,1\n1,NA\n".as_bytes(), "y", 1),
            Err(Error::Csv(m)) if m.contains("missing")
        ));
        assert!(matches!(
            read_csv_from("y,a\n0,1\n2,3\n".as_bytes(), "y", 1),
            Err(Error::NonBinaryResponse { .. })
        ));
        assert!(read_csv_from("y,a\n0,1\n1,x\n".as_bytes(), "y", 1).is_err());
    }
}
