//! Observation matrices with per-entry masks, and the CSV formats used by
//! the CLI (header row, empty cell = missing).

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::fmt_g17;

/// An N×D observation matrix. `mask[(n, d)]` is true where the entry is
/// observed; masked entries take part in nothing but imputation queries.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub values: DMatrix<f64>,
    pub mask: DMatrix<bool>,
}

impl DataMatrix {
    /// Fully observed data.
    pub fn full(values: DMatrix<f64>) -> Result<DataMatrix> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), true);
        DataMatrix::new(values, mask)
    }

    pub fn new(values: DMatrix<f64>, mask: DMatrix<bool>) -> Result<DataMatrix> {
        if values.shape() != mask.shape() {
            return Err(Error::InvalidInput(format!(
                "mask shape {:?} does not match data shape {:?}",
                mask.shape(),
                values.shape()
            )));
        }
        for n in 0..values.nrows() {
            for d in 0..values.ncols() {
                if mask[(n, d)] && !values[(n, d)].is_finite() {
                    return Err(Error::NonFinite(format!("observed entry ({n}, {d})")));
                }
            }
        }
        Ok(DataMatrix { values, mask })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Indices of the observed rows of column `d`, ascending.
    pub fn observed_rows(&self, d: usize) -> Vec<usize> {
        (0..self.nrows()).filter(|&n| self.mask[(n, d)]).collect()
    }

    pub fn n_masked(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    /// Every column must keep at least `min_rows` observed entries.
    pub fn validate_min_observed(&self, min_rows: usize) -> Result<()> {
        for d in 0..self.ncols() {
            let got = (0..self.nrows()).filter(|&n| self.mask[(n, d)]).count();
            if got < min_rows {
                return Err(Error::InvalidInput(format!(
                    "column {d} has {got} observed rows but at least {min_rows} are required"
                )));
            }
        }
        Ok(())
    }

    /// Per-column mean over observed entries; 0.0 for a fully masked column.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.ncols())
            .map(|d| {
                let mut sum = 0.0;
                let mut count = 0usize;
                for n in 0..self.nrows() {
                    if self.mask[(n, d)] {
                        sum += self.values[(n, d)];
                        count += 1;
                    }
                }
                if count == 0 {
                    0.0
                } else {
                    sum / count as f64
                }
            })
            .collect()
    }
}

/// Read a data CSV: header row, one column per observed dimension, empty
/// cells marking missing entries.
pub fn read_data_csv(path: &Path) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let d = rdr.headers()?.len();
    let mut values = Vec::<f64>::new();
    let mut mask = Vec::<bool>::new();
    let mut n = 0usize;
    for record in rdr.records() {
        let record = record?;
        if record.len() != d {
            return Err(Error::InvalidInput(format!(
                "row {} has {} fields, expected {d}",
                n + 1,
                record.len()
            )));
        }
        for field in record.iter() {
            if field.is_empty() {
                values.push(f64::NAN);
                mask.push(false);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidInput(format!("cannot parse '{field}' as a number"))
                })?;
                values.push(v);
                mask.push(true);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidInput(format!(
            "no data rows in {}",
            path.display()
        )));
    }
    let values = DMatrix::from_row_iterator(n, d, values);
    let mask = DMatrix::from_row_iterator(n, d, mask);
    DataMatrix::new(values, mask)
}

/// Write a data CSV with `y1..yD` headers; masked entries become empty cells.
pub fn write_data_csv(path: &Path, data: &DataMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let headers: Vec<String> = (1..=data.ncols()).map(|d| format!("y{d}")).collect();
    wtr.write_record(&headers)?;
    for n in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols())
            .map(|d| {
                if data.mask[(n, d)] {
                    fmt_g17(data.values[(n, d)])
                } else {
                    String::new()
                }
            })
            .collect();
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Write a plain numeric matrix with the given header names.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, headers: &[String]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(headers)?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_g17(m[(i, j)])).collect();
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a plain numeric matrix CSV (header row, no missing cells allowed).
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let data = read_data_csv(path)?;
    if data.n_masked() > 0 {
        return Err(Error::InvalidInput(format!(
            "{} contains empty cells where a dense matrix was expected",
            path.display()
        )));
    }
    Ok(data.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        let values = DMatrix::from_row_slice(2, 3, &[0.1, 0.2 + 0.1, -1.5e-13, 3.0, 4.0, 5.0]);
        let mut mask = DMatrix::from_element(2, 3, true);
        mask[(1, 2)] = false;
        let data = DataMatrix::new(values, mask).unwrap();
        write_data_csv(&path, &data).unwrap();
        let back = read_data_csv(&path).unwrap();
        assert_eq!(back.mask, data.mask);
        for n in 0..2 {
            for d in 0..3 {
                if data.mask[(n, d)] {
                    assert_eq!(back.values[(n, d)].to_bits(), data.values[(n, d)].to_bits());
                }
            }
        }
    }

    #[test]
    fn rejects_nonfinite_observed() {
        let values = DMatrix::from_row_slice(1, 2, &[f64::NAN, 1.0]);
        let mask = DMatrix::from_element(1, 2, true);
        assert!(DataMatrix::new(values.clone(), mask).is_err());
        let mut mask = DMatrix::from_element(1, 2, true);
        mask[(0, 0)] = false;
        assert!(DataMatrix::new(values, mask).is_ok(), "masked NaN is fine");
    }

    #[test]
    fn min_observed_check() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut mask = DMatrix::from_element(3, 2, true);
        mask[(0, 1)] = false;
        mask[(1, 1)] = false;
        let data = DataMatrix::new(values, mask).unwrap();
        assert!(data.validate_min_observed(1).is_ok());
        assert!(data.validate_min_observed(2).is_err());
    }
}
