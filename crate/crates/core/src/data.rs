//! Datasets, submodels and their validation.
//!
//! Covariates are held in a column-major [`DMatrix`] so that per-column
//! passes (coordinate descent, score components) walk contiguous memory.
//! There is no implicit intercept: a caller wanting one adds a constant
//! column and forces it into the submodel.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary responses with a dense design and one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: DMatrix<f64>,
    labels: Vec<String>,
}

/// Builds a validated dataset from a row-major covariate buffer.
pub fn build_dataset(y: Vec<f64>, x_row_major: Vec<f64>, labels: Vec<String>) -> Result<Dataset> {
    let n = y.len();
    let d = labels.len();
    if x_row_major.len() != n * d {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} x {d} = {} covariate values, got {}",
            n * d,
            x_row_major.len()
        )));
    }
    let x = DMatrix::from_row_slice(n, d, &x_row_major);
    Dataset::new(y, x, labels)
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::DimensionMismatch(format!("need n >= 2 rows, got {n}")));
        }
        if x.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "response has {n} rows but design has {}",
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::DimensionMismatch("need d >= 1 covariates".into()));
        }
        if labels.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} columns",
                labels.len(),
                x.ncols()
            )));
        }
        if let Some((row, &value)) = y.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
            return Err(Error::NonBinaryResponse { row, value });
        }
        for col in 0..x.ncols() {
            if let Some(row) = x.column(col).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCovariate { row, col });
            }
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { y, x, labels })
    }

    /// Labels default to `x1..xd`.
    pub fn from_matrix(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(y, x, labels)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Keeps the columns of `s` in order; `y` is unchanged.
    pub fn restrict(&self, s: &Submodel) -> Result<Dataset> {
        if let Some(&index) = s.indices().iter().find(|&&j| j >= self.d()) {
            return Err(Error::IndexOutOfRange { index, d: self.d() });
        }
        let x = self.x.select_columns(s.indices());
        let labels = s.indices().iter().map(|&j| self.labels[j].clone()).collect();
        Ok(Dataset {
            y: self.y.clone(),
            x,
            labels,
        })
    }

    /// Rows in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&index) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(Error::IndexOutOfRange { index, d: self.n() });
        }
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Dataset::new(y, self.x.select_rows(rows), self.labels.clone())
    }

    /// Same design, new responses.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(y, self.x.clone(), self.labels.clone())
    }

    /// Appends the products of every pair of columns, labelled `a:b`.
    pub fn with_pairwise_interactions(&self) -> Result<Dataset> {
        let d = self.d();
        let n = self.n();
        let extra = d * (d - 1) / 2;
        let mut x = DMatrix::zeros(n, d + extra);
        x.columns_mut(0, d).copy_from(&self.x);
        let mut labels = self.labels.clone();
        let mut col = d;
        for a in 0..d {
            for b in (a + 1)..d {
                let (ca, cb) = (self.column(a), self.column(b));
                for i in 0..n {
                    x[(i, col)] = ca[i] * cb[i];
                }
                labels.push(format!("{}:{}", self.labels[a], self.labels[b]));
                col += 1;
            }
        }
        Dataset::new(self.y.clone(), x, labels)
    }
}

/// Sorted, duplicate-free column indices with an optional forced member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submodel {
    indices: Vec<usize>,
    forced_index: Option<usize>,
}

impl Submodel {
    /// Validates `indices` against `d`. The input need not be sorted;
    /// duplicates are rejected.
    pub fn new(mut indices: Vec<usize>, forced_index: Option<usize>, d: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubmodel("empty index set".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubmodel("duplicate indices".into()));
        }
        if let Some(&index) = indices.last().filter(|&&j| j >= d) {
            return Err(Error::IndexOutOfRange { index, d });
        }
        if let Some(j0) = forced_index {
            if indices.binary_search(&j0).is_err() {
                return Err(Error::InvalidSubmodel(format!(
                    "forced index {j0} is not a member"
                )));
            }
        }
        Ok(Self {
            indices,
            forced_index,
        })
    }

    pub fn full(d: usize) -> Self {
        Self {
            indices: (0..d).collect(),
            forced_index: None,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn forced_index(&self) -> Option<usize> {
        self.forced_index
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Position of column `j` within the submodel.
    pub fn position(&self, j: usize) -> Option<usize> {
        self.indices.binary_search(&j).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn minimal_dataset() {
        let ds = build_dataset(vec![0.0, 1.0], vec![1.0, -1.0], labels(&["a"])).unwrap();
        assert_eq!((ds.n(), ds.d()), (2, 1));
        assert_eq!(ds.column(0), &[1.0, -1.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let err = build_dataset(vec![0.0, 2.0], vec![1.0, 1.0], labels(&["a"])).unwrap_err();
        assert!(matches!(err, Error::NonBinaryResponse { row: 1, .. }));
        let err = build_dataset(vec![0.0, 1.0], vec![1.0, f64::NAN], labels(&["a"])).unwrap_err();
        assert!(matches!(err, Error::NonFiniteCovariate { row: 1, col: 0 }));
        let err = build_dataset(vec![0.0, 1.0], vec![1.0], labels(&["a"])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let err =
            build_dataset(vec![0.0, 1.0], vec![1.0, 2.0, 3.0, 4.0], labels(&["a", "a"])).unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(_)));
        let err = build_dataset(vec![1.0], vec![1.0], labels(&["a"])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn restrict_columns() {
        let ds = build_dataset(
            vec![0.0, 1.0],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            labels(&["a", "b", "c"]),
        )
        .unwrap();
        let s = Submodel::new(vec![2, 0], None, 3).unwrap();
        let r = ds.restrict(&s).unwrap();
        assert_eq!(r.labels(), &["a", "c"]);
        assert_eq!(r.column(0), &[1.0, 4.0]);
        assert_eq!(r.column(1), &[3.0, 6.0]);
        assert_eq!(r.y(), ds.y());

        assert_eq!(ds.restrict(&Submodel::full(3)).unwrap(), ds);

        let err = Submodel::new(vec![3], None, 3).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 3, d: 3 }));
        let wide = Submodel::new(vec![3], None, 4).unwrap();
        assert!(matches!(
            ds.restrict(&wide),
            Err(Error::IndexOutOfRange { index: 3, d: 3 })
        ));
    }

    #[test]
    fn submodel_validation() {
        assert!(Submodel::new(vec![], None, 3).is_err());
        assert!(Submodel::new(vec![1, 1], None, 3).is_err());
        assert!(Submodel::new(vec![0, 1], Some(2), 3).is_err());
        let s = Submodel::new(vec![2, 0], Some(2), 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.position(2), Some(1));
    }

    #[test]
    fn interactions_append_products() {
        let ds = build_dataset(
            vec![0.0, 1.0],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            labels(&["a", "b", "c"]),
        )
        .unwrap();
        let ext = ds.with_pairwise_interactions().unwrap();
        assert_eq!(ext.labels(), &["a", "b", "c", "a:b", "a:c", "b:c"]);
        assert_eq!(ext.column(3), &[2.0, 20.0]);
        assert_eq!(ext.column(5), &[6.0, 30.0]);
    }
}
