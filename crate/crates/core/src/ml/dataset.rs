//! Validated feature matrix + label container shared by all classifiers.

use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureManifest};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    /// 1 = fake, 0 = real.
    pub y: Vec<u8>,
    pub manifest: FeatureManifest,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<u8>, manifest: FeatureManifest) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != manifest.len() {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} values, manifest expects {}",
                    row.len(),
                    manifest.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite value in row {i}")));
            }
        }
        if y.iter().any(|&label| label > 1) {
            return Err(Error::InvalidInput("labels must be 0 or 1".into()));
        }
        Ok(Dataset { x, y, manifest })
    }

    pub fn from_design_matrix(dm: &DesignMatrix) -> Result<Self> {
        Dataset::new(dm.x.clone(), dm.y.clone(), dm.manifest.clone())
    }

    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_cols(&self) -> usize {
        self.manifest.len()
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&0) && self.y.contains(&1)
    }

    /// Rows at `indices`, in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            manifest: self.manifest.clone(),
        }
    }

    /// Columns at `columns`, with the manifest sliced to match.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::InvalidInput("no columns selected".into()));
        }
        for &c in columns {
            if c >= self.n_cols() {
                return Err(Error::InvalidInput(format!("column {c} out of range")));
            }
        }
        let manifest = FeatureManifest {
            names: columns.iter().map(|&c| self.manifest.names[c].clone()).collect(),
            groups: columns.iter().map(|&c| self.manifest.groups[c]).collect(),
        };
        Ok(Dataset {
            x: self
                .x
                .iter()
                .map(|row| columns.iter().map(|&c| row[c]).collect())
                .collect(),
            y: self.y.clone(),
            manifest,
        })
    }
}
