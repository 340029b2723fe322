//! Column standardization (or per-row L2 scaling) fitted on training rows.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerKind {
    /// Zero mean and unit population variance per column.
    #[default]
    Standardize,
    /// Unit Euclidean norm per row; no fitted statistics.
    L2PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub kind: NormalizerKind,
    pub mean: Array1<f64>,
    /// Constant columns store 1 so they map to 0.
    pub std: Array1<f64>,
}

impl Normalizer {
    /// Statistics come only from `train_rows`.
    pub fn fit(x: ArrayView2<f64>, train_rows: &[usize], kind: NormalizerKind) -> Result<Self> {
        let dim = x.ncols();
        if kind == NormalizerKind::L2PerSample {
            return Ok(Normalizer {
                kind,
                mean: Array1::zeros(dim),
                std: Array1::ones(dim),
            });
        }
        if train_rows.is_empty() {
            return Err(Error::State("cannot fit a normalizer on zero rows".into()));
        }
        if let Some(&r) = train_rows.iter().find(|&&r| r >= x.nrows()) {
            return Err(Error::Shape(format!("training row {r} out of range for {} rows", x.nrows())));
        }
        let train = x.select(Axis(0), train_rows);
        let mean = train.mean_axis(Axis(0)).expect("non-empty");
        let mut std = train.var_axis(Axis(0), 0.0).mapv(f64::sqrt);
        for (s, col) in std.iter_mut().zip(train.columns()) {
            let first = col[0];
            if *s == 0.0 || col.iter().all(|&v| v == first) {
                *s = 1.0;
            }
        }
        Ok(Normalizer { kind, mean, std })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "normalizer fitted on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        Ok(match self.kind {
            NormalizerKind::Standardize => (&x - &self.mean) / &self.std,
            NormalizerKind::L2PerSample => {
                let mut out = x.to_owned();
                for mut row in out.rows_mut() {
                    let n = row.dot(&row).sqrt();
                    if n > 0.0 {
                        row /= n;
                    }
                }
                out
            }
        })
    }
}
