//! F1 scores and the 2×2 confusion matrix.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// F1 of the "real" class.
    BinaryReal,
    Macro,
    /// Per-class F1 weighted by support.
    #[default]
    Weighted,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary_real" | "binary" => Ok(Averaging::BinaryReal),
            "macro" => Ok(Averaging::Macro),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(Error::Validation(format!("unknown F1 averaging {other:?}"))),
        }
    }
}

/// Counts with rows = actual (fake, real) and columns = predicted (fake, real).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; 2]; 2]);

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn max_cell(&self) -> u64 {
        self.0.iter().flatten().copied().max().unwrap_or(0)
    }

    /// F1 of one class treated as positive; 0 when undefined.
    pub fn class_f1(&self, class: Label) -> f64 {
        let c = class.index();
        let o = 1 - c;
        let tp = self.0[c][c] as f64;
        let fp = self.0[o][c] as f64;
        let fn_ = self.0[c][o] as f64;
        let denom = 2.0 * tp + fp + fn_;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }

    pub fn support(&self, class: Label) -> u64 {
        self.0[class.index()].iter().sum()
    }

    pub fn f1(&self, averaging: Averaging) -> f64 {
        let classes = [Label::Fake, Label::Real];
        match averaging {
            Averaging::BinaryReal => self.class_f1(Label::Real),
            Averaging::Macro => classes.iter().map(|&c| self.class_f1(c)).sum::<f64>() / 2.0,
            Averaging::Weighted => {
                let total = self.total();
                if total == 0 {
                    return 0.0;
                }
                classes
                    .iter()
                    .map(|&c| self.class_f1(c) * self.support(c) as f64)
                    .sum::<f64>()
                    / total as f64
            }
        }
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            (self.0[0][0] + self.0[1][1]) as f64 / t as f64
        }
    }
}

pub fn confusion_matrix(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut m = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        m.0[t.index()][p.index()] += 1;
    }
    Ok(m)
}

pub fn f1_score(y_true: &[Label], y_pred: &[Label], averaging: Averaging) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::State("F1 needs at least one sample".into()));
    }
    Ok(confusion_matrix(y_true, y_pred)?.f1(averaging))
}
