//! Input assembly for the stacking network and meta features for linear
//! stacking.

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::normalize::{Normalizer, NormalizerKind};
use crate::corpus::{Dataset, Label};
use crate::embeddings::{self, EmbeddingSet};
use crate::error::{Error, Result};
use crate::linear::{self, LinearModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackInputSpec {
    pub blocks: Vec<(String, usize)>,
}

impl StackInputSpec {
    pub fn canonical() -> Self {
        StackInputSpec {
            blocks: [
                ("lsa", 256),
                ("handcrafted", 16),
                ("distilbert-emb", 768),
                ("roberta-emb", 768),
                ("xlm-emb", 768),
            ]
            .into_iter()
            .map(|(n, d)| (n.to_string(), d))
            .collect(),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|(_, d)| d).sum()
    }
}

/// Concatenates `blocks` (same order and dims as `spec`) and standardizes
/// with statistics from `train_rows`.
pub fn assemble_stack_input(
    spec: &StackInputSpec,
    blocks: &[ArrayView2<f64>],
    train_rows: &[usize],
    kind: NormalizerKind,
) -> Result<(Array2<f64>, Normalizer)> {
    if blocks.len() != spec.blocks.len() {
        return Err(Error::Shape(format!(
            "expected {} blocks, got {}",
            spec.blocks.len(),
            blocks.len()
        )));
    }
    let n = blocks.first().map_or(0, |b| b.nrows());
    let mut x = Array2::zeros((n, spec.total_dim()));
    let mut offset = 0;
    for ((name, dim), block) in spec.blocks.iter().zip(blocks) {
        if block.ncols() != *dim {
            return Err(Error::Shape(format!(
                "block {name}: expected {dim} columns, got {}",
                block.ncols()
            )));
        }
        if block.nrows() != n {
            return Err(Error::Shape(format!(
                "block {name}: expected {n} rows, got {}",
                block.nrows()
            )));
        }
        if block.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("block {name} contains non-finite values")));
        }
        x.slice_mut(s![.., offset..offset + dim]).assign(block);
        offset += dim;
    }
    let norm = Normalizer::fit(x.view(), train_rows, kind)?;
    let x = norm.transform(x.view())?;
    Ok((x, norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackMode {
    /// 0/1 predicted labels (1 = real).
    #[default]
    Labels,
    /// Decision values for hinge models, probabilities for logistic ones.
    Decision,
}

impl std::str::FromStr for StackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labels" => Ok(StackMode::Labels),
            "decision" => Ok(StackMode::Decision),
            other => Err(Error::Validation(format!("unknown stacking mode {other:?}"))),
        }
    }
}

impl StackMode {
    /// Catalog preset used to train the stacker in this mode.
    pub fn preset_name(self) -> &'static str {
        match self {
            StackMode::Labels => "linear-stacking",
            StackMode::Decision => "linear-stacking-probs",
        }
    }
}

/// One base model's outputs over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseOutput {
    pub name: String,
    pub labels: Vec<Label>,
    pub scores: Vec<f64>,
}

impl BaseOutput {
    pub fn from_model(name: &str, model: &LinearModel, x: ArrayView2<f64>) -> Result<Self> {
        Ok(BaseOutput {
            name: name.to_string(),
            labels: model.predict(x)?,
            scores: model.stacking_scores(x)?.to_vec(),
        })
    }

    /// An externally produced prediction file in the embedding format. Dim 1
    /// holds one signed real-class score per post (label from its sign); dim 2
    /// holds (fake, real) scores, labelled by argmax with ties to fake.
    pub fn from_prediction_set(name: &str, set: &EmbeddingSet, ds: &Dataset) -> Result<Self> {
        let m = embeddings::align(set, ds)?;
        match m.ncols() {
            1 => {
                let scores = m.column(0).to_vec();
                Ok(BaseOutput {
                    name: name.to_string(),
                    labels: scores.iter().map(|&v| Label::from_score(v)).collect(),
                    scores,
                })
            }
            2 => Ok(BaseOutput {
                name: name.to_string(),
                labels: m
                    .rows()
                    .into_iter()
                    .map(|r| if r[1] > r[0] { Label::Real } else { Label::Fake })
                    .collect(),
                scores: m.column(1).to_vec(),
            }),
            d => Err(Error::Format(format!(
                "prediction file {name}: expected dim 1 or 2, got {d}"
            ))),
        }
    }
}

/// One column per base model.
pub fn stack_base_outputs(outputs: &[BaseOutput], mode: StackMode) -> Result<Array2<f64>> {
    if outputs.len() < 2 {
        return Err(Error::State(format!(
            "stacking needs at least 2 base models, got {}",
            outputs.len()
        )));
    }
    let n = outputs[0].labels.len();
    for o in outputs {
        if o.labels.len() != n || o.scores.len() != n {
            return Err(Error::Shape(format!(
                "base model {} has {} rows, expected {n}",
                o.name,
                o.labels.len().max(o.scores.len())
            )));
        }
    }
    Ok(Array2::from_shape_fn((n, outputs.len()), |(i, j)| match mode {
        StackMode::Labels => outputs[j].labels[i].index() as f64,
        StackMode::Decision => outputs[j].scores[i],
    }))
}

/// Trains the stacker with the catalog preset for `mode`.
pub fn train_linear_stack(meta: ArrayView2<f64>, labels: &[Label], mode: StackMode, seed: u64) -> Result<LinearModel> {
    let cfg = linear::preset(mode.preset_name())?.with_seed(seed);
    linear::train_sgd(meta, labels, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Record, SplitName};
    use ndarray::array;

    #[test]
    fn canonical_spec_dims() {
        let spec = StackInputSpec::canonical();
        assert_eq!(spec.total_dim(), 256 + 16 + 768 * 3);
        assert_eq!(spec.total_dim(), 2576);
        assert_eq!(spec.total_dim(), super::super::mlp::CANONICAL_DIMS[0]);
    }

    #[test]
    fn assembly_order_and_constant_column() {
        let spec = StackInputSpec { blocks: vec![("a".into(), 1), ("b".into(), 2)] };
        let a = array![[1.0], [3.0]];
        let b = array![[7.0, 10.0], [7.0, 20.0]];
        let (x, norm) = assemble_stack_input(&spec, &[a.view(), b.view()], &[0, 1], NormalizerKind::Standardize).unwrap();
        assert_eq!(norm.mean.to_vec(), vec![2.0, 7.0, 15.0]);
        assert_eq!(x, array![[-1.0, 0.0, -1.0], [1.0, 0.0, 1.0]]);
    }

    #[test]
    fn assembly_error_names_block() {
        let spec = StackInputSpec { blocks: vec![("lsa".into(), 2), ("xlm-emb".into(), 3)] };
        let a = Array2::<f64>::zeros((2, 2));
        let b = Array2::<f64>::zeros((2, 4));
        let err = assemble_stack_input(&spec, &[a.view(), b.view()], &[0], NormalizerKind::Standardize).unwrap_err();
        assert!(err.to_string().contains("xlm-emb"), "{err}");
    }

    fn out(name: &str, labels: &[Label]) -> BaseOutput {
        BaseOutput {
            name: name.into(),
            labels: labels.to_vec(),
            scores: labels.iter().map(|l| l.sign() * 2.0).collect(),
        }
    }

    #[test]
    fn six_models_give_six_columns() {
        let ls = [Label::Real, Label::Fake, Label::Real];
        let outs: Vec<BaseOutput> = (0..6).map(|i| out(&format!("m{i}"), &ls)).collect();
        let m = stack_base_outputs(&outs, StackMode::Labels).unwrap();
        assert_eq!(m.dim(), (3, 6));
        assert!(m.row(0).iter().all(|&v| v == 1.0));
        assert!(m.row(1).iter().all(|&v| v == 0.0));
        let d = stack_base_outputs(&outs, StackMode::Decision).unwrap();
        assert_eq!(d[[1, 3]], -2.0);
    }

    #[test]
    fn misaligned_or_too_few() {
        let a = out("a", &[Label::Real]);
        let b = out("b", &[Label::Real, Label::Fake]);
        assert!(matches!(stack_base_outputs(&[a.clone(), b], StackMode::Labels), Err(Error::Shape(_))));
        assert!(stack_base_outputs(&[a], StackMode::Labels).is_err());
    }

    #[test]
    fn external_prediction_file() {
        let ds = Dataset::new(
            vec![
                Record { id: "1".into(), text: "a".into(), label: None },
                Record { id: "2".into(), text: "b".into(), label: None },
            ],
            SplitName::Derived,
        )
        .unwrap();
        let one = EmbeddingSet::from_f64("distilbert", "raw", vec!["2".into(), "1".into()], array![[-0.5], [1.5]]).unwrap();
        let o = BaseOutput::from_prediction_set("distilbert", &one, &ds).unwrap();
        assert_eq!(o.scores, vec![1.5, -0.5]);
        assert_eq!(o.labels, vec![Label::Real, Label::Fake]);
        let two = EmbeddingSet::from_f64("distilbert", "raw", vec!["1".into(), "2".into()], array![[0.9, 0.1], [0.5, 0.5]]).unwrap();
        let o = BaseOutput::from_prediction_set("distilbert", &two, &ds).unwrap();
        assert_eq!(o.labels, vec![Label::Fake, Label::Fake]);
        assert_eq!(o.scores, vec![0.1, 0.5]);
        let three = EmbeddingSet::from_f64("distilbert", "raw", vec!["1".into(), "2".into()], Array2::zeros((2, 3))).unwrap();
        assert!(BaseOutput::from_prediction_set("x", &three, &ds).is_err());
    }

    #[test]
    fn perfect_column_gives_perfect_stacker() {
        let labels: Vec<Label> = (0..40).map(|i| if i % 3 == 0 { Label::Real } else { Label::Fake }).collect();
        let noise: Vec<Label> = (0..40).map(|i| if i % 2 == 0 { Label::Real } else { Label::Fake }).collect();
        let outs = [out("oracle", &labels), out("noise", &noise)];
        for mode in [StackMode::Labels, StackMode::Decision] {
            let meta = stack_base_outputs(&outs, mode).unwrap();
            let m = train_linear_stack(meta.view(), &labels, mode, 7).unwrap();
            assert_eq!(m.predict(meta.view()).unwrap(), labels, "{mode:?}");
        }
    }

    #[test]
    fn stacking_presets() {
        let a = linear::preset("linear-stacking").unwrap();
        let b = linear::preset("linear-stacking-probs").unwrap();
        assert_eq!((a.loss, a.penalty, a.l1_ratio), (linear::Loss::Hinge, linear::Penalty::ElasticNet, 0.3));
        assert_eq!((b.loss, b.penalty, b.l1_ratio), (linear::Loss::Hinge, linear::Penalty::ElasticNet, 0.8));
    }
}
