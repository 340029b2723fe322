//! Trainable end-to-end units: a base classifier over one representation, the
//! stacking network, and linear stacking over base outputs. Each can be saved
//! to and loaded from a directory.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label};
use crate::embeddings::{self, EmbeddingSet};
use crate::error::{Error, Result};
use crate::eval::split::kfold;
use crate::handcrafted;
use crate::io;
use crate::linear::{self, LinearModel, SgdConfig};
use crate::lsa::{LsaConfig, LsaModel};
use crate::meta::{
    assemble_stack_input, stack_base_outputs, train_linear_stack, train_mlp, BaseOutput, MlpConfig, MlpModel,
    Normalizer, NormalizerKind, StackInputSpec, StackMode,
};
use crate::preprocess::{clean_text, CleanConfig};

/// Model ids of the three sentence encoders, in stacking order.
pub const EMBEDDING_MODELS: [&str; 3] = [
    "distilbert-base-nli-mean-tokens",
    "roberta-large-nli-stsb-mean-tokens",
    "xlm-r-large-en-ko-nli-ststb",
];

/// Block names used for the embedding models in the stacking input.
pub const EMBEDDING_BLOCKS: [&str; 3] = ["distilbert-emb", "roberta-emb", "xlm-emb"];

/// Presets that run on internal representations or ingested embeddings.
pub const BASE_PRESETS: [&str; 5] = ["lsa-lr", "handcrafted-svm", "distilbert-lr", "roberta-lr", "xlm-svm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Representation {
    Lsa { config: LsaConfig },
    Handcrafted,
    Embedding { model_id: String },
}

impl Representation {
    /// The representation a catalog preset is defined on.
    pub fn for_preset(name: &str, seed: u64) -> Result<Self> {
        let p = linear::catalog()
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown preset {name:?}")))?;
        match p.vectorization.as_str() {
            "LSA" => Ok(Representation::Lsa {
                config: LsaConfig::best_single(seed),
            }),
            "Hand crafted features" => Ok(Representation::Handcrafted),
            v if EMBEDDING_MODELS.contains(&v) => Ok(Representation::Embedding { model_id: v.to_string() }),
            v => Err(Error::State(format!(
                "preset {name:?} uses representation {v:?}, which is not built by this toolkit"
            ))),
        }
    }
}

/// Finds the embedding set for `model_id` among `sets`.
pub fn find_embeddings<'a>(sets: &'a [EmbeddingSet], model_id: &str) -> Result<&'a EmbeddingSet> {
    sets.iter()
        .find(|s| s.manifest().model_id == model_id)
        .ok_or_else(|| Error::Validation(format!("no embedding file for model {model_id:?}")))
}

pub fn cleaned_texts(ds: &Dataset, clean: &CleanConfig) -> Vec<String> {
    ds.texts().map(|t| clean_text(t, clean)).collect()
}

/// A representation, a fitted input normalizer and a linear classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePipeline {
    pub preset: String,
    pub representation: Representation,
    pub clean: CleanConfig,
    pub lsa: Option<LsaModel>,
    pub normalizer: Normalizer,
    pub model: LinearModel,
}

#[derive(Serialize, Deserialize)]
struct BaseManifest {
    preset: String,
    representation: Representation,
    clean: CleanConfig,
    normalizer: Normalizer,
}

fn raw_features(
    representation: &Representation,
    lsa: Option<&LsaModel>,
    clean: &CleanConfig,
    ds: &Dataset,
    sets: &[EmbeddingSet],
) -> Result<Array2<f64>> {
    match representation {
        Representation::Lsa { .. } => {
            let model = lsa.ok_or_else(|| Error::State("LSA pipeline without a fitted LSA model".into()))?;
            model.transform(&cleaned_texts(ds, clean))
        }
        Representation::Handcrafted => Ok(handcrafted::feature_matrix(ds.texts())),
        Representation::Embedding { model_id } => embeddings::align(find_embeddings(sets, model_id)?, ds),
    }
}

impl BasePipeline {
    /// `name` labels the pipeline (a catalog preset name or a variant of one).
    pub fn fit(
        name: &str,
        representation: Representation,
        sgd: &SgdConfig,
        train: &Dataset,
        sets: &[EmbeddingSet],
        seed: u64,
    ) -> Result<Self> {
        let clean = CleanConfig::default();
        let lsa = match &representation {
            Representation::Lsa { config } => Some(LsaModel::fit(&cleaned_texts(train, &clean), config)?),
            _ => None,
        };
        let x = raw_features(&representation, lsa.as_ref(), &clean, train, sets)?;
        let all: Vec<usize> = (0..x.nrows()).collect();
        let normalizer = Normalizer::fit(x.view(), &all, NormalizerKind::Standardize)?;
        let x = normalizer.transform(x.view())?;
        let model = linear::train_sgd(x.view(), &train.labels()?, &sgd.clone().with_seed(seed))?;
        Ok(BasePipeline {
            preset: name.to_string(),
            representation,
            clean,
            lsa,
            normalizer,
            model,
        })
    }

    /// Fits the catalog preset on its own representation.
    pub fn fit_preset(preset: &str, train: &Dataset, sets: &[EmbeddingSet], seed: u64) -> Result<Self> {
        let sgd = linear::preset(preset)?;
        Self::fit(preset, Representation::for_preset(preset, seed)?, &sgd, train, sets, seed)
    }

    pub fn features(&self, ds: &Dataset, sets: &[EmbeddingSet]) -> Result<Array2<f64>> {
        let x = raw_features(&self.representation, self.lsa.as_ref(), &self.clean, ds, sets)?;
        self.normalizer.transform(x.view())
    }

    pub fn predict(&self, ds: &Dataset, sets: &[EmbeddingSet]) -> Result<Vec<Label>> {
        self.model.predict(self.features(ds, sets)?.view())
    }

    pub fn base_output(&self, ds: &Dataset, sets: &[EmbeddingSet]) -> Result<BaseOutput> {
        BaseOutput::from_model(&self.preset, &self.model, self.features(ds, sets)?.view())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        if let Some(lsa) = &self.lsa {
            lsa.save(&dir.join("lsa"))?;
        }
        self.model.save(&dir.join("model"))?;
        io::write_json(
            &dir.join("pipeline.json"),
            &BaseManifest {
                preset: self.preset.clone(),
                representation: self.representation.clone(),
                clean: self.clean.clone(),
                normalizer: self.normalizer.clone(),
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: BaseManifest = io::read_json(&dir.join("pipeline.json"))?;
        let lsa = match m.representation {
            Representation::Lsa { .. } => Some(LsaModel::load(&dir.join("lsa"))?),
            _ => None,
        };
        Ok(BasePipeline {
            preset: m.preset,
            representation: m.representation,
            clean: m.clean,
            lsa,
            normalizer: m.normalizer,
            model: LinearModel::load(&dir.join("model"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnStackConfig {
    pub lsa: LsaConfig,
    /// Embedding model ids, one block each, in order.
    pub embedding_models: Vec<String>,
    pub mlp: MlpConfig,
    pub normalizer: NormalizerKind,
    pub clean: CleanConfig,
}

impl NnStackConfig {
    /// LSA at d = 256, the 16 hand-crafted features and the three encoders
    /// feeding the 2576-input network with its best hyperparameters.
    pub fn paper(seed: u64) -> Self {
        NnStackConfig {
            lsa: LsaConfig::stacking(seed),
            embedding_models: EMBEDDING_MODELS.iter().map(|s| s.to_string()).collect(),
            mlp: MlpConfig::paper(seed),
            normalizer: NormalizerKind::Standardize,
            clean: CleanConfig::default(),
        }
    }

    /// Width of the concatenated input given the embedding files at hand.
    pub fn input_width(&self, sets: &[EmbeddingSet]) -> Result<usize> {
        let mut width = self.lsa.d + handcrafted::DIM;
        for model_id in &self.embedding_models {
            width += find_embeddings(sets, model_id)?.manifest().dim;
        }
        Ok(width)
    }
}

/// Fitted LSA block and normalized training input of a stacking network.
#[derive(Debug, Clone)]
pub struct PreparedStack {
    pub lsa: LsaModel,
    pub spec: StackInputSpec,
    pub x: Array2<f64>,
    pub normalizer: Normalizer,
    pub labels: Vec<Label>,
}

impl PreparedStack {
    /// Trains the network of `config`; its LSA and clean settings must be the
    /// ones this input was prepared with.
    pub fn train(&self, config: &NnStackConfig) -> Result<NnStackPipeline> {
        let mut mlp = train_mlp(self.x.view(), &self.labels, &config.mlp)?;
        mlp.normalizer = Some(self.normalizer.clone());
        Ok(NnStackPipeline {
            config: config.clone(),
            lsa: self.lsa.clone(),
            spec: self.spec.clone(),
            mlp,
        })
    }
}

/// Stacking network over concatenated representations.
#[derive(Debug, Clone, PartialEq)]
pub struct NnStackPipeline {
    pub config: NnStackConfig,
    pub lsa: LsaModel,
    pub spec: StackInputSpec,
    /// Carries the fitted input normalizer.
    pub mlp: MlpModel,
}

#[derive(Serialize, Deserialize)]
struct NnStackManifest {
    config: NnStackConfig,
    spec: StackInputSpec,
}

fn block_name(model_id: &str) -> String {
    EMBEDDING_MODELS
        .iter()
        .position(|m| *m == model_id)
        .map_or_else(|| format!("{model_id}-emb"), |i| EMBEDDING_BLOCKS[i].to_string())
}

impl NnStackPipeline {
    fn blocks(config: &NnStackConfig, lsa: &LsaModel, ds: &Dataset, sets: &[EmbeddingSet]) -> Result<(StackInputSpec, Vec<Array2<f64>>)> {
        let mut spec = vec![("lsa".to_string(), lsa.dim()), ("handcrafted".to_string(), handcrafted::DIM)];
        let mut blocks = vec![
            lsa.transform(&cleaned_texts(ds, &config.clean))?,
            handcrafted::feature_matrix(ds.texts()),
        ];
        for model_id in &config.embedding_models {
            let set = find_embeddings(sets, model_id)?;
            spec.push((block_name(model_id), set.manifest().dim));
            blocks.push(embeddings::align(set, ds)?);
        }
        Ok((StackInputSpec { blocks: spec }, blocks))
    }

    /// Fits the LSA block and the input normalizer on `train` and returns the
    /// normalized stacking input, ready for any number of network fits.
    pub fn prepare(train: &Dataset, sets: &[EmbeddingSet], config: &NnStackConfig) -> Result<PreparedStack> {
        let labels = train.labels()?;
        let lsa = LsaModel::fit(&cleaned_texts(train, &config.clean), &config.lsa)?;
        let (spec, blocks) = Self::blocks(config, &lsa, train, sets)?;
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let all: Vec<usize> = (0..train.len()).collect();
        let (x, normalizer) = assemble_stack_input(&spec, &views, &all, config.normalizer)?;
        Ok(PreparedStack {
            lsa,
            spec,
            x,
            normalizer,
            labels,
        })
    }

    pub fn fit(train: &Dataset, sets: &[EmbeddingSet], config: &NnStackConfig) -> Result<Self> {
        Self::prepare(train, sets, config)?.train(config)
    }

    pub fn predict(&self, ds: &Dataset, sets: &[EmbeddingSet]) -> Result<Vec<Label>> {
        let (spec, blocks) = Self::blocks(&self.config, &self.lsa, ds, sets)?;
        if spec != self.spec {
            return Err(Error::Shape(format!(
                "stacking input blocks {:?} differ from the trained {:?}",
                spec.blocks, self.spec.blocks
            )));
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let x = ndarray::concatenate(Axis(1), &views).map_err(|e| Error::Shape(e.to_string()))?;
        self.mlp.predict(x.view())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.lsa.save(&dir.join("lsa"))?;
        self.mlp.save(&dir.join("mlp"))?;
        io::write_json(
            &dir.join("pipeline.json"),
            &NnStackManifest {
                config: self.config.clone(),
                spec: self.spec.clone(),
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: NnStackManifest = io::read_json(&dir.join("pipeline.json"))?;
        Ok(NnStackPipeline {
            config: m.config,
            lsa: LsaModel::load(&dir.join("lsa"))?,
            spec: m.spec,
            mlp: MlpModel::load(&dir.join("mlp"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStackConfig {
    pub presets: Vec<String>,
    /// Model ids of external prediction files stacked as extra columns.
    pub external: Vec<String>,
    pub mode: StackMode,
    /// Folds for out-of-fold base outputs; `None` trains the stacker on
    /// in-sample base outputs.
    pub out_of_fold: Option<usize>,
    pub seed: u64,
}

impl LinearStackConfig {
    pub fn new(presets: &[&str], external: &[&str], mode: StackMode, seed: u64) -> Self {
        LinearStackConfig {
            presets: presets.iter().map(|s| s.to_string()).collect(),
            external: external.iter().map(|s| s.to_string()).collect(),
            mode,
            out_of_fold: Some(10),
            seed,
        }
    }
}

/// Linear stacker over base-model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStackPipeline {
    pub config: LinearStackConfig,
    pub bases: Vec<BasePipeline>,
    pub stacker: LinearModel,
}

/// Number of base inputs in the reference linear stack.
pub const REFERENCE_STACK_WIDTH: usize = 6;

impl LinearStackPipeline {
    fn external_outputs(config: &LinearStackConfig, ds: &Dataset, predictions: &[EmbeddingSet]) -> Result<Vec<BaseOutput>> {
        config
            .external
            .iter()
            .map(|id| BaseOutput::from_prediction_set(id, find_embeddings(predictions, id)?, ds))
            .collect()
    }

    pub fn fit(train: &Dataset, sets: &[EmbeddingSet], predictions: &[EmbeddingSet], config: &LinearStackConfig) -> Result<Self> {
        let width = config.presets.len() + config.external.len();
        if width < REFERENCE_STACK_WIDTH {
            log::warn!(
                "linear stacking over {width} base models; the reference stack uses {REFERENCE_STACK_WIDTH}"
            );
        }
        let labels = train.labels()?;
        let mut outputs = Vec::with_capacity(width);
        let mut bases = Vec::with_capacity(config.presets.len());
        let plan = match config.out_of_fold {
            Some(k) => Some(kfold(&labels, k, config.seed)?),
            None => None,
        };
        for preset in &config.presets {
            let full = BasePipeline::fit_preset(preset, train, sets, config.seed)?;
            let out = match &plan {
                None => full.base_output(train, sets)?,
                Some(plan) => {
                    let mut out = BaseOutput {
                        name: preset.clone(),
                        labels: vec![Label::Fake; train.len()],
                        scores: vec![0.0; train.len()],
                    };
                    for f in 0..plan.k {
                        let (tr, held) = plan.fold(f);
                        let fold = BasePipeline::fit_preset(preset, &train.subset(&tr), sets, config.seed)?;
                        let o = fold.base_output(&train.subset(&held), sets)?;
                        for (j, &i) in held.iter().enumerate() {
                            out.labels[i] = o.labels[j];
                            out.scores[i] = o.scores[j];
                        }
                    }
                    out
                }
            };
            outputs.push(out);
            bases.push(full);
        }
        outputs.extend(Self::external_outputs(config, train, predictions)?);
        let meta = stack_base_outputs(&outputs, config.mode)?;
        let stacker = train_linear_stack(meta.view(), &labels, config.mode, config.seed)?;
        Ok(LinearStackPipeline {
            config: config.clone(),
            bases,
            stacker,
        })
    }

    pub fn meta_features(&self, ds: &Dataset, sets: &[EmbeddingSet], predictions: &[EmbeddingSet]) -> Result<Array2<f64>> {
        let mut outputs = self
            .bases
            .iter()
            .map(|b| b.base_output(ds, sets))
            .collect::<Result<Vec<_>>>()?;
        outputs.extend(Self::external_outputs(&self.config, ds, predictions)?);
        stack_base_outputs(&outputs, self.config.mode)
    }

    pub fn predict(&self, ds: &Dataset, sets: &[EmbeddingSet], predictions: &[EmbeddingSet]) -> Result<Vec<Label>> {
        self.stacker.predict(self.meta_features(ds, sets, predictions)?.view())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        for (i, b) in self.bases.iter().enumerate() {
            b.save(&dir.join(format!("base-{i}-{}", b.preset)))?;
        }
        self.stacker.save(&dir.join("stacker"))?;
        io::write_json(&dir.join("pipeline.json"), &self.config)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config: LinearStackConfig = io::read_json(&dir.join("pipeline.json"))?;
        let bases = config
            .presets
            .iter()
            .enumerate()
            .map(|(i, p)| BasePipeline::load(&dir.join(format!("base-{i}-{p}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearStackPipeline {
            config,
            bases,
            stacker: LinearModel::load(&dir.join("stacker"))?,
        })
    }
}

/// Which kind of pipeline a saved directory holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SavedKind {
    Base,
    NnStack,
    LinearStack,
}

pub fn saved_kind(dir: &Path) -> Result<SavedKind> {
    let v: serde_json::Value = io::read_json(&dir.join("pipeline.json"))?;
    if v.get("representation").is_some() {
        Ok(SavedKind::Base)
    } else if v.get("spec").is_some() {
        Ok(SavedKind::NnStack)
    } else if v.get("presets").is_some() {
        Ok(SavedKind::LinearStack)
    } else {
        Err(Error::Format(format!("{}: unrecognized pipeline manifest", dir.display())))
    }
}
