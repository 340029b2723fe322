//! Latent semantic analysis over mixed word and character n-grams.
//!
//! Fitting selects the `n/2` strongest word n-grams and `n/2` strongest
//! character n-grams (ranked by summed TF-IDF mass over the corpus), builds a
//! row-normalized TF-IDF matrix, and reduces it to `d` dimensions with a
//! randomized SVD. Inputs are cleaned texts (see [`crate::preprocess`]).

pub mod linalg;
pub mod sparse;
pub mod svd;

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
pub use sparse::CsrMatrix;
pub use svd::{fit_svd, RsvdParams, SvdBasis};

pub const FEATURE_GRID: [usize; 7] = [500, 1250, 2500, 5000, 10000, 15000, 20000];
pub const DIMENSION_GRID: [usize; 5] = [64, 128, 256, 512, 768];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GramKind {
    Word,
    Char,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VocabEntry {
    pub kind: GramKind,
    pub gram: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaConfig {
    /// Total number of n-gram features.
    pub n: usize,
    /// Target dimension.
    pub d: usize,
    /// Inclusive word n-gram sizes; `None` disables the word family.
    pub word_ngram_range: Option<(usize, usize)>,
    /// Inclusive character n-gram sizes; `None` disables the character family.
    pub char_ngram_range: Option<(usize, usize)>,
    /// Take character n-grams across word boundaries (spaces included).
    #[serde(default = "default_true")]
    pub char_across_spaces: bool,
    pub seed: u64,
    #[serde(default)]
    pub svd: RsvdParams,
}

fn default_true() -> bool {
    true
}

impl LsaConfig {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        LsaConfig {
            n,
            d,
            word_ngram_range: Some((1, 2)),
            char_ngram_range: Some((1, 3)),
            char_across_spaces: true,
            seed,
            svd: RsvdParams::default(),
        }
    }

    /// Best single-model configuration: 2500 features reduced to 512 dimensions.
    pub fn best_single(seed: u64) -> Self {
        Self::new(2500, 512, seed)
    }

    /// Configuration feeding the neural stack: 2500 features reduced to 256.
    pub fn stacking(seed: u64) -> Self {
        Self::new(2500, 256, seed)
    }

    fn families(&self) -> Vec<(GramKind, (usize, usize))> {
        let mut f = Vec::new();
        if let Some(r) = self.word_ngram_range {
            f.push((GramKind::Word, r));
        }
        if let Some(r) = self.char_ngram_range {
            f.push((GramKind::Char, r));
        }
        f
    }

    fn validate(&self) -> Result<()> {
        let families = self.families();
        if families.is_empty() {
            return Err(Error::State("no n-gram family enabled".into()));
        }
        if families.len() == 2 && !self.n.is_multiple_of(2) {
            return Err(Error::State(format!("n = {} must be even", self.n)));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::State("n and d must be positive".into()));
        }
        for (_, (lo, hi)) in families {
            if lo == 0 || lo > hi {
                return Err(Error::State(format!("invalid n-gram range ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// The 7 × 5 = 35 `(n, d)` pairs of the LSA search grid, `n`-major.
pub fn grid_candidates() -> Vec<(usize, usize)> {
    FEATURE_GRID
        .iter()
        .flat_map(|&n| DIMENSION_GRID.iter().map(move |&d| (n, d)))
        .collect()
}

/// Selected n-grams with their IDF weights, word family first.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    idf: Vec<f64>,
    index: HashMap<VocabEntry, usize>,
    word_range: Option<(usize, usize)>,
    char_range: Option<(usize, usize)>,
    char_across_spaces: bool,
    /// Shrinkage notices from fitting.
    pub warnings: Vec<String>,
}

impl Vocabulary {
    fn from_parts(
        entries: Vec<VocabEntry>,
        idf: Vec<f64>,
        cfg: &LsaConfig,
        warnings: Vec<String>,
    ) -> Self {
        let index = entries
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        Vocabulary {
            entries,
            idf,
            index,
            word_range: cfg.word_ngram_range,
            char_range: cfg.char_ngram_range,
            char_across_spaces: cfg.char_across_spaces,
            warnings,
        }
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn column(&self, kind: GramKind, gram: &str) -> Option<usize> {
        self.index
            .get(&VocabEntry {
                kind,
                gram: gram.to_string(),
            })
            .copied()
    }

    fn doc_counts(&self, doc: &str) -> Vec<(usize, f64)> {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        let mut add = |kind, grams: HashMap<String, u32>| {
            for (g, c) in grams {
                if let Some(&col) = self.index.get(&VocabEntry { kind, gram: g }) {
                    *counts.entry(col).or_insert(0.0) += f64::from(c);
                }
            }
        };
        if let Some(r) = self.word_range {
            add(GramKind::Word, word_ngrams(doc, r));
        }
        if let Some(r) = self.char_range {
            add(GramKind::Char, char_ngrams(doc, r, self.char_across_spaces));
        }
        counts.into_iter().collect()
    }
}

/// Word n-gram counts (tokens joined by a single space).
pub fn word_ngrams(doc: &str, (lo, hi): (usize, usize)) -> HashMap<String, u32> {
    let tokens: Vec<&str> = doc.split_whitespace().collect();
    let mut out = HashMap::new();
    for n in lo..=hi {
        for w in tokens.windows(n) {
            *out.entry(w.join(" ")).or_insert(0) += 1;
        }
    }
    out
}

/// Character n-gram counts over the string, or within each token when
/// `across_spaces` is false.
pub fn char_ngrams(doc: &str, (lo, hi): (usize, usize), across_spaces: bool) -> HashMap<String, u32> {
    let mut out = HashMap::new();
    let mut count = |chars: &[char]| {
        for n in lo..=hi {
            for w in chars.windows(n) {
                *out.entry(w.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
    };
    if across_spaces {
        let chars: Vec<char> = doc.chars().collect();
        count(&chars);
    } else {
        for t in doc.split_whitespace() {
            let chars: Vec<char> = t.chars().collect();
            count(&chars);
        }
    }
    out
}

/// Smoothed inverse document frequency.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Chooses the vocabulary. Each enabled family is ranked on its own by the
/// sum over documents of the family's L2-normalized TF-IDF row, ties broken
/// lexicographically, and the top `n/2` grams are kept (`n` when only one
/// family is enabled).
pub fn fit_vocabulary<S: AsRef<str>>(docs: &[S], cfg: &LsaConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    if docs.len() < 2 {
        return Err(Error::State(format!(
            "vocabulary fitting needs at least 2 documents, got {}",
            docs.len()
        )));
    }
    let families = cfg.families();
    let per_family = cfg.n / families.len();
    let n_docs = docs.len();

    let mut entries = Vec::with_capacity(cfg.n);
    let mut idf = Vec::with_capacity(cfg.n);
    let mut warnings = Vec::new();
    for (kind, range) in families {
        let counts: Vec<HashMap<String, u32>> = docs
            .iter()
            .map(|d| match kind {
                GramKind::Word => word_ngrams(d.as_ref(), range),
                GramKind::Char => char_ngrams(d.as_ref(), range, cfg.char_across_spaces),
            })
            .collect();

        let mut df: HashMap<&str, usize> = HashMap::new();
        for c in &counts {
            for g in c.keys() {
                *df.entry(g.as_str()).or_insert(0) += 1;
            }
        }
        let idf_of: HashMap<&str, f64> = df
            .iter()
            .map(|(g, &f)| (*g, smoothed_idf(n_docs, f)))
            .collect();

        let mut mass: HashMap<&str, f64> = HashMap::with_capacity(df.len());
        for c in &counts {
            // Sorted so the floating-point sums do not depend on hash order.
            let mut row: Vec<(&str, f64)> = c
                .iter()
                .map(|(g, &tf)| (g.as_str(), f64::from(tf) * idf_of[g.as_str()]))
                .collect();
            row.sort_unstable_by(|a, b| a.0.cmp(b.0));
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (g, v) in row {
                    *mass.entry(g).or_insert(0.0) += v / norm;
                }
            }
        }

        let mut ranked: Vec<(&str, f64)> = mass.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if ranked.len() < per_family {
            let msg = format!(
                "only {} distinct {kind:?} n-grams available, fewer than the requested {per_family}",
                ranked.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        for (g, _) in ranked.into_iter().take(per_family) {
            idf.push(idf_of[g]);
            entries.push(VocabEntry {
                kind,
                gram: g.to_string(),
            });
        }
    }
    Ok(Vocabulary::from_parts(entries, idf, cfg, warnings))
}

/// Raw counts times IDF, each row scaled to unit L2 norm (empty rows stay zero).
pub fn tfidf_transform<S: AsRef<str>>(vocab: &Vocabulary, docs: &[S]) -> CsrMatrix {
    let rows: Vec<Vec<(usize, f64)>> = docs
        .iter()
        .map(|d| {
            let mut row: Vec<(usize, f64)> = vocab
                .doc_counts(d.as_ref())
                .into_iter()
                .map(|(c, tf)| (c, tf * vocab.idf[c]))
                .collect();
            row.sort_unstable_by_key(|&(c, _)| c);
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(vocab.len(), rows).expect("columns come from the vocabulary")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsaModel {
    pub config: LsaConfig,
    pub vocabulary: Vocabulary,
    /// `n × d` projection basis.
    pub basis: Array2<f64>,
    pub singular_values: Array1<f64>,
}

impl LsaModel {
    pub fn fit<S: AsRef<str>>(docs: &[S], cfg: &LsaConfig) -> Result<Self> {
        let vocabulary = fit_vocabulary(docs, cfg)?;
        let x = tfidf_transform(&vocabulary, docs);
        let SvdBasis {
            basis,
            singular_values,
        } = fit_svd(&x, cfg.d, cfg.seed, cfg.svd)?;
        Ok(LsaModel {
            config: cfg.clone(),
            vocabulary,
            basis,
            singular_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// TF-IDF followed by projection.
    pub fn transform<S: AsRef<str>>(&self, docs: &[S]) -> Result<Array2<f64>> {
        project(self, &tfidf_transform(&self.vocabulary, docs))
    }

    pub fn save(&self, prefix: &Path) -> Result<()> {
        let n = self.vocabulary.len();
        let d = self.dim();
        let manifest = LsaManifest {
            format_version: 1,
            config: self.config.clone(),
            vocabulary: self.vocabulary.entries.clone(),
            idf_len: n,
            basis_rows: n,
            basis_cols: d,
            singular_values_len: d,
        };
        let mut block = Vec::with_capacity(n + n * d + d);
        block.extend_from_slice(&self.vocabulary.idf);
        block.extend(self.basis.iter().copied());
        block.extend(self.singular_values.iter().copied());
        io::write_atomic(&io::with_suffix(prefix, ".bin"), &io::f64s_to_le_bytes(&block))?;
        io::write_json(&io::with_suffix(prefix, ".json"), &manifest)
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        let m: LsaManifest = io::read_json(&io::with_suffix(prefix, ".json"))?;
        let values = io::le_bytes_to_f64s(&io::read_file(&io::with_suffix(prefix, ".bin"))?)?;
        let expected = m.idf_len + m.basis_rows * m.basis_cols + m.singular_values_len;
        if values.len() != expected
            || m.vocabulary.len() != m.idf_len
            || m.basis_rows != m.idf_len
            || m.singular_values_len != m.basis_cols
        {
            return Err(Error::Format(format!(
                "LSA model {}: manifest lengths do not match the {}-value binary block",
                prefix.display(),
                values.len()
            )));
        }
        let (idf, rest) = values.split_at(m.idf_len);
        let (basis, sv) = rest.split_at(m.basis_rows * m.basis_cols);
        let vocabulary = Vocabulary::from_parts(m.vocabulary, idf.to_vec(), &m.config, Vec::new());
        Ok(LsaModel {
            config: m.config,
            vocabulary,
            basis: Array2::from_shape_vec((m.basis_rows, m.basis_cols), basis.to_vec())
                .expect("length checked"),
            singular_values: Array1::from(sv.to_vec()),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LsaManifest {
    format_version: u32,
    config: LsaConfig,
    vocabulary: Vec<VocabEntry>,
    idf_len: usize,
    basis_rows: usize,
    basis_cols: usize,
    singular_values_len: usize,
}

/// `x · basis`.
pub fn project(model: &LsaModel, x: &CsrMatrix) -> Result<Array2<f64>> {
    if x.ncols() != model.basis.nrows() {
        return Err(Error::Shape(format!(
            "TF-IDF matrix has {} columns but the model expects {}",
            x.ncols(),
            model.basis.nrows()
        )));
    }
    x.mul_dense(model.basis.view())
}
