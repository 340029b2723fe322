//! Words ranked by how much their weight varies within each class.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label};
use crate::error::{Error, Result};
use crate::lsa::smoothed_idf;
use crate::preprocess::{clean_text, tokenize, CleanConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceInput {
    /// L2-normalized unigram TF-IDF rows.
    #[default]
    Tfidf,
    /// Raw term counts.
    Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    pub vocab_size: usize,
    pub input: VarianceInput,
    pub clean: CleanConfig,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        VarianceConfig {
            vocab_size: 10_000,
            input: VarianceInput::Tfidf,
            clean: CleanConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRanking {
    pub fake: Vec<(String, f64)>,
    pub real: Vec<(String, f64)>,
}

impl ClassRanking {
    pub fn for_class(&self, class: Label) -> &[(String, f64)] {
        match class {
            Label::Fake => &self.fake,
            Label::Real => &self.real,
        }
    }
}

/// Keeps the `vocab_size` words with the highest document frequency, builds
/// one row per post, and ranks words per class by population variance over
/// that class's rows. Ties go to the lexicographically smaller word.
pub fn class_variance_ranking(ds: &Dataset, top_k: usize, cfg: &VarianceConfig) -> Result<ClassRanking> {
    let labels = ds.labels()?;
    for class in [Label::Fake, Label::Real] {
        if !labels.contains(&class) {
            return Err(Error::State(format!("class {class} has no records")));
        }
    }
    let cleaned: Vec<String> = ds.texts().map(|t| clean_text(t, &cfg.clean)).collect();
    let counts: Vec<HashMap<&str, u32>> = cleaned
        .iter()
        .map(|doc| {
            let mut m = HashMap::new();
            for tok in tokenize(doc) {
                *m.entry(tok).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in &counts {
        for &w in doc.keys() {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, usize)> = df.into_iter().collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    vocab.truncate(cfg.vocab_size);
    let n_docs = counts.len();
    let column: HashMap<&str, usize> = vocab.iter().enumerate().map(|(j, (w, _))| (*w, j)).collect();
    let idf: Vec<f64> = vocab.iter().map(|&(_, d)| smoothed_idf(n_docs, d)).collect();

    let rows: Vec<Vec<(usize, f64)>> = counts
        .iter()
        .map(|doc| {
            let mut row: Vec<(usize, f64)> = doc
                .iter()
                .filter_map(|(w, &c)| column.get(w).map(|&j| (j, f64::from(c))))
                .collect();
            if cfg.input == VarianceInput::Tfidf {
                for (j, v) in row.iter_mut() {
                    *v *= idf[*j];
                }
                let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (_, v) in row.iter_mut() {
                        *v /= norm;
                    }
                }
            }
            row
        })
        .collect();

    let rank = |class: Label| -> Vec<(String, f64)> {
        let members: Vec<&Vec<(usize, f64)>> = rows
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r)
            .collect();
        let n = members.len() as f64;
        let mut sum = vec![0.0; vocab.len()];
        let mut nonzero = vec![0usize; vocab.len()];
        for r in &members {
            for &(j, v) in r.iter() {
                sum[j] += v;
                nonzero[j] += 1;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        // zeros contribute mean² each; nonzero entries their squared deviation
        let mut ss: Vec<f64> = (0..vocab.len())
            .map(|j| (members.len() - nonzero[j]) as f64 * mean[j] * mean[j])
            .collect();
        for r in &members {
            for &(j, v) in r.iter() {
                ss[j] += (v - mean[j]).powi(2);
            }
        }
        let mut scored: Vec<(String, f64)> = vocab
            .iter()
            .zip(ss)
            .map(|((w, _), s)| (w.to_string(), s / n))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top_k);
        scored
    };

    Ok(ClassRanking {
        fake: rank(Label::Fake),
        real: rank(Label::Real),
    })
}

/// Fraction of `expected` words found in `ranked`.
pub fn overlap(ranked: &[(String, f64)], expected: &[&str]) -> f64 {
    if expected.is_empty() {
        return 1.0;
    }
    let hits = expected.iter().filter(|w| ranked.iter().any(|(r, _)| r == *w)).count();
    hits as f64 / expected.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Record, SplitName};

    fn ds(rows: &[(&str, Label)]) -> Dataset {
        Dataset::new(
            rows.iter()
                .enumerate()
                .map(|(i, (t, l))| Record { id: i.to_string(), text: t.to_string(), label: Some(*l) })
                .collect(),
            SplitName::Train,
        )
        .unwrap()
    }

    #[test]
    fn single_document_class_ties_lexicographically() {
        let d = ds(&[
            ("zebra apple mango", Label::Fake),
            ("cases deaths", Label::Real),
            ("cases tests", Label::Real),
        ]);
        let r = class_variance_ranking(&d, 100, &VarianceConfig::default()).unwrap();
        assert!(r.fake.iter().all(|(_, v)| *v == 0.0));
        let words: Vec<&str> = r.fake.iter().map(|(w, _)| w.as_str()).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
        // top_k beyond the vocabulary returns everything
        assert_eq!(r.fake.len(), 6);
    }

    #[test]
    fn counts_variance_by_hand() {
        // real rows for "cases": counts {2, 0} -> variance 1; "deaths" {0, 1} -> 0.25
        let d = ds(&[
            ("cure", Label::Fake),
            ("cases cases", Label::Real),
            ("deaths", Label::Real),
        ]);
        let cfg = VarianceConfig { input: VarianceInput::Counts, ..Default::default() };
        let r = class_variance_ranking(&d, 2, &cfg).unwrap();
        assert_eq!(r.real, vec![("cases".to_string(), 1.0), ("deaths".to_string(), 0.25)]);
    }

    #[test]
    fn vocabulary_cap_and_empty_class() {
        let d = ds(&[("a1 b2", Label::Fake), ("a1 c3", Label::Real), ("a1", Label::Real)]);
        let cfg = VarianceConfig { vocab_size: 1, ..Default::default() };
        let r = class_variance_ranking(&d, 10, &cfg).unwrap();
        assert_eq!(r.real.len(), 1);
        assert_eq!(r.real[0].0, "a1");
        let only_fake = ds(&[("x", Label::Fake)]);
        assert!(class_variance_ranking(&only_fake, 10, &cfg).is_err());
    }

    #[test]
    fn overlap_fraction() {
        let ranked = vec![("cure".to_string(), 1.0), ("video".to_string(), 0.5)];
        assert_eq!(overlap(&ranked, &["cure", "trump"]), 0.5);
    }
}
