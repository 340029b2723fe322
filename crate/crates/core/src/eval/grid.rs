//! Protocol evaluation (train/dev or k-fold) and grid search over configs.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1_score, Averaging};
use super::split::{kfold, tdt_split_labels};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Protocol {
    /// Fit on the train part, score on dev; the test part is left untouched.
    Tdt,
    Cv { k: usize },
}

impl Protocol {
    pub const CV10: Protocol = Protocol::Cv { k: 10 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolScore {
    pub protocol: Protocol,
    pub seed: u64,
    pub averaging: Averaging,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

/// `fit_predict(train, eval)` trains on the `train` indices and returns
/// predictions for the `eval` indices, in order.
pub fn evaluate<F>(labels: &[Label], protocol: Protocol, seed: u64, averaging: Averaging, fit_predict: F) -> Result<ProtocolScore>
where
    F: Fn(&[usize], &[usize]) -> Result<Vec<Label>>,
{
    let parts: Vec<(Vec<usize>, Vec<usize>)> = match protocol {
        Protocol::Tdt => {
            let s = tdt_split_labels(labels, seed, true)?;
            vec![(s.train, s.dev)]
        }
        Protocol::Cv { k } => {
            let plan = kfold(labels, k, seed)?;
            (0..k).map(|f| plan.fold(f)).collect()
        }
    };
    let mut fold_scores = Vec::with_capacity(parts.len());
    for (train, held) in &parts {
        let pred = fit_predict(train, held)?;
        let truth: Vec<Label> = held.iter().map(|&i| labels[i]).collect();
        fold_scores.push(f1_score(&truth, &pred, averaging)?);
    }
    let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
    Ok(ProtocolScore {
        protocol,
        seed,
        averaging,
        fold_scores,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry<C> {
    /// Position in the input grid.
    pub index: usize,
    pub config: C,
    pub score: Option<ProtocolScore>,
    pub error: Option<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome<C> {
    /// Successful runs, best first; ties keep grid order.
    pub ranked: Vec<GridEntry<C>>,
    pub failures: Vec<GridEntry<C>>,
}

impl<C: Serialize> GridOutcome<C> {
    pub fn best(&self) -> Option<&GridEntry<C>> {
        self.ranked.first()
    }

    pub fn write_table(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }
}

/// Evaluates every config under `protocol`, concurrently. A config whose
/// trainer errors or panics is recorded in `failures` and skipped.
pub fn grid_search<C, F>(
    grid: &[C],
    labels: &[Label],
    protocol: Protocol,
    seed: u64,
    averaging: Averaging,
    fit_predict: F,
) -> Result<GridOutcome<C>>
where
    C: Clone + Send + Sync,
    F: Fn(&C, &[usize], &[usize]) -> Result<Vec<Label>> + Sync,
{
    if grid.is_empty() {
        return Err(Error::State("grid search needs at least one config".into()));
    }
    let entries: Vec<GridEntry<C>> = grid
        .par_iter()
        .enumerate()
        .map(|(index, config)| {
            let start = Instant::now();
            let run = catch_unwind(AssertUnwindSafe(|| {
                evaluate(labels, protocol, seed, averaging, |tr, ev| fit_predict(config, tr, ev))
            }));
            let (score, error) = match run {
                Ok(Ok(s)) => (Some(s), None),
                Ok(Err(e)) => (None, Some(e.to_string())),
                Err(panic) => {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".to_string());
                    (None, Some(format!("panicked: {msg}")))
                }
            };
            if let Some(e) = &error {
                log::warn!("grid config {index} failed: {e}");
            }
            GridEntry {
                index,
                config: config.clone(),
                score,
                error,
                wall_seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    let (mut ranked, failures): (Vec<_>, Vec<_>) = entries.into_iter().partition(|e| e.score.is_some());
    let mean = |e: &GridEntry<C>| e.score.as_ref().map_or(f64::NEG_INFINITY, |s| s.mean);
    ranked.sort_by(|a, b| mean(b).total_cmp(&mean(a)).then(a.index.cmp(&b.index)));
    Ok(GridOutcome { ranked, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<Label> {
        (0..n).map(|i| if i % 2 == 0 { Label::Real } else { Label::Fake }).collect()
    }

    #[test]
    fn oracle_predictor_scores_one() {
        let ls = labels(40);
        let oracle = |_: &[usize], ev: &[usize]| Ok(ev.iter().map(|&i| ls[i]).collect());
        let tdt = evaluate(&ls, Protocol::Tdt, 1, Averaging::Weighted, oracle).unwrap();
        assert_eq!((tdt.fold_scores.len(), tdt.mean), (1, 1.0));
        let cv = evaluate(&ls, Protocol::CV10, 1, Averaging::Weighted, oracle).unwrap();
        assert_eq!(cv.fold_scores, vec![1.0; 10]);
    }

    #[test]
    fn held_out_indices_never_in_training() {
        let ls = labels(30);
        evaluate(&ls, Protocol::Cv { k: 5 }, 9, Averaging::Macro, |tr, ev| {
            assert!(ev.iter().all(|i| !tr.contains(i)));
            Ok(vec![Label::Fake; ev.len()])
        })
        .unwrap();
    }

    #[test]
    fn ranking_ties_and_failures() {
        let ls = labels(32);
        // config value = how many eval rows to get right; negative fails, 99 panics
        let grid = vec![0i32, 5, -1, 5, 99, 100];
        let out = grid_search(&grid, &ls, Protocol::Tdt, 3, Averaging::Weighted, |&c, _, ev| {
            if c < 0 {
                return Err(Error::State("bad config".into()));
            }
            if c == 99 {
                panic!("boom");
            }
            Ok(ev
                .iter()
                .enumerate()
                .map(|(j, &i)| if (j as i32) < c { ls[i] } else { Label::from_index(1 - ls[i].index()) })
                .collect())
        })
        .unwrap();
        let order: Vec<usize> = out.ranked.iter().map(|e| e.index).collect();
        assert_eq!(order, vec![5, 1, 3, 0]);
        assert_eq!(out.failures.len(), 2);
        assert_eq!(out.ranked.len(), grid.len() - out.failures.len());
        assert!(out.failures.iter().any(|f| f.error.as_deref().unwrap().contains("boom")));
    }

    #[test]
    fn single_config_is_best_and_table_persists() {
        let ls = labels(20);
        let out = grid_search(&["only"], &ls, Protocol::Cv { k: 4 }, 0, Averaging::Weighted, |_, _, ev| {
            Ok(vec![Label::Real; ev.len()])
        })
        .unwrap();
        assert_eq!(out.best().unwrap().config, "only");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("grid.json");
        out.write_table(&p).unwrap();
        let back: serde_json::Value = io::read_json(&p).unwrap();
        assert_eq!(back["ranked"][0]["config"], "only");
        assert!(grid_search::<u8, _>(&[], &ls, Protocol::Tdt, 0, Averaging::Weighted, |_, _, _| Ok(vec![])).is_err());
    }
}
