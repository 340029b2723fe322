//! Seeded train/dev/test splits and k-fold plans, stratified by label.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label, SplitName};
use crate::error::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.75;
pub const DEV_FRACTION: f64 = 0.1875;
pub const MIN_TDT_RECORDS: usize = 16;

/// Shuffled record order. When stratified, each class is shuffled on its own
/// and the classes are interleaved by fractional rank so every prefix keeps
/// the parent's class mix.
fn seeded_order(labels: &[Label], seed: u64, stratified: bool) -> Vec<usize> {
    let mut rng = crate::seed::rng(seed, crate::seed::SPLIT);
    if !stratified {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        return order;
    }
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(labels.len());
    for class in [Label::Fake, Label::Real] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n = members.len() as f64;
        for (rank, &i) in members.iter().enumerate() {
            keyed.push(((rank as f64 + 0.5) / n, class.index(), i));
        }
    }
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TdtSplit {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl TdtSplit {
    pub fn datasets(&self, ds: &Dataset) -> (Dataset, Dataset, Dataset) {
        let part = |idx: &[usize], name| ds.subset(idx).with_split_name(name);
        (
            part(&self.train, SplitName::Train),
            part(&self.dev, SplitName::Validation),
            part(&self.test, SplitName::Test),
        )
    }
}

/// Cuts a labeled dataset into 75% / 18.75% / 6.25%. Subset sizes are
/// round(0.75 N), round(0.1875 N) and the remainder.
pub fn tdt_split(ds: &Dataset, seed: u64, stratified: bool) -> Result<TdtSplit> {
    tdt_split_labels(&ds.labels()?, seed, stratified)
}

pub fn tdt_split_labels(labels: &[Label], seed: u64, stratified: bool) -> Result<TdtSplit> {
    let n = labels.len();
    if n < MIN_TDT_RECORDS {
        return Err(Error::State(format!(
            "a train/dev/test split needs at least {MIN_TDT_RECORDS} records, got {n}"
        )));
    }
    let order = seeded_order(labels, seed, stratified);
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let n_dev = (DEV_FRACTION * n as f64).round() as usize;
    Ok(TdtSplit {
        train: order[..n_train].to_vec(),
        dev: order[n_train..n_train + n_dev].to_vec(),
        test: order[n_train + n_dev..].to_vec(),
        seed,
        stratified,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold id per record index.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// (training indices, held-out indices) for `fold`.
    pub fn fold(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut held = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                held.push(i);
            } else {
                train.push(i);
            }
        }
        (train, held)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified folds over the labels; records are dealt round-robin from the
/// interleaved order so fold sizes differ by at most one.
pub fn kfold(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::State(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::State(format!("k = {k} exceeds the {} records", labels.len())));
    }
    let order = seeded_order(labels, seed, true);
    let mut assignments = vec![0; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}
