//! Labelled post collections.
//!
//! A corpus file is a headered TSV (canonical) or CSV with the columns `id`,
//! `tweet` and an optional `label`. Labels are read case-insensitively and
//! stored lowercase. When the `id` column is missing, sequential ids starting
//! at 1 are synthesized and the fact is recorded in [`Provenance`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fake,
    Real,
}

impl Label {
    /// Output slot / column index: fake = 0, real = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Fake => 0,
            Label::Real => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 1 {
            Label::Real
        } else {
            Label::Fake
        }
    }

    /// Signed encoding used by the linear models: real = +1, fake = -1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Fake => -1.0,
            Label::Real => 1.0,
        }
    }

    /// `score > 0` is real; ties go to fake.
    pub fn from_score(score: f64) -> Label {
        if score > 0.0 {
            Label::Real
        } else {
            Label::Fake
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "fake",
            Label::Real => "real",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "fake" => Ok(Label::Fake),
            "real" => Ok(Label::Real),
            other => Err(Error::Validation(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
    Merged,
    Derived,
}

impl SplitName {
    /// Guesses the split from a file name (`Constraint_Train.csv` -> train).
    fn infer(path: &Path) -> SplitName {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if name.contains("train") {
            SplitName::Train
        } else if name.contains("val") || name.contains("dev") {
            SplitName::Validation
        } else if name.contains("test") {
            SplitName::Test
        } else {
            SplitName::Derived
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Tsv,
    Csv,
}

impl CorpusFormat {
    fn delimiter(self) -> u8 {
        match self {
            CorpusFormat::Tsv => b'\t',
            CorpusFormat::Csv => b',',
        }
    }

    /// `.csv` files are csv, everything else tsv.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Tsv,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "tsv" => Ok(CorpusFormat::Tsv),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Validation(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub synthesized_ids: bool,
    /// Non-fatal problems found while loading (empty texts).
    pub warnings: Vec<String>,
}

/// Ordered, immutable collection of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    split_name: SplitName,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset, checking id uniqueness and label consistency.
    pub fn new(records: Vec<Record>, split_name: SplitName) -> Result<Self> {
        check_ids(&records)?;
        let labeled = records.iter().filter(|r| r.label.is_some()).count();
        if labeled != 0 && labeled != records.len() {
            return Err(Error::Validation(format!(
                "{labeled} of {} records carry labels; either all or none must",
                records.len()
            )));
        }
        Ok(Dataset {
            records,
            split_name,
            provenance: Provenance::default(),
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn split_name(&self) -> SplitName {
        self.split_name
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.label.is_some())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.text.as_str())
    }

    /// All labels in record order; fails on unlabeled data.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.records
            .iter()
            .map(|r| {
                r.label
                    .ok_or_else(|| Error::State(format!("record {:?} has no label", r.id)))
            })
            .collect()
    }

    /// Records at `indices`, in that order, as a derived dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            split_name: SplitName::Derived,
            provenance: Provenance {
                source: self.provenance.source.clone(),
                synthesized_ids: self.provenance.synthesized_ids,
                warnings: Vec::new(),
            },
        }
    }

    pub fn with_split_name(mut self, split_name: SplitName) -> Self {
        self.split_name = split_name;
        self
    }
}

fn check_ids(records: &[Record]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

/// Reads a corpus file. Row numbers in errors are 1-based data rows (header excluded).
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(true)
        .flexible(false)
        .from_reader(std::io::BufReader::new(file));

    let headers = reader
        .byte_headers()
        .map_err(|e| Error::Format(format!("{}: unreadable header: {e}", path.display())))?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| {
            String::from_utf8_lossy(h)
                .trim_start_matches('\u{feff}')
                .trim()
                .eq_ignore_ascii_case(name)
        })
    };
    let id_col = column("id");
    let text_col = column("tweet").ok_or_else(|| {
        Error::Format(format!("{}: missing required column \"tweet\"", path.display()))
    })?;
    let label_col = column("label");

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (i, row) in reader.byte_records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Format(format!("row {row_no}: {e}")))?;
        let field = |col: usize| -> Result<String> {
            let bytes = row
                .get(col)
                .ok_or_else(|| Error::Format(format!("row {row_no}: missing column {col}")))?;
            String::from_utf8(bytes.to_vec())
                .map_err(|_| Error::Format(format!("row {row_no}: invalid UTF-8")))
        };
        let id = match id_col {
            Some(c) => field(c)?.trim().to_string(),
            None => row_no.to_string(),
        };
        let text = field(text_col)?;
        if text.trim().is_empty() {
            let msg = format!("row {row_no} (id {id:?}): empty text");
            log::warn!("{}: {msg}", path.display());
            warnings.push(msg);
        }
        let label = match label_col {
            Some(c) => {
                let raw = field(c)?;
                if raw.trim().is_empty() {
                    None
                } else {
                    Some(
                        raw.parse::<Label>()
                            .map_err(|e| Error::Validation(format!("row {row_no}: {e}")))?,
                    )
                }
            }
            None => None,
        };
        records.push(Record { id, text, label });
    }

    let mut ds = Dataset::new(records, SplitName::infer(path))?;
    ds.provenance = Provenance {
        source: Some(path.to_path_buf()),
        synthesized_ids: id_col.is_none(),
        warnings,
    };
    Ok(ds)
}

/// Writes `ds` in the same layout [`load_corpus`] reads. The label column is
/// emitted only for labeled datasets.
pub fn export_corpus(ds: &Dataset, path: &Path, format: CorpusFormat) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(format.delimiter())
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    let labeled = ds.is_labeled();
    if labeled {
        writer.write_record(["id", "tweet", "label"])?;
    } else {
        writer.write_record(["id", "tweet"])?;
    }
    for r in ds.records() {
        match r.label {
            Some(l) if labeled => writer.write_record([r.id.as_str(), &r.text, l.as_str()])?,
            _ => writer.write_record([r.id.as_str(), &r.text])?,
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    crate::io::write_atomic(path, &bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub real: usize,
    pub fake: usize,
}

impl LabelDistribution {
    pub fn total(&self) -> usize {
        self.real + self.fake
    }

    pub fn count(&self, label: Label) -> usize {
        match label {
            Label::Real => self.real,
            Label::Fake => self.fake,
        }
    }

    pub fn fraction(&self, label: Label) -> f64 {
        self.count(label) as f64 / self.total() as f64
    }
}

pub fn label_distribution(ds: &Dataset) -> Result<LabelDistribution> {
    if !ds.is_labeled() {
        return Err(Error::State(
            "label distribution requires a non-empty labeled dataset".into(),
        ));
    }
    let mut dist = LabelDistribution { real: 0, fake: 0 };
    for r in ds.records() {
        match r.label {
            Some(Label::Real) => dist.real += 1,
            Some(Label::Fake) => dist.fake += 1,
            None => unreachable!("checked by is_labeled"),
        }
    }
    Ok(dist)
}

/// Concatenates two datasets with disjoint ids.
pub fn merge(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    let ids: HashSet<&str> = a.ids().collect();
    if let Some(dup) = b.ids().find(|id| ids.contains(id)) {
        return Err(Error::Validation(format!(
            "cannot merge datasets: id {dup:?} present in both"
        )));
    }
    let records: Vec<Record> = a.records().iter().chain(b.records()).cloned().collect();
    let mut merged = Dataset::new(records, SplitName::Merged)?;
    merged.provenance.synthesized_ids =
        a.provenance.synthesized_ids || b.provenance.synthesized_ids;
    Ok(merged)
}

/// Maps each id to its position.
pub fn id_index(ds: &Dataset) -> HashMap<&str, usize> {
    ds.ids().enumerate().map(|(i, id)| (id, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn rec(id: &str, label: Option<Label>) -> Record {
        Record {
            id: id.into(),
            text: format!("post {id}"),
            label,
        }
    }

    #[test]
    fn loads_rows_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x.tsv", "id\ttweet\tlabel\n1\ta post\treal\n2\tb post\tFake\n");
        let ds = load_corpus(&p, CorpusFormat::Tsv).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records()[0], Record { id: "1".into(), text: "a post".into(), label: Some(Label::Real) });
        assert_eq!(ds.records()[1].label, Some(Label::Fake));
        assert!(!ds.provenance().synthesized_ids);
    }

    #[test]
    fn csv_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x.csv", "id,tweet,label\n1,\"hello, \"\"world\"\"\",real\n");
        let ds = load_corpus(&p, CorpusFormat::Csv).unwrap();
        assert_eq!(ds.records()[0].text, "hello, \"world\"");
    }

    #[test]
    fn duplicate_id_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x.tsv", "id\ttweet\n7\ta\n8\tb\n7\tc\n");
        match load_corpus(&p, CorpusFormat::Tsv) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "7"),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_tweet_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x.tsv", "id\ttext\n1\ta\n");
        assert!(matches!(load_corpus(&p, CorpusFormat::Tsv), Err(Error::Format(_))));
    }

    #[test]
    fn invalid_utf8_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.tsv");
        std::fs::write(&p, b"id\ttweet\n1\tok\n2\t\xff\xfe\n").unwrap();
        let err = load_corpus(&p, CorpusFormat::Tsv).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }

    #[test]
    fn synthesizes_ids_and_accepts_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "test.tsv", "tweet\nfirst\n\nsecond\n");
        let ds = load_corpus(&p, CorpusFormat::Tsv).unwrap();
        assert_eq!(ds.ids().collect::<Vec<_>>(), vec!["1", "2"]);
        assert!(ds.provenance().synthesized_ids);
        assert!(!ds.is_labeled());
        assert_eq!(ds.split_name(), SplitName::Test);
        assert!(label_distribution(&ds).is_err());
    }

    #[test]
    fn empty_text_is_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x.tsv", "id\ttweet\n1\t\"\"\n2\tb\n");
        let ds = load_corpus(&p, CorpusFormat::Tsv).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.provenance().warnings.len(), 1);
    }

    #[test]
    fn mixed_labels_rejected() {
        let err = Dataset::new(vec![rec("1", Some(Label::Real)), rec("2", None)], SplitName::Derived);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn distribution_of_single_fake() {
        let ds = Dataset::new(vec![rec("1", Some(Label::Fake))], SplitName::Derived).unwrap();
        let d = label_distribution(&ds).unwrap();
        assert_eq!((d.fake, d.real), (1, 0));
        assert_eq!(d.fraction(Label::Fake), 1.0);
    }

    #[test]
    fn merge_rules() {
        let a = Dataset::new(vec![rec("1", Some(Label::Real)), rec("3", Some(Label::Fake))], SplitName::Train).unwrap();
        let b = Dataset::new(vec![rec("3", Some(Label::Real))], SplitName::Validation).unwrap();
        assert!(matches!(merge(&a, &b), Err(Error::Validation(_))));

        let empty = Dataset::new(vec![], SplitName::Derived).unwrap();
        let m = merge(&empty, &a).unwrap();
        assert_eq!(m.records(), a.records());
        assert_eq!(m.split_name(), SplitName::Merged);
    }

    fn label_strategy() -> impl Strategy<Value = Label> {
        prop_oneof![Just(Label::Fake), Just(Label::Real)]
    }

    proptest! {
        #[test]
        fn export_load_round_trip(
            texts in proptest::collection::vec("[^\u{0}]{1,40}", 1..12),
            labels in proptest::collection::vec(label_strategy(), 12),
            csv_format in any::<bool>(),
        ) {
            let records: Vec<Record> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| Record { id: format!("id{i}"), text: t.clone(), label: Some(labels[i]) })
                .collect();
            let ds = Dataset::new(records, SplitName::Derived).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let format = if csv_format { CorpusFormat::Csv } else { CorpusFormat::Tsv };
            let p = dir.path().join("round");
            export_corpus(&ds, &p, format).unwrap();
            let back = load_corpus(&p, format).unwrap();
            prop_assert_eq!(back.records(), ds.records());
        }

        #[test]
        fn distribution_is_permutation_invariant(
            labels in proptest::collection::vec(label_strategy(), 1..50),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let records: Vec<Record> = labels.iter().enumerate().map(|(i, &l)| rec(&i.to_string(), Some(l))).collect();
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut crate::seed::rng(seed, "test"));
            let a = label_distribution(&Dataset::new(records, SplitName::Derived).unwrap()).unwrap();
            let b = label_distribution(&Dataset::new(shuffled, SplitName::Derived).unwrap()).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.total(), labels.len());
            prop_assert!((a.fraction(Label::Real) + a.fraction(Label::Fake) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn merge_size_is_sum(na in 0usize..20, nb in 0usize..20) {
            let a = Dataset::new((0..na).map(|i| rec(&format!("a{i}"), None)).collect(), SplitName::Train).unwrap();
            let b = Dataset::new((0..nb).map(|i| rec(&format!("b{i}"), None)).collect(), SplitName::Validation).unwrap();
            prop_assert_eq!(merge(&a, &b).unwrap().len(), na + nb);
        }
    }
}
