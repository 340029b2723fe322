//! Three-file format for externally computed dense vectors.
//!
//! An embedding set stored under prefix `p` consists of
//!
//! * `p.json`: the [`EmbeddingManifest`],
//! * `p.ids`: one id per line, in row order,
//! * `p.bin`: `count × dim` little-endian `f32` or `f64` values, row-major.
//!
//! The same format carries external per-post prediction columns with
//! `dim = 1` (a decision value) or `dim = 2` (fake and real scores).

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub model_id: String,
    pub dim: usize,
    pub count: usize,
    pub dtype: Dtype,
    pub preprocessing_id: String,
    /// Resolved encoder checkpoint, when the exporter knows it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vectors {
    F32(Array2<f32>),
    F64(Array2<f64>),
}

impl Vectors {
    pub fn dim(&self) -> (usize, usize) {
        match self {
            Vectors::F32(m) => m.dim(),
            Vectors::F64(m) => m.dim(),
        }
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Vectors::F32(_) => Dtype::F32,
            Vectors::F64(_) => Dtype::F64,
        }
    }

    fn row_is_finite(&self, i: usize) -> bool {
        match self {
            Vectors::F32(m) => m.row(i).iter().all(|v| v.is_finite()),
            Vectors::F64(m) => m.row(i).iter().all(|v| v.is_finite()),
        }
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            Vectors::F32(m) => f64::from(m[[i, j]]),
            Vectors::F64(m) => m[[i, j]],
        }
    }

    fn to_le_bytes(&self) -> Vec<u8> {
        match self {
            Vectors::F32(m) => io::f32s_to_le_bytes(&m.iter().copied().collect::<Vec<_>>()),
            Vectors::F64(m) => io::f64s_to_le_bytes(&m.iter().copied().collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    manifest: EmbeddingManifest,
    ids: Vec<String>,
    vectors: Vectors,
}

impl EmbeddingSet {
    /// Validates and assembles a set. `manifest.count`, `manifest.dim` and
    /// `manifest.dtype` must describe `vectors`.
    pub fn new(manifest: EmbeddingManifest, ids: Vec<String>, vectors: Vectors) -> Result<Self> {
        let (rows, cols) = vectors.dim();
        if manifest.dim == 0 {
            return Err(Error::Format("embedding dim must be positive".into()));
        }
        if rows != manifest.count || cols != manifest.dim || ids.len() != manifest.count {
            return Err(Error::Format(format!(
                "manifest declares {}x{} but payload is {rows}x{cols} with {} ids",
                manifest.count,
                manifest.dim,
                ids.len()
            )));
        }
        if vectors.dtype() != manifest.dtype {
            return Err(Error::Format(format!(
                "manifest dtype {:?} does not match payload {:?}",
                manifest.dtype,
                vectors.dtype()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if id.contains('\n') || id.contains('\r') {
                return Err(Error::Validation(format!("id {id:?} contains a line break")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (i, id) in ids.iter().enumerate() {
            if !vectors.row_is_finite(i) {
                return Err(Error::Data(format!("non-finite value in vector for id {id:?}")));
            }
        }
        Ok(EmbeddingSet {
            manifest,
            ids,
            vectors,
        })
    }

    /// Convenience constructor for `f64` vectors.
    pub fn from_f64(
        model_id: &str,
        preprocessing_id: &str,
        ids: Vec<String>,
        vectors: Array2<f64>,
    ) -> Result<Self> {
        let (count, dim) = vectors.dim();
        Self::new(
            EmbeddingManifest {
                model_id: model_id.into(),
                dim,
                count,
                dtype: Dtype::F64,
                preprocessing_id: preprocessing_id.into(),
                checkpoint: None,
            },
            ids,
            Vectors::F64(vectors),
        )
    }

    pub fn manifest(&self) -> &EmbeddingManifest {
        &self.manifest
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &Vectors {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// SHA-256 of the payload bytes, lowercase hex.
    pub fn checksum(&self) -> String {
        hex(&Sha256::digest(self.vectors.to_le_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Accepts either the bare prefix or any of the three file names.
pub fn prefix_of(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for ext in [".json", ".ids", ".bin"] {
        if let Some(stripped) = s.strip_suffix(ext) {
            return PathBuf::from(stripped);
        }
    }
    path.to_path_buf()
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let prefix = prefix_of(path);
    let manifest: EmbeddingManifest = io::read_json(&io::with_suffix(&prefix, ".json"))?;
    let ids_raw = io::read_file(&io::with_suffix(&prefix, ".ids"))?;
    let ids_text = String::from_utf8(ids_raw)
        .map_err(|_| Error::Format(format!("{}.ids is not valid UTF-8", prefix.display())))?;
    let ids: Vec<String> = ids_text.lines().map(str::to_string).collect();
    let payload = io::read_file(&io::with_suffix(&prefix, ".bin"))?;

    let expected = manifest.count * manifest.dim * manifest.dtype.size();
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "{}.bin holds {} bytes; manifest ({} x {} {:?}) requires {expected}",
            prefix.display(),
            payload.len(),
            manifest.count,
            manifest.dim,
            manifest.dtype
        )));
    }
    let shape = (manifest.count, manifest.dim);
    let vectors = match manifest.dtype {
        Dtype::F32 => Vectors::F32(
            Array2::from_shape_vec(shape, io::le_bytes_to_f32s(&payload)?).expect("length checked"),
        ),
        Dtype::F64 => Vectors::F64(
            Array2::from_shape_vec(shape, io::le_bytes_to_f64s(&payload)?).expect("length checked"),
        ),
    };
    EmbeddingSet::new(manifest, ids, vectors)
}

pub fn write_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let prefix = prefix_of(path);
    io::write_atomic(&io::with_suffix(&prefix, ".bin"), &set.vectors.to_le_bytes())?;
    let mut ids = String::new();
    for id in &set.ids {
        ids.push_str(id);
        ids.push('\n');
    }
    io::write_atomic(&io::with_suffix(&prefix, ".ids"), ids.as_bytes())?;
    io::write_json(&io::with_suffix(&prefix, ".json"), &set.manifest)
}

/// Rows of `set` reordered to follow `ds`, widened to `f64`.
pub fn align(set: &EmbeddingSet, ds: &Dataset) -> Result<Array2<f64>> {
    let index: HashMap<&str, usize> = set
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let missing: Vec<&str> = ds.ids().filter(|id| !index.contains_key(id)).collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(10).copied().collect();
        return Err(Error::Validation(format!(
            "{} dataset ids missing from embedding set {:?}: {}{}",
            missing.len(),
            set.manifest.model_id,
            shown.join(", "),
            if missing.len() > 10 { ", ..." } else { "" }
        )));
    }
    let dim = set.manifest.dim;
    let mut out = Array2::zeros((ds.len(), dim));
    for (row, id) in ds.ids().enumerate() {
        let src = index[id];
        for j in 0..dim {
            out[[row, j]] = set.vectors.value(src, j);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Record, SplitName};
    use ndarray::array;
    use proptest::prelude::*;

    fn ds(ids: &[&str]) -> Dataset {
        Dataset::new(
            ids.iter()
                .map(|id| Record { id: id.to_string(), text: "t".into(), label: None })
                .collect(),
            SplitName::Derived,
        )
        .unwrap()
    }

    fn manifest(dim: usize, count: usize, dtype: Dtype) -> EmbeddingManifest {
        EmbeddingManifest {
            model_id: "test-encoder".into(),
            dim,
            count,
            dtype,
            preprocessing_id: "none".into(),
            checkpoint: None,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let v = array![[1.0, -0.0, 1e-300, 3.5], [f64::MIN_POSITIVE, 2.0, -7.25, 0.1], [9.0, 8.0, 7.0, 6.0]];
        let set = EmbeddingSet::from_f64("m", "p", vec!["c".into(), "a".into(), "b".into()], v).unwrap();
        let p = dir.path().join("emb");
        write_embeddings(&set, &p).unwrap();
        let back = read_embeddings(&p).unwrap();
        assert_eq!(back.ids(), set.ids());
        match (back.vectors(), set.vectors()) {
            (Vectors::F64(a), Vectors::F64(b)) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            _ => panic!("dtype changed"),
        }
        assert_eq!(back.checksum(), set.checksum());
    }

    #[test]
    fn f32_stays_f32() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet::new(
            manifest(2, 1, Dtype::F32),
            vec!["x".into()],
            Vectors::F32(array![[0.1f32, 0.2]]),
        )
        .unwrap();
        let p = dir.path().join("e32");
        write_embeddings(&set, &p).unwrap();
        let back = read_embeddings(&io::with_suffix(&p, ".json")).unwrap();
        assert_eq!(back, set);
        assert!(matches!(back.vectors(), Vectors::F32(_)));
    }

    #[test]
    fn empty_set() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet::new(manifest(768, 0, Dtype::F32), vec![], Vectors::F32(Array2::zeros((0, 768)))).unwrap();
        let p = dir.path().join("empty");
        write_embeddings(&set, &p).unwrap();
        assert!(read_embeddings(&p).unwrap().is_empty());
    }

    #[test]
    fn short_rows_are_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad");
        io::write_json(&io::with_suffix(&p, ".json"), &manifest(768, 2, Dtype::F32)).unwrap();
        std::fs::write(io::with_suffix(&p, ".ids"), "a\nb\n").unwrap();
        std::fs::write(io::with_suffix(&p, ".bin"), vec![0u8; 2 * 767 * 4]).unwrap();
        assert!(matches!(read_embeddings(&p), Err(Error::Format(_))));
    }

    #[test]
    fn nan_names_the_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nan");
        io::write_json(&io::with_suffix(&p, ".json"), &manifest(2, 2, Dtype::F64)).unwrap();
        std::fs::write(io::with_suffix(&p, ".ids"), "ok\nbroken\n").unwrap();
        std::fs::write(io::with_suffix(&p, ".bin"), io::f64s_to_le_bytes(&[1.0, 2.0, 3.0, f64::NAN])).unwrap();
        match read_embeddings(&p) {
            Err(Error::Data(msg)) => assert!(msg.contains("broken"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn align_reorders_and_reports_missing() {
        let set = EmbeddingSet::from_f64("m", "p", vec!["b".into(), "a".into()], array![[2.0], [1.0]]).unwrap();
        assert_eq!(align(&set, &ds(&["a", "b"])).unwrap(), array![[1.0], [2.0]]);
        let err = align(&set, &ds(&["a", "zz"])).unwrap_err().to_string();
        assert!(err.contains("zz"), "{err}");
    }

    proptest! {
        #[test]
        fn align_ignores_source_order(n in 1usize..15, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let ids: Vec<String> = (0..n).map(|i| format!("id{i}")).collect();
            let v = Array2::from_shape_fn((n, 3), |(i, j)| (i * 3 + j) as f64);
            let set = EmbeddingSet::from_f64("m", "p", ids.clone(), v.clone()).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut crate::seed::rng(seed, "test"));
            let pv = Array2::from_shape_fn((n, 3), |(i, j)| v[[perm[i], j]]);
            let pids = perm.iter().map(|&i| ids[i].clone()).collect();
            let pset = EmbeddingSet::from_f64("m", "p", pids, pv).unwrap();
            let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let target = ds(&id_refs);
            prop_assert_eq!(align(&set, &target).unwrap(), align(&pset, &target).unwrap());
        }
    }
}
