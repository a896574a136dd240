//! Dataset discovery, loading and hold-out splitting.
//!
//! The on-disk layout is one subdirectory per class with files named
//! `<class> (<n>).png` and mask siblings `<class> (<n>)_mask.png`
//! (plus optional `_mask_1`, `_mask_2`, … for cases annotated with more
//! than one region). Every raw image must have at least one mask; normal
//! cases carry an all-zero mask.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::{ImageTensor, MaskTensor};
use crate::{Error, Result};

/// Diagnostic class of a case. The integer encoding is the one-hot index
/// used by the classifier: benign = 0, malignant = 1, normal = 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Benign,
    Malignant,
    Normal,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Benign, ClassLabel::Malignant, ClassLabel::Normal];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Benign => 0,
            ClassLabel::Malignant => 1,
            ClassLabel::Normal => 2,
        }
    }

    pub fn from_index(idx: usize) -> Result<Self> {
        match idx {
            0 => Ok(ClassLabel::Benign),
            1 => Ok(ClassLabel::Malignant),
            2 => Ok(ClassLabel::Normal),
            other => Err(Error::InvalidInput(format!("unknown class index {other}"))),
        }
    }

    /// Directory name under the dataset root.
    pub fn dir_name(self) -> &'static str {
        match self {
            ClassLabel::Benign => "benign",
            ClassLabel::Malignant => "malignant",
            ClassLabel::Normal => "normal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "benign" | "b" => Ok(ClassLabel::Benign),
            "malignant" | "m" => Ok(ClassLabel::Malignant),
            "normal" | "n" => Ok(ClassLabel::Normal),
            other => Err(Error::InvalidInput(format!("unknown class label '{other}'"))),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// One case on disk: a raw image, its mask file(s) and the class label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub raw_path: PathBuf,
    pub mask_paths: Vec<PathBuf>,
    pub label: ClassLabel,
}

/// A fully decoded case: raw pixels in `[0, 1]`, masks binarized and
/// merged into one, at the original source resolution.
#[derive(Clone, Debug)]
pub struct UltrasoundSample {
    pub id: String,
    pub label: ClassLabel,
    pub raw: ImageTensor,
    pub mask: MaskTensor,
    /// Source resolution before any resampling (height, width).
    pub source_size: (usize, usize),
}

/// Scanned dataset: records in deterministic order plus per-class counts.
#[derive(Clone, Debug, Default)]
pub struct DatasetIndex {
    records: Vec<SampleRecord>,
    counts: [usize; 3],
}

impl DatasetIndex {
    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.counts[label.index()]
    }

    pub fn class_counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Writes the index as a line-delimited JSON manifest
    /// (`{"id", "label", "raw", "masks"}` per line).
    pub fn write_manifest(&self, mut w: impl Write) -> Result<()> {
        for rec in &self.records {
            let line = serde_json::json!({
                "id": rec.id,
                "label": rec.label.dir_name(),
                "raw": rec.raw_path,
                "masks": rec.mask_paths,
            });
            writeln!(w, "{line}").map_err(|e| Error::io("<manifest>", e))?;
        }
        Ok(())
    }
}

/// Walks `root_dir` and pairs every raw image with all of its masks.
///
/// Records come back sorted by class directory then numeric id, so the
/// index is identical across runs and platforms. Raw images without a
/// mask (and masks without a raw) are collected and reported together.
pub fn scan_dataset(root_dir: &Path) -> Result<DatasetIndex> {
    let mut records = Vec::new();
    let mut counts = [0usize; 3];
    let mut problems = Vec::new();

    for label in ClassLabel::ALL {
        let class_dir = root_dir.join(label.dir_name());
        if !class_dir.is_dir() {
            continue;
        }
        let mut raws: BTreeMap<String, PathBuf> = BTreeMap::new();
        let mut masks: BTreeMap<String, Vec<(usize, PathBuf)>> = BTreeMap::new();

        let entries = std::fs::read_dir(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&class_dir, e))?;
            let path = entry.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let is_image = path
                .extension()
                .and_then(|e| e.to_str())
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false);
            if !is_image {
                continue;
            }
            match split_mask_suffix(stem) {
                Some((base, mask_no)) => masks
                    .entry(base.to_string())
                    .or_default()
                    .push((mask_no, path)),
                None => {
                    raws.insert(stem.to_string(), path);
                }
            }
        }

        for (base, mask_list) in &masks {
            if !raws.contains_key(base) {
                for (_, p) in mask_list {
                    problems.push(format!("mask without raw image: {}", p.display()));
                }
            }
        }

        let mut class_records = Vec::new();
        for (base, raw_path) in raws {
            match masks.remove(&base) {
                Some(mut mask_list) => {
                    mask_list.sort_by_key(|(no, _)| *no);
                    class_records.push(SampleRecord {
                        id: base,
                        raw_path,
                        mask_paths: mask_list.into_iter().map(|(_, p)| p).collect(),
                        label,
                    });
                }
                None => problems.push(format!(
                    "raw image without any mask: {}",
                    raw_path.display()
                )),
            }
        }

        class_records.sort_by_key(|r| numeric_id(&r.id));
        counts[label.index()] = class_records.len();
        records.extend(class_records);
    }

    if !problems.is_empty() {
        return Err(Error::DatasetLayout { problems });
    }
    Ok(DatasetIndex { records, counts })
}

/// Splits `<base>_mask` / `<base>_mask_<k>` stems into (base, mask ordinal).
/// The unnumbered `_mask` sorts first as ordinal 0; `_mask_1` as 1, etc.
fn split_mask_suffix(stem: &str) -> Option<(&str, usize)> {
    if let Some(base) = stem.strip_suffix("_mask") {
        return Some((base, 0));
    }
    let idx = stem.rfind("_mask_")?;
    let (base, tail) = (&stem[..idx], &stem[idx + "_mask_".len()..]);
    tail.parse::<usize>().ok().map(|no| (base, no))
}

/// Numeral inside `<class> (<n>)`, used for ordering; falls back to 0.
fn numeric_id(id: &str) -> usize {
    let open = id.rfind('(');
    let close = id.rfind(')');
    match (open, close) {
        (Some(o), Some(c)) if c > o => id[o + 1..c].trim().parse().unwrap_or(0),
        _ => 0,
    }
}

/// Decodes one record: raw image to `H×W×3` floats, all masks binarized
/// at 0.5 and merged by pixelwise union.
pub fn load_sample(record: &SampleRecord) -> Result<UltrasoundSample> {
    let raw = ImageTensor::open(&record.raw_path)?;
    let (h, w) = (raw.height(), raw.width());
    let mut merged: Option<MaskTensor> = None;
    for mask_path in &record.mask_paths {
        let mask = MaskTensor::open_binarized(mask_path)?;
        if (mask.height(), mask.width()) != (h, w) {
            return Err(Error::shape(
                format!("mask {} vs raw {}", mask_path.display(), record.raw_path.display()),
                format!("{h}x{w}"),
                format!("{}x{}", mask.height(), mask.width()),
            ));
        }
        merged = Some(match merged {
            Some(acc) => acc.union(&mask)?,
            None => mask,
        });
    }
    let mask = merged.ok_or_else(|| {
        Error::InvalidInput(format!("record '{}' has no mask files", record.id))
    })?;
    Ok(UltrasoundSample {
        id: record.id.clone(),
        label: record.label,
        raw,
        mask,
        source_size: (h, w),
    })
}

/// A shuffled hold-out partition of the index.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: Vec<SampleRecord>,
    pub test: Vec<SampleRecord>,
    pub ratio: f64,
    pub seed: u64,
}

/// Uniform shuffle with the given seed, then a prefix/suffix split with
/// `|train| = round(ratio · N)`. Not stratified.
pub fn split_holdout(index: &DatasetIndex, ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut records = index.records.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    let n_train = ((records.len() as f64) * ratio).round() as usize;
    let test = records.split_off(n_train.min(records.len()));
    Ok(DatasetSplit {
        train: records,
        test,
        ratio,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(path: &Path) {
        // 1x1 black PNG so decoding succeeds where needed.
        image::GrayImage::new(1, 1).save(path).unwrap();
    }

    #[test]
    fn scan_pairs_multi_mask_records() {
        let dir = tempfile::tempdir().unwrap();
        let benign = dir.path().join("benign");
        std::fs::create_dir(&benign).unwrap();
        touch(&benign.join("benign (1).png"));
        touch(&benign.join("benign (1)_mask.png"));
        touch(&benign.join("benign (1)_mask_1.png"));

        let index = scan_dataset(dir.path()).unwrap();
        assert_eq!(index.len(), 1);
        let rec = &index.records()[0];
        assert_eq!(rec.mask_paths.len(), 2);
        assert!(rec.mask_paths[0].to_string_lossy().ends_with("benign (1)_mask.png"));
        assert!(rec.mask_paths[1].to_string_lossy().ends_with("benign (1)_mask_1.png"));
        assert_eq!(index.count(ClassLabel::Benign), 1);
    }

    #[test]
    fn scan_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let index = scan_dataset(dir.path()).unwrap();
        assert!(index.is_empty());
        assert_eq!(index.class_counts(), [0, 0, 0]);
    }

    #[test]
    fn scan_reports_orphan_raw() {
        let dir = tempfile::tempdir().unwrap();
        let normal = dir.path().join("normal");
        std::fs::create_dir(&normal).unwrap();
        touch(&normal.join("normal (1).png"));

        let err = scan_dataset(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("normal (1).png"), "got: {msg}");
    }

    #[test]
    fn scan_orders_by_numeric_id() {
        let dir = tempfile::tempdir().unwrap();
        let benign = dir.path().join("benign");
        std::fs::create_dir(&benign).unwrap();
        for n in [10, 2, 1] {
            touch(&benign.join(format!("benign ({n}).png")));
            touch(&benign.join(format!("benign ({n})_mask.png")));
        }
        let index = scan_dataset(dir.path()).unwrap();
        let ids: Vec<_> = index.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["benign (1)", "benign (2)", "benign (10)"]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let mut index = DatasetIndex::default();
        for n in 0..780 {
            index.records.push(SampleRecord {
                id: format!("benign ({n})"),
                raw_path: PathBuf::from(format!("{n}.png")),
                mask_paths: vec![],
                label: ClassLabel::Benign,
            });
        }
        index.counts[0] = 780;
        let a = split_holdout(&index, 0.8, 15).unwrap();
        assert_eq!(a.train.len(), 624);
        assert_eq!(a.test.len(), 156);
        let b = split_holdout(&index, 0.8, 15).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let index = DatasetIndex::default();
        assert!(split_holdout(&index, 0.0, 1).is_err());
        assert!(split_holdout(&index, 1.0, 1).is_err());
    }

    #[test]
    fn label_encoding_is_stable() {
        assert_eq!(ClassLabel::Benign.index(), 0);
        assert_eq!(ClassLabel::Malignant.index(), 1);
        assert_eq!(ClassLabel::Normal.index(), 2);
        for label in ClassLabel::ALL {
            assert_eq!(ClassLabel::from_index(label.index()).unwrap(), label);
        }
    }

    #[test]
    fn manifest_is_line_delimited() {
        let dir = tempfile::tempdir().unwrap();
        let benign = dir.path().join("benign");
        std::fs::create_dir(&benign).unwrap();
        touch(&benign.join("benign (1).png"));
        touch(&benign.join("benign (1)_mask.png"));
        let index = scan_dataset(dir.path()).unwrap();
        let mut buf = Vec::new();
        index.write_manifest(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("\"benign (1)\""));
    }
}
