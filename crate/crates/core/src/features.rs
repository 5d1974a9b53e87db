//! The 139-dimensional feature vector and labeled datasets.
//!
//! Layout: `[0..13)` averaged MFCC c0..c12, `[13..76)` energy of wavelet
//! packet nodes 1..63, `[76..139)` Shannon entropy of the same nodes. Nodes
//! are numbered breadth-first from the root, 1-based.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal_io::{self, AudioSignal};
use crate::spectral::{self, NUM_CEPSTRA};
use crate::wavelet::{self, DEFAULT_DEPTH};

pub const NUM_NODES: usize = 63;
pub const FEATURE_LEN: usize = NUM_CEPSTRA + 2 * NUM_NODES;
pub const ENERGY_OFFSET: usize = NUM_CEPSTRA;
pub const ENTROPY_OFFSET: usize = NUM_CEPSTRA + NUM_NODES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Healthy = 0,
    Pathological = 1,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Healthy),
            1 => Some(Label::Pathological),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn target(self) -> f64 {
        self as u8 as f64
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Healthy => "healthy",
            Label::Pathological => "pathological",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_LEN {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_LEN,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature {} is not finite", feature_name(i))));
        }
        if let Some(i) = energies_of(&values).iter().position(|&e| e < 0.0) {
            return Err(Error::invalid(format!("energy of node {} is negative", i + 1)));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mfcc(&self) -> &[f64] {
        &self.values[..ENERGY_OFFSET]
    }

    pub fn energies(&self) -> &[f64] {
        energies_of(&self.values)
    }

    pub fn entropies(&self) -> &[f64] {
        &self.values[ENTROPY_OFFSET..]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn energies_of(values: &[f64]) -> &[f64] {
    &values[ENERGY_OFFSET..ENTROPY_OFFSET]
}

/// Which block a feature index belongs to, with its 1-based position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Mfcc(usize),
    Energy(usize),
    Entropy(usize),
}

pub fn feature_kind(index: usize) -> FeatureKind {
    assert!(index < FEATURE_LEN, "feature index {index} out of range");
    if index < ENERGY_OFFSET {
        FeatureKind::Mfcc(index + 1)
    } else if index < ENTROPY_OFFSET {
        FeatureKind::Energy(index - ENERGY_OFFSET + 1)
    } else {
        FeatureKind::Entropy(index - ENTROPY_OFFSET + 1)
    }
}

/// Column name used in the feature CSV, e.g. `energy_17`.
pub fn feature_name(index: usize) -> String {
    match feature_kind(index) {
        FeatureKind::Mfcc(i) => format!("mfcc_{i}"),
        FeatureKind::Energy(i) => format!("energy_{i}"),
        FeatureKind::Entropy(i) => format!("entropy_{i}"),
    }
}

fn compress_ranges(mut idx: Vec<usize>) -> String {
    idx.sort_unstable();
    let mut parts = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let start = idx[i];
        let mut end = start;
        while i + 1 < idx.len() && idx[i + 1] == end + 1 {
            i += 1;
            end = idx[i];
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join(", ")
    }
}

/// Summarizes selected feature indices by block, e.g.
/// `MFCC coefficients: 1-8, 10-13; energy at WP nodes: 9-10, 17; ...`.
pub fn describe_selection(indices: &[usize]) -> String {
    let (mut mfcc, mut energy, mut entropy) = (Vec::new(), Vec::new(), Vec::new());
    for &i in indices {
        match feature_kind(i) {
            FeatureKind::Mfcc(k) => mfcc.push(k),
            FeatureKind::Energy(k) => energy.push(k),
            FeatureKind::Entropy(k) => entropy.push(k),
        }
    }
    format!(
        "MFCC coefficients: {}; energy at WP nodes: {}; entropy at WP nodes: {}",
        compress_ranges(mfcc),
        compress_ranges(energy),
        compress_ranges(entropy)
    )
}

pub fn extract_features(signal: &AudioSignal) -> Result<FeatureVector> {
    let mfcc = spectral::mfcc_average(signal)?;
    let tree = wavelet::wp_decompose(signal.samples(), DEFAULT_DEPTH)?;
    let mut values = Vec::with_capacity(FEATURE_LEN);
    values.extend_from_slice(&mfcc.coeffs);
    values.extend(tree.nodes().iter().map(|n| n.energy()));
    values.extend(tree.nodes().iter().map(|n| n.shannon_entropy()));
    FeatureVector::new(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    vectors: Vec<FeatureVector>,
    labels: Vec<Label>,
    ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(vectors: Vec<FeatureVector>, labels: Vec<Label>, ids: Vec<String>) -> Result<Self> {
        if vectors.len() != labels.len() || vectors.len() != ids.len() {
            return Err(Error::invalid(format!(
                "dataset lists differ in length: {} vectors, {} labels, {} ids",
                vectors.len(),
                labels.len(),
                ids.len()
            )));
        }
        Ok(Self {
            vectors,
            labels,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.vectors.iter().map(FeatureVector::values).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let path = self.labels.iter().filter(|&&l| l == Label::Pathological).count();
        (self.labels.len() - path, path)
    }

    /// Fails unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        let (healthy, path) = self.class_counts();
        if healthy == 0 || path == 0 {
            return Err(Error::invalid(format!(
                "dataset needs both classes, has {healthy} healthy and {path} pathological"
            )));
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..FEATURE_LEN).map(feature_name));
        w.write_record(&header).map_err(csv_err)?;
        for ((v, l), id) in self.vectors.iter().zip(&self.labels).zip(&self.ids) {
            let mut row = vec![id.clone(), l.as_u8().to_string()];
            row.extend(v.values().iter().map(|x| format!("{x:.16e}")));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let fail = |message: String| Error::Csv {
            path: path.to_path_buf(),
            message,
        };
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
        let header = r.headers().map_err(|e| fail(e.to_string()))?;
        let expected: Vec<String> = ["id".to_string(), "label".to_string()]
            .into_iter()
            .chain((0..FEATURE_LEN).map(feature_name))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(fail("header does not match id,label,mfcc_1..entropy_63".into()));
        }
        let (mut vectors, mut labels, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| fail(e.to_string()))?;
            let row = line + 2;
            let label = rec[1]
                .parse::<u8>()
                .ok()
                .and_then(Label::from_u8)
                .ok_or_else(|| fail(format!("row {row}: label {:?} is not 0 or 1", &rec[1])))?;
            let values = rec
                .iter()
                .skip(2)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fail(format!("row {row}: {e}")))?;
            let fv = FeatureVector::new(values).map_err(|e| fail(format!("row {row}: {e}")))?;
            ids.push(rec[0].to_string());
            labels.push(label);
            vectors.push(fv);
        }
        Self::new(vectors, labels, ids)
    }
}

/// One input of a batch extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: Label,
}

#[derive(Debug)]
pub struct ExtractionFailure {
    pub id: String,
    pub path: PathBuf,
    pub error: Error,
}

/// Result of a batch extraction: the successes plus a manifest of failures.
#[derive(Debug)]
pub struct Extraction {
    pub dataset: LabeledDataset,
    pub failures: Vec<ExtractionFailure>,
}

/// Extracts features for every entry in parallel, preserving input order.
/// Fails only if no file could be processed.
pub fn extract_dataset(entries: &[DatasetEntry]) -> Result<Extraction> {
    let results: Vec<Result<FeatureVector>> = entries
        .par_iter()
        .map(|e| signal_io::read_wav(&e.path).and_then(|s| extract_features(&s)))
        .collect();

    let (mut vectors, mut labels, mut ids) = (Vec::new(), Vec::new(), Vec::new());
    let mut failures = Vec::new();
    for (entry, res) in entries.iter().zip(results) {
        match res {
            Ok(v) => {
                vectors.push(v);
                labels.push(entry.label);
                ids.push(entry.id.clone());
            }
            Err(error) => failures.push(ExtractionFailure {
                id: entry.id.clone(),
                path: entry.path.clone(),
                error,
            }),
        }
    }
    if vectors.is_empty() {
        return Err(Error::AllFailed(entries.len()));
    }
    Ok(Extraction {
        dataset: LabeledDataset::new(vectors, labels, ids)?,
        failures,
    })
}
