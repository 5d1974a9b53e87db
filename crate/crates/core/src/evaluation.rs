//! Stratified k-fold cross-validation and hyperparameter sweeps.
//!
//! Within each fold the reducer is fitted on the training part only, so
//! held-out vectors never touch the standardization, components or weights.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ann::{self, MlpModel, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{self, Label, LabeledDataset};
use crate::pca::{Reducer, ReductionMode};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    /// Fold index of every sample.
    pub assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Seeded stratified split: each class is shuffled, then all samples are
/// dealt round-robin into `k` folds, healthy first.
pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<FoldSplit> {
    let n = labels.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "cannot split {n} samples into {k} folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; n];
    let mut next = 0;
    for class in [Label::Healthy, Label::Pathological] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldSplit { k, assignments })
}

/// 2×2 confusion counts with pathological as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_positive: usize,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Healthy, Label::Healthy) => self.true_negative += 1,
            (Label::Healthy, Label::Pathological) => self.false_positive += 1,
            (Label::Pathological, Label::Healthy) => self.false_negative += 1,
            (Label::Pathological, Label::Pathological) => self.true_positive += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_negative + self.false_positive + self.false_negative + self.true_positive
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_positive + self.true_negative, self.total())
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.true_negative, self.true_negative + self.false_positive)
    }

    fn merge(&mut self, o: &Confusion) {
        self.true_negative += o.true_negative;
        self.false_positive += o.false_positive;
        self.false_negative += o.false_negative;
        self.true_positive += o.true_positive;
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    pub sensitivity: f64,
    pub specificity: f64,
    pub per_fold: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    /// Seeds the fold split; fold `i` trains with `train.seed + i`.
    pub seed: u64,
    pub mode: ReductionMode,
    pub train: TrainConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            seed: 0,
            mode: ReductionMode::Project,
            train: TrainConfig::default(),
        }
    }
}

/// Everything produced for one held-out fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub reducer: Reducer,
    pub model: MlpModel,
    pub test_indices: Vec<usize>,
    pub predictions: Vec<Label>,
    pub confusion: Confusion,
}

fn check_k(k_features: usize) -> Result<()> {
    if k_features == 0 || k_features > features::FEATURE_LEN {
        return Err(Error::invalid(format!(
            "feature count {k_features} must be in 1..={}",
            features::FEATURE_LEN
        )));
    }
    Ok(())
}

/// Fits the reducer and network on `train` and returns them.
pub fn fit_classifier(
    train: &LabeledDataset,
    k_features: usize,
    mode: ReductionMode,
    cfg: &TrainConfig,
) -> Result<(Reducer, MlpModel)> {
    check_k(k_features)?;
    train.require_both_classes()?;
    let rows = train.rows();
    let reducer = Reducer::fit(&rows, k_features, mode)?;
    let inputs = rows
        .iter()
        .map(|r| reducer.reduce(r))
        .collect::<Result<Vec<_>>>()?;
    let init = ann::init_mlp(reducer.output_dim(), cfg)?;
    let outcome = ann::train(&init, &inputs, train.labels(), cfg)?;
    Ok((reducer, outcome.model))
}

pub fn run_folds(
    dataset: &LabeledDataset,
    split: &FoldSplit,
    k_features: usize,
    hidden: usize,
    cfg: &CvConfig,
) -> Result<Vec<FoldOutcome>> {
    check_k(k_features)?;
    if split.assignments.len() != dataset.len() {
        return Err(Error::invalid("fold split does not match dataset size"));
    }
    (0..split.k)
        .into_par_iter()
        .map(|fold| {
            let train_idx = split.train_indices(fold);
            let test_idx = split.test_indices(fold);
            let train = dataset.subset(&train_idx);
            train.require_both_classes().map_err(|_| {
                Error::invalid(format!("fold {fold}: training portion has a single class"))
            })?;
            let tcfg = TrainConfig {
                hidden,
                seed: cfg.train.seed.wrapping_add(fold as u64),
                ..cfg.train
            };
            let (reducer, model) = fit_classifier(&train, k_features, cfg.mode, &tcfg)?;
            let mut confusion = Confusion::default();
            let mut predictions = Vec::with_capacity(test_idx.len());
            for &i in &test_idx {
                let z = reducer.reduce(dataset.vectors()[i].values())?;
                let p = model.predict(&z)?;
                confusion.record(dataset.labels()[i], p);
                predictions.push(p);
            }
            Ok(FoldOutcome {
                reducer,
                model,
                test_indices: test_idx,
                predictions,
                confusion,
            })
        })
        .collect()
}

pub fn report_from_folds(folds: &[FoldOutcome]) -> EvalReport {
    let mut confusion = Confusion::default();
    for f in folds {
        confusion.merge(&f.confusion);
    }
    EvalReport {
        accuracy: confusion.accuracy(),
        confusion,
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        per_fold: folds.iter().map(|f| f.confusion.accuracy()).collect(),
    }
}

/// Pooled k-fold accuracy of the full reduce + classify pipeline.
pub fn cross_validate(
    dataset: &LabeledDataset,
    k_features: usize,
    hidden: usize,
    cfg: &CvConfig,
) -> Result<EvalReport> {
    dataset.require_both_classes()?;
    let split = kfold_split(dataset.labels(), cfg.folds, cfg.seed)?;
    Ok(report_from_folds(&run_folds(dataset, &split, k_features, hidden, cfg)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: usize,
    pub report: EvalReport,
}

pub fn sweep_hidden(
    dataset: &LabeledDataset,
    k_features: usize,
    hidden_values: &[usize],
    cfg: &CvConfig,
) -> Result<Vec<SweepRow>> {
    if hidden_values.is_empty() {
        return Err(Error::invalid("hidden-unit sweep needs at least one value"));
    }
    hidden_values
        .iter()
        .map(|&h| {
            Ok(SweepRow {
                param: h,
                report: cross_validate(dataset, k_features, h, cfg)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSweep {
    pub rows: Vec<SweepRow>,
    pub best_count: usize,
    /// Loading-selected original features for `best_count`, fitted on the
    /// whole dataset.
    pub best_selection: Vec<usize>,
}

impl FeatureSweep {
    pub fn selection_summary(&self) -> String {
        features::describe_selection(&self.best_selection)
    }
}

pub fn sweep_features(
    dataset: &LabeledDataset,
    feature_counts: &[usize],
    hidden: usize,
    cfg: &CvConfig,
) -> Result<FeatureSweep> {
    if feature_counts.is_empty() {
        return Err(Error::invalid("feature-count sweep needs at least one value"));
    }
    for &k in feature_counts {
        check_k(k)?;
    }
    let rows = feature_counts
        .iter()
        .map(|&k| {
            Ok(SweepRow {
                param: k,
                report: cross_validate(dataset, k, hidden, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // first maximum wins
    let best = rows
        .iter()
        .fold(&rows[0], |b, r| if r.report.accuracy > b.report.accuracy { r } else { b });
    let best_count = best.param;
    let reducer = Reducer::fit(&dataset.rows(), best_count, ReductionMode::Select)?;
    Ok(FeatureSweep {
        rows,
        best_count,
        best_selection: reducer.selected().to_vec(),
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("param,accuracy,sensitivity,specificity\n");
    for r in rows {
        writeln!(
            s,
            "{},{:.6},{:.6},{:.6}",
            r.param, r.report.accuracy, r.report.sensitivity, r.report.specificity
        )
        .unwrap();
    }
    s
}

/// Two-column `param accuracy` data for gnuplot.
pub fn sweep_plot_data(rows: &[SweepRow], param_name: &str) -> String {
    let mut s = format!("# {param_name} accuracy\n");
    for r in rows {
        writeln!(s, "{} {:.6}", r.param, r.report.accuracy).unwrap();
    }
    s
}

/// Writes `<stem>.csv` and `<stem>.dat`.
pub fn write_sweep(stem: impl AsRef<Path>, rows: &[SweepRow], param_name: &str) -> Result<()> {
    let stem = stem.as_ref();
    let csv = stem.with_extension("csv");
    fs::write(&csv, sweep_csv(rows)).map_err(|e| Error::io(&csv, e))?;
    let dat = stem.with_extension("dat");
    fs::write(&dat, sweep_plot_data(rows, param_name)).map_err(|e| Error::io(&dat, e))
}
