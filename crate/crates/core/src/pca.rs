//! Principal component analysis on z-scored features.
//!
//! The covariance eigenproblem is solved with cyclic Jacobi rotations. Two
//! reduction modes share one fitted model: `Project` maps a vector onto the
//! top-k components, `Select` keeps the k original features with the largest
//! eigenvalue-weighted loadings.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigensolver. Runs until the off-diagonal Frobenius norm is
/// below `1e-12` times the matrix norm.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> Result<SymmetricEigen> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("matrix is not square"));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let norm: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let off_norm = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[i][j] * a[i][j];
            }
        }
        s.sqrt()
    };

    let threshold = JACOBI_TOL * norm.max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while off_norm(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::invalid("Jacobi eigensolver did not converge"));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        eigenvalues: order.iter().map(|&i| a[i][i]).collect(),
        eigenvectors: order
            .iter()
            .map(|&i| (0..n).map(|k| v[k][i]).collect())
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcaOptions {
    /// Divide centered features by their sample standard deviation.
    pub standardize: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        Self { standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Rebuilds a model from stored parts, checking dimensions.
    pub fn from_parts(
        mean: Vec<f64>,
        scale: Vec<f64>,
        components: Vec<Vec<f64>>,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        let d = mean.len();
        if d == 0 || scale.len() != d {
            return Err(Error::invalid("mean and scale must be nonempty and equal length"));
        }
        if components.is_empty() || components.len() != eigenvalues.len() {
            return Err(Error::invalid("need one eigenvalue per component"));
        }
        if components.iter().any(|c| c.len() != d) {
            return Err(Error::invalid("component length differs from feature dimension"));
        }
        if scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("scale entries must be positive"));
        }
        Ok(Self {
            mean,
            scale,
            components,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// `(v - mean) / scale`.
    pub fn standardize(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        let z = self.standardize(v)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Maps reduced coordinates back to feature space.
    pub fn inverse_transform(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                actual: y.len(),
            });
        }
        let mut z = vec![0.0; self.dim()];
        for (c, &w) in self.components.iter().zip(y) {
            for (zj, cj) in z.iter_mut().zip(c) {
                *zj += w * cj;
            }
        }
        Ok(z.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((z, m), s)| m + s * z)
            .collect())
    }

    /// Original-feature indices ranked by `Σ_i λ_i · components[i][j]²`,
    /// ties to the lower index.
    pub fn select_features_by_loadings(&self, m: usize) -> Result<Vec<usize>> {
        if m == 0 || m > self.dim() {
            return Err(Error::invalid(format!(
                "cannot select {m} of {} features",
                self.dim()
            )));
        }
        let scores: Vec<f64> = (0..self.dim())
            .map(|j| {
                self.components
                    .iter()
                    .zip(&self.eigenvalues)
                    .map(|(c, &l)| l * c[j] * c[j])
                    .sum()
            })
            .collect();
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx.truncate(m);
        Ok(idx)
    }
}

/// Fits PCA on `rows` keeping the top `k` components.
///
/// `k` may be as large as the feature dimension; components beyond the data
/// rank carry zero eigenvalues.
pub fn fit_pca(rows: &[&[f64]], k: usize, opts: PcaOptions) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 samples, got {n}")));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    if k == 0 || k > d {
        return Err(Error::invalid(format!(
            "number of components {k} must be in 1..={d}"
        )));
    }

    let nf = n as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            if !opts.standardize {
                return 1.0;
            }
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (nf - 1.0);
            let sd = var.sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();

    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..d).map(|j| (r[j] - mean[j]) / scale[j]).collect())
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s = z.iter().map(|r| r[i] * r[j]).sum::<f64>() / (nf - 1.0);
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }

    let eig = jacobi_eigen(&cov)?;
    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (mut vec, lambda) in eig.eigenvectors.into_iter().zip(eig.eigenvalues).take(k) {
        let lead = vec
            .iter()
            .cloned()
            .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
            .unwrap_or(0.0);
        if lead < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(vec);
        eigenvalues.push(if lambda < 0.0 { 0.0 } else { lambda });
    }
    PcaModel::from_parts(mean, scale, components, eigenvalues)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReductionMode {
    #[default]
    Project,
    Select,
}

impl fmt::Display for ReductionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionMode::Project => "project",
            ReductionMode::Select => "select",
        })
    }
}

impl FromStr for ReductionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "project" => Ok(ReductionMode::Project),
            "select" => Ok(ReductionMode::Select),
            other => Err(Error::invalid(format!(
                "unknown reduction mode {other:?}, expected project or select"
            ))),
        }
    }
}

/// A fitted PCA model plus the reduction mode applied with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reducer {
    model: PcaModel,
    mode: ReductionMode,
    selected: Vec<usize>,
}

impl Reducer {
    pub fn new(model: PcaModel, mode: ReductionMode) -> Result<Self> {
        let selected = match mode {
            ReductionMode::Project => Vec::new(),
            ReductionMode::Select => model.select_features_by_loadings(model.k())?,
        };
        Ok(Self {
            model,
            mode,
            selected,
        })
    }

    pub fn fit(rows: &[&[f64]], k: usize, mode: ReductionMode) -> Result<Self> {
        Self::new(fit_pca(rows, k, PcaOptions::default())?, mode)
    }

    pub fn model(&self) -> &PcaModel {
        &self.model
    }

    pub fn mode(&self) -> ReductionMode {
        self.mode
    }

    /// Feature indices kept in `Select` mode; empty in `Project` mode.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn output_dim(&self) -> usize {
        self.model.k()
    }

    pub fn reduce(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            ReductionMode::Project => self.model.transform(v),
            ReductionMode::Select => {
                let z = self.model.standardize(v)?;
                Ok(self.selected.iter().map(|&j| z[j]).collect())
            }
        }
    }
}
