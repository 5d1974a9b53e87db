//! Combined PCA + MLP classifier and its text file format.
//!
//! ```text
//! VPMODEL 1
//! pca <mode> <dim> <k>
//! mean <dim values>
//! scale <dim values>
//! eigenvalues <k values>
//! components <k*dim values, row-major>
//! mlp <input> <hidden>
//! w1 <hidden*input values, row-major>
//! b1 <hidden values>
//! w2 <hidden values>
//! b2 <1 value>
//! ```
//!
//! Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ann::MlpModel;
use crate::error::{Error, Result};
use crate::features::Label;
use crate::pca::{PcaModel, Reducer, ReductionMode};

pub const MAGIC: &str = "VPMODEL 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub reducer: Reducer,
    pub mlp: MlpModel,
}

impl Classifier {
    pub fn new(reducer: Reducer, mlp: MlpModel) -> Result<Self> {
        if reducer.output_dim() != mlp.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: reducer.output_dim(),
                actual: mlp.input_dim(),
            });
        }
        Ok(Self { reducer, mlp })
    }

    /// Probability of the pathological class for a raw feature vector.
    pub fn probability(&self, features: &[f64]) -> Result<f64> {
        self.mlp.forward(&self.reducer.reduce(features)?)
    }

    pub fn classify(&self, features: &[f64]) -> Result<(Label, f64)> {
        let p = self.probability(features)?;
        let label = if p > 0.5 {
            Label::Pathological
        } else {
            Label::Healthy
        };
        Ok((label, p))
    }

    pub fn to_text(&self) -> String {
        let pca = self.reducer.model();
        let mut s = String::new();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "pca {} {} {}", self.reducer.mode(), pca.dim(), pca.k()).unwrap();
        write_values(&mut s, "mean", pca.mean().iter());
        write_values(&mut s, "scale", pca.scale().iter());
        write_values(&mut s, "eigenvalues", pca.eigenvalues().iter());
        write_values(&mut s, "components", pca.components().iter().flatten());
        writeln!(s, "mlp {} {}", self.mlp.input_dim(), self.mlp.hidden()).unwrap();
        write_values(&mut s, "w1", self.mlp.w1.iter().flatten());
        write_values(&mut s, "b1", self.mlp.b1.iter());
        write_values(&mut s, "w2", self.mlp.w2.iter());
        write_values(&mut s, "b2", std::iter::once(&self.mlp.b2));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::MalformedModel(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(bad(format!("first line must be {MAGIC:?}")));
        }

        let header = next_fields(&mut lines, "pca")?;
        if header.len() != 3 {
            return Err(bad("pca header needs mode, dim and k".into()));
        }
        let mode: ReductionMode = header[0]
            .parse()
            .map_err(|e: Error| bad(e.to_string()))?;
        let dim = parse_count(header[1], "pca dim")?;
        let k = parse_count(header[2], "pca k")?;
        let mean = read_values(&mut lines, "mean", dim)?;
        let scale = read_values(&mut lines, "scale", dim)?;
        let eigenvalues = read_values(&mut lines, "eigenvalues", k)?;
        let flat = read_values(&mut lines, "components", k * dim)?;
        let components = flat.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        let pca = PcaModel::from_parts(mean, scale, components, eigenvalues)
            .map_err(|e| bad(e.to_string()))?;
        let reducer = Reducer::new(pca, mode).map_err(|e| bad(e.to_string()))?;

        let header = next_fields(&mut lines, "mlp")?;
        if header.len() != 2 {
            return Err(bad("mlp header needs input and hidden sizes".into()));
        }
        let input = parse_count(header[0], "mlp input")?;
        let hidden = parse_count(header[1], "mlp hidden")?;
        let w1 = read_values(&mut lines, "w1", hidden * input)?;
        let b1 = read_values(&mut lines, "b1", hidden)?;
        let w2 = read_values(&mut lines, "w2", hidden)?;
        let b2 = read_values(&mut lines, "b2", 1)?[0];
        if let Some(extra) = lines.next() {
            return Err(bad(format!("unexpected trailing line {extra:?}")));
        }
        let mlp = MlpModel {
            w1: w1.chunks(input.max(1)).map(<[f64]>::to_vec).collect(),
            b1,
            w2,
            b2,
        };
        mlp.validate().map_err(|e| bad(e.to_string()))?;
        Self::new(reducer, mlp).map_err(|e| bad(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn write_values<'a>(s: &mut String, key: &str, values: impl Iterator<Item = &'a f64>) {
    s.push_str(key);
    for v in values {
        write!(s, " {v:.16e}").unwrap();
    }
    s.push('\n');
}

fn next_fields<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = lines
        .next()
        .ok_or_else(|| Error::MalformedModel(format!("missing {key} line")))?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some(key) {
        return Err(Error::MalformedModel(format!(
            "expected {key} line, found {line:?}"
        )));
    }
    Ok(fields.collect())
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .ok()
        .filter(|&n: &usize| n > 0)
        .ok_or_else(|| Error::MalformedModel(format!("{what} {s:?} is not a positive integer")))
}

fn read_values<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    key: &str,
    count: usize,
) -> Result<Vec<f64>> {
    let fields = next_fields(lines, key)?;
    if fields.len() != count {
        return Err(Error::MalformedModel(format!(
            "{key} has {} values, expected {count}",
            fields.len()
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::MalformedModel(format!("{key}: bad number {f:?}")))
        })
        .collect()
}
