//! Wavelet packet decomposition with Daubechies-10 filters.
//!
//! Both the low and high band of every node are split again, so a depth-5
//! tree holds `1 + 2 + 4 + 8 + 16 + 32 = 63` nodes. Boundaries are periodic,
//! which keeps every level an orthonormal transform of the input.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DB10_TAPS: usize = 20;
pub const DEFAULT_DEPTH: usize = 5;

/// db10 scaling (reconstruction lowpass) filter.
const DB10_LOWPASS: [f64; DB10_TAPS] = [
    0.026670057900555554,
    0.1881768000776915,
    0.5272011889317256,
    0.6884590394536035,
    0.2811723436605775,
    -0.24984642432731538,
    -0.19594627437737705,
    0.12736934033579325,
    0.09305736460357235,
    -0.07139414716639708,
    -0.029457536821875813,
    0.033212674059341,
    0.0036065535669561697,
    -0.010733175483330575,
    0.001395351747052901,
    0.001992405295185056,
    -0.0006858566949597116,
    -0.00011646685512928545,
    9.358867032006959e-05,
    -1.3264202894521244e-05,
];

const FILTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilterPair {
    pub lowpass: [f64; DB10_TAPS],
    pub highpass: [f64; DB10_TAPS],
}

impl WaveletFilterPair {
    /// Builds the pair from a lowpass filter using `g[i] = (-1)^i h[L-1-i]`.
    pub fn from_lowpass(lowpass: [f64; DB10_TAPS]) -> Self {
        let mut highpass = [0.0; DB10_TAPS];
        for (i, g) in highpass.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *g = sign * lowpass[DB10_TAPS - 1 - i];
        }
        Self { lowpass, highpass }
    }

    /// Checks the orthonormal-filter identities, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        let h = &self.lowpass;
        let g = &self.highpass;
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > FILTER_TOL {
            return Err(Error::invalid(format!("lowpass sums to {sum}, not sqrt(2)")));
        }
        let energy: f64 = h.iter().map(|x| x * x).sum();
        if (energy - 1.0).abs() > FILTER_TOL {
            return Err(Error::invalid(format!("lowpass energy is {energy}, not 1")));
        }
        for i in 0..DB10_TAPS {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            if g[i] != sign * h[DB10_TAPS - 1 - i] {
                return Err(Error::invalid(format!("highpass tap {i} breaks the mirror relation")));
            }
        }
        let gsum: f64 = g.iter().sum();
        if gsum.abs() > FILTER_TOL {
            return Err(Error::invalid(format!("highpass sums to {gsum}, not 0")));
        }
        for m in 1..DB10_TAPS / 2 {
            let dot: f64 = (0..DB10_TAPS - 2 * m).map(|i| h[i] * h[i + 2 * m]).sum();
            if dot.abs() > FILTER_TOL {
                return Err(Error::invalid(format!("lowpass shift {m} correlation is {dot}")));
            }
        }
        Ok(())
    }
}

/// The db10 filter pair. Validated once on first use.
pub fn db10_filters() -> &'static WaveletFilterPair {
    static FILTERS: OnceLock<WaveletFilterPair> = OnceLock::new();
    FILTERS.get_or_init(|| {
        let pair = WaveletFilterPair::from_lowpass(DB10_LOWPASS);
        if let Err(e) = pair.validate() {
            panic!("embedded db10 coefficients are corrupt: {e}");
        }
        pair
    })
}

/// Circular convolution with dyadic downsampling:
/// `y[k] = Σ_i f[i] · x[(2k + i) mod n]`.
pub fn wp_step(x: &[f64], filter: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "wavelet step needs an even length of at least 2, got {n}"
        )));
    }
    Ok((0..n / 2)
        .map(|k| {
            filter
                .iter()
                .enumerate()
                .map(|(i, &f)| f * x[(2 * k + i) % n])
                .sum()
        })
        .collect())
}

/// Adjoint of [`wp_step`] for one band, accumulated into `out`.
fn wp_step_adjoint(coeffs: &[f64], filter: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (k, &c) in coeffs.iter().enumerate() {
        for (i, &f) in filter.iter().enumerate() {
            out[(2 * k + i) % n] += f * c;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WpNode {
    pub level: usize,
    pub position: usize,
    pub coeffs: Vec<f64>,
}

impl WpNode {
    pub fn energy(&self) -> f64 {
        node_energy(&self.coeffs)
    }

    pub fn shannon_entropy(&self) -> f64 {
        node_shannon_entropy(&self.coeffs)
    }
}

/// Breadth-first index of node `(level, position)`.
pub fn node_index(level: usize, position: usize) -> usize {
    (1 << level) - 1 + position
}

/// Full wavelet packet tree stored in breadth-first (natural) order.
#[derive(Debug, Clone, PartialEq)]
pub struct WpTree {
    depth: usize,
    nodes: Vec<WpNode>,
}

impl WpTree {
    /// Assembles a tree from nodes in breadth-first order, checking the shape.
    pub fn from_nodes(depth: usize, nodes: Vec<WpNode>) -> Result<Self> {
        let expected = (1 << (depth + 1)) - 1;
        if nodes.len() != expected {
            return Err(Error::invalid(format!(
                "depth-{depth} tree needs {expected} nodes, got {}",
                nodes.len()
            )));
        }
        let root_len = nodes[0].coeffs.len();
        if root_len == 0 || root_len % (1 << depth) != 0 {
            return Err(Error::invalid(format!(
                "root length {root_len} is not a positive multiple of {}",
                1 << depth
            )));
        }
        for level in 0..=depth {
            for position in 0..1 << level {
                let node = &nodes[node_index(level, position)];
                if node.level != level || node.position != position {
                    return Err(Error::invalid(format!(
                        "node at index {} is labelled ({}, {})",
                        node_index(level, position),
                        node.level,
                        node.position
                    )));
                }
                if node.coeffs.len() != root_len >> level {
                    return Err(Error::invalid(format!(
                        "node ({level}, {position}) has {} coefficients, expected {}",
                        node.coeffs.len(),
                        root_len >> level
                    )));
                }
            }
        }
        Ok(Self { depth, nodes })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[WpNode] {
        &self.nodes
    }

    pub fn node(&self, level: usize, position: usize) -> &WpNode {
        &self.nodes[node_index(level, position)]
    }

    pub fn level(&self, level: usize) -> &[WpNode] {
        let start = node_index(level, 0);
        &self.nodes[start..start + (1 << level)]
    }

    pub fn leaves(&self) -> &[WpNode] {
        self.level(self.depth)
    }

    pub fn leaves_mut(&mut self) -> &mut [WpNode] {
        let start = node_index(self.depth, 0);
        let count = 1 << self.depth;
        &mut self.nodes[start..start + count]
    }

    pub fn signal_len(&self) -> usize {
        self.nodes[0].coeffs.len()
    }
}

/// Decomposes `samples` to `depth` levels. The input is truncated to the
/// largest multiple of `2^depth`.
pub fn wp_decompose(samples: &[f64], depth: usize) -> Result<WpTree> {
    let block = 1usize << depth;
    let usable = samples.len() / block * block;
    if usable == 0 {
        return Err(Error::invalid(format!(
            "signal of {} samples is shorter than 2^{depth} = {block}",
            samples.len()
        )));
    }
    let filters = db10_filters();
    let mut nodes = Vec::with_capacity(2 * block - 1);
    nodes.push(WpNode {
        level: 0,
        position: 0,
        coeffs: samples[..usable].to_vec(),
    });
    for level in 0..depth {
        for position in 0..1 << level {
            let parent = &nodes[node_index(level, position)].coeffs;
            let low = wp_step(parent, &filters.lowpass)?;
            let high = wp_step(parent, &filters.highpass)?;
            nodes.push(WpNode {
                level: level + 1,
                position: 2 * position,
                coeffs: low,
            });
            nodes.push(WpNode {
                level: level + 1,
                position: 2 * position + 1,
                coeffs: high,
            });
        }
    }
    WpTree::from_nodes(depth, nodes)
}

/// Rebuilds the level-0 signal from the leaves only.
pub fn wp_reconstruct(tree: &WpTree) -> Result<Vec<f64>> {
    let filters = db10_filters();
    let mut current: Vec<Vec<f64>> = tree.leaves().iter().map(|n| n.coeffs.clone()).collect();
    for _ in 0..tree.depth() {
        current = current
            .chunks_exact(2)
            .map(|pair| {
                let mut out = vec![0.0; pair[0].len() * 2];
                wp_step_adjoint(&pair[0], &filters.lowpass, &mut out);
                wp_step_adjoint(&pair[1], &filters.highpass, &mut out);
                out
            })
            .collect();
    }
    let out = current
        .pop()
        .ok_or_else(|| Error::invalid("tree has no leaves"))?;
    if out.len() != tree.signal_len() {
        return Err(Error::invalid("reconstruction length mismatch"));
    }
    Ok(out)
}

pub fn node_energy(coeffs: &[f64]) -> f64 {
    coeffs.iter().map(|c| c * c).sum()
}

/// Non-normalized Shannon entropy `-Σ c² ln c²`, with `0 ln 0 = 0`.
pub fn node_shannon_entropy(coeffs: &[f64]) -> f64 {
    -coeffs
        .iter()
        .map(|c| c * c)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}
