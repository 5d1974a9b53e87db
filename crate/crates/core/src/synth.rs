//! Synthetic sustained /a/ vowels with controllable jitter, shimmer and noise.
//!
//! An impulse train at a per-recording base pitch drives three cascaded
//! second-order formant resonators. Each glottal period gets its own pitch
//! and amplitude perturbation; white noise is added after the vocal tract.
//! Healthy and pathological voices use the same tract and differ only in the
//! perturbation levels.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::{DatasetEntry, Label};
use crate::signal_io::{self, AudioSignal};

pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// Per-period pitch deviation bound, percent.
    pub jitter_pct: f64,
    /// Per-period amplitude deviation bound, percent.
    pub shimmer_pct: f64,
    /// Standard deviation of additive white noise relative to the peak.
    pub noise_level: f64,
}

impl Perturbation {
    pub const HEALTHY: Self = Self {
        jitter_pct: 0.3,
        shimmer_pct: 1.0,
        noise_level: 0.005,
    };
    pub const PATHOLOGICAL: Self = Self {
        jitter_pct: 2.5,
        shimmer_pct: 8.0,
        noise_level: 0.05,
    };
    pub const NONE: Self = Self {
        jitter_pct: 0.0,
        shimmer_pct: 0.0,
        noise_level: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub duration: f64,
    pub f0_range: (f64, f64),
    /// `(center Hz, bandwidth Hz)` per formant.
    pub formants: Vec<(f64, f64)>,
    pub healthy: Perturbation,
    pub pathological: Perturbation,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: 32_000,
            duration: 1.0,
            f0_range: (100.0, 180.0),
            formants: vec![(730.0, 90.0), (1090.0, 110.0), (2440.0, 120.0)],
            healthy: Perturbation::HEALTHY,
            pathological: Perturbation::PATHOLOGICAL,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if !(self.duration > 0.0) || (self.duration * self.sample_rate as f64).round() < 1.0 {
            return Err(Error::invalid("duration must cover at least one sample"));
        }
        let (lo, hi) = self.f0_range;
        if !(lo > 0.0 && lo <= hi && hi < nyquist) {
            return Err(Error::invalid(format!(
                "f0 range {lo}..{hi} Hz must be positive, ordered and below {nyquist} Hz"
            )));
        }
        for &(f, bw) in &self.formants {
            if !(f > 0.0 && f < nyquist && bw > 0.0) {
                return Err(Error::invalid(format!(
                    "formant ({f} Hz, {bw} Hz) must lie below {nyquist} Hz with positive bandwidth"
                )));
            }
        }
        for p in [self.healthy, self.pathological] {
            if !(p.jitter_pct >= 0.0 && p.jitter_pct < 100.0)
                || !(p.shimmer_pct >= 0.0)
                || !(p.noise_level >= 0.0)
            {
                return Err(Error::invalid(format!(
                    "perturbation levels must be non-negative (jitter below 100%): {p:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn perturbation(&self, label: Label) -> Perturbation {
        match label {
            Label::Healthy => self.healthy,
            Label::Pathological => self.pathological,
        }
    }
}

/// Klatt-style digital resonator `y[n] = A x[n] + B y[n-1] + C y[n-2]`
/// with unit gain at DC.
fn resonate(x: &mut [f64], freq: f64, bandwidth: f64, sample_rate: f64) {
    let t = 1.0 / sample_rate;
    let c = -(-2.0 * std::f64::consts::PI * bandwidth * t).exp();
    let b = 2.0 * (-std::f64::consts::PI * bandwidth * t).exp()
        * (2.0 * std::f64::consts::PI * freq * t).cos();
    let a = 1.0 - b - c;
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = a * *v + b * y1 + c * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

fn normalize_peak(x: &mut [f64], peak: f64) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        let g = peak / max;
        x.iter_mut().for_each(|v| *v *= g);
    }
}

/// Base pitch drawn for a given configuration; exposed for tests.
pub fn base_f0(cfg: &SynthConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    draw_f0(cfg, &mut rng)
}

fn draw_f0(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = cfg.f0_range;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub fn synth_voice(cfg: &SynthConfig, label: Label) -> Result<AudioSignal> {
    cfg.validate()?;
    let p = cfg.perturbation(label);
    let sr = cfg.sample_rate as f64;
    let n = (cfg.duration * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f0 = draw_f0(cfg, &mut rng);
    let jitter = p.jitter_pct / 100.0;
    let shimmer = p.shimmer_pct / 100.0;

    let mut x = vec![0.0; n];
    let mut pos = 0usize;
    while pos < n {
        let amp = 1.0 + shimmer * rng.random_range(-1.0..=1.0);
        x[pos] = amp;
        let f = f0 * (1.0 + jitter * rng.random_range(-1.0..=1.0));
        pos += ((sr / f).round() as usize).max(1);
    }

    for &(freq, bw) in &cfg.formants {
        resonate(&mut x, freq, bw, sr);
    }
    normalize_peak(&mut x, 1.0);
    if p.noise_level > 0.0 {
        for v in x.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += p.noise_level * z;
        }
    }
    normalize_peak(&mut x, 0.9);
    AudioSignal::new(x, cfg.sample_rate)
}

/// SplitMix64 finalizer, used to derive per-file seeds.
fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_seed(master: u64, label: Label, index: usize) -> u64 {
    mix_seed(master ^ mix_seed(((label.as_u8() as u64) << 32) | index as u64))
}

/// Writes `n_path` pathological and `n_healthy` healthy recordings plus a
/// `manifest.csv` into `out_dir`. Returns the manifest entries.
pub fn synth_dataset(
    out_dir: impl AsRef<Path>,
    n_path: usize,
    n_healthy: usize,
    cfg: &SynthConfig,
    master_seed: u64,
) -> Result<Vec<DatasetEntry>> {
    cfg.validate()?;
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut entries = Vec::with_capacity(n_path + n_healthy);
    for (label, count, prefix) in [
        (Label::Pathological, n_path, "path"),
        (Label::Healthy, n_healthy, "healthy"),
    ] {
        for i in 0..count {
            let id = format!("{prefix}_{i:03}");
            let sample_cfg = SynthConfig {
                seed: sample_seed(master_seed, label, i),
                ..cfg.clone()
            };
            let signal = synth_voice(&sample_cfg, label)?;
            let path = dir.join(format!("{id}.wav"));
            signal_io::write_wav(&path, &signal)?;
            entries.push(DatasetEntry { id, path, label });
        }
    }
    write_manifest(dir.join(MANIFEST_NAME), &entries)?;
    Ok(entries)
}

/// Writes `id,path,label`; paths inside the manifest's directory are stored
/// relative to it.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[DatasetEntry]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["id", "path", "label"]).map_err(csv_err)?;
    for e in entries {
        let rel = e.path.strip_prefix(base).unwrap_or(&e.path);
        w.write_record([
            e.id.as_str(),
            &rel.to_string_lossy(),
            &e.label.as_u8().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a manifest, resolving relative paths against its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let fail = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let header = r.headers().map_err(|e| fail(e.to_string()))?;
    if header.iter().ne(["id", "path", "label"]) {
        return Err(fail("manifest header must be id,path,label".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        let label = rec[2]
            .parse::<u8>()
            .ok()
            .and_then(Label::from_u8)
            .ok_or_else(|| fail(format!("row {}: label {:?} is not 0 or 1", line + 2, &rec[2])))?;
        let p = PathBuf::from(&rec[1]);
        out.push(DatasetEntry {
            id: rec[0].to_string(),
            path: if p.is_absolute() { p } else { base.join(p) },
            label,
        });
    }
    Ok(out)
}
