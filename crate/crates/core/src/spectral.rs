//! Averaged mel-frequency cepstral coefficients.
//!
//! The filterbank has 40 equal-area triangular filters: 13 with centers
//! spaced 133.33 Hz apart, then 27 whose centers grow by a factor of
//! 1.0711703. Filterbank energies integrate the power spectrum of a
//! Hamming-windowed frame; the log energies go through an orthonormal DCT-II
//! and the first 13 coefficients are kept.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal_io::{self, AudioSignal, Frame};

pub const NUM_FILTERS: usize = 40;
pub const NUM_LINEAR_FILTERS: usize = 13;
pub const NUM_CEPSTRA: usize = 13;
pub const LINEAR_SPACING_HZ: f64 = 133.33;
pub const LOG_SPACING: f64 = 1.0711703;
/// Floor applied to filterbank energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// In-place iterative radix-2 Cooley-Tukey FFT. `buf.len()` must be a power of two.
pub fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = Complex64::from_polar(1.0, step * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn check_fft_size(fft_size: usize) -> Result<()> {
    if fft_size == 0 || !fft_size.is_power_of_two() {
        return Err(Error::invalid(format!(
            "fft size {fft_size} is not a power of two"
        )));
    }
    Ok(())
}

fn spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<Complex64>> {
    check_fft_size(fft_size)?;
    if frame.len() > fft_size {
        return Err(Error::invalid(format!(
            "frame of {} samples does not fit fft size {fft_size}",
            frame.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft_in_place(&mut buf);
    buf.truncate(fft_size / 2 + 1);
    Ok(buf)
}

/// Magnitudes of DFT bins `0..=fft_size/2` of the zero-padded frame.
pub fn fft_magnitude(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    Ok(spectrum(frame, fft_size)?.iter().map(|c| c.norm()).collect())
}

/// Squared magnitudes of DFT bins `0..=fft_size/2`.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    Ok(spectrum(frame, fft_size)?.iter().map(|c| c.norm_sqr()).collect())
}

/// FFT length used for a frame: the frame length itself if it is a power of
/// two, else the next power of two.
pub fn fft_size_for(frame_len: usize) -> usize {
    frame_len.max(1).next_power_of_two()
}

/// Filter center frequencies `f_c(0..=41)`: `f_c(0) = 0` is the lower edge of
/// the first filter and `f_c(41)` the extrapolated upper edge of the last.
pub fn filter_edges() -> [f64; NUM_FILTERS + 2] {
    let mut f = [0.0; NUM_FILTERS + 2];
    for (i, slot) in f.iter_mut().enumerate().take(NUM_LINEAR_FILTERS + 1).skip(1) {
        *slot = LINEAR_SPACING_HZ * i as f64;
    }
    for i in NUM_LINEAR_FILTERS + 1..NUM_FILTERS + 2 {
        f[i] = f[i - 1] * LOG_SPACING;
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    center_freqs: Vec<f64>,
    filter_weights: Vec<Vec<f64>>,
    fft_size: usize,
    sample_rate: u32,
}

impl MelFilterbank {
    pub fn new(sample_rate: u32, fft_size: usize) -> Result<Self> {
        check_fft_size(fft_size)?;
        if fft_size < 2 {
            return Err(Error::invalid("fft size must be at least 2"));
        }
        let edges = filter_edges();
        let nyquist = sample_rate as f64 / 2.0;
        let top = edges[NUM_FILTERS + 1];
        if nyquist <= top {
            return Err(Error::invalid(format!(
                "sample rate {sample_rate} Hz: Nyquist {nyquist} Hz is below the last filter edge {top:.2} Hz"
            )));
        }
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let bins = fft_size / 2 + 1;
        let mut filter_weights = Vec::with_capacity(NUM_FILTERS);
        for i in 1..=NUM_FILTERS {
            let (lo, mid, hi) = (edges[i - 1], edges[i], edges[i + 1]);
            let height = 2.0 / (hi - lo);
            let w: Vec<f64> = (0..bins)
                .map(|b| {
                    let f = b as f64 * bin_hz;
                    if f > lo && f <= mid {
                        height * (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        height * (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect();
            if !w.iter().any(|&x| x > 0.0) {
                return Err(Error::invalid(format!(
                    "filter {i} ({lo:.1}-{hi:.1} Hz) covers no fft bin at fft size {fft_size}"
                )));
            }
            filter_weights.push(w);
        }
        Ok(Self {
            center_freqs: edges[1..=NUM_FILTERS].to_vec(),
            filter_weights,
            fft_size,
            sample_rate,
        })
    }

    pub fn num_filters(&self) -> usize {
        self.filter_weights.len()
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    pub fn filter_weights(&self) -> &[Vec<f64>] {
        &self.filter_weights
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Weighted sums of a power spectrum, one per filter.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.filter_weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn build_mel_filterbank(sample_rate: u32, fft_size: usize) -> Result<MelFilterbank> {
    MelFilterbank::new(sample_rate, fft_size)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccVector {
    pub coeffs: [f64; NUM_CEPSTRA],
}

/// Orthonormal DCT-II of `input`, first `NUM_CEPSTRA` outputs.
fn dct_cepstra(input: &[f64]) -> [f64; NUM_CEPSTRA] {
    let n = input.len() as f64;
    let scale = (2.0 / n).sqrt();
    let mut out = [0.0; NUM_CEPSTRA];
    for (j, c) in out.iter_mut().enumerate() {
        let s: f64 = input
            .iter()
            .enumerate()
            .map(|(i, &l)| l * (PI * j as f64 * (i as f64 + 0.5) / n).cos())
            .sum();
        *c = s * scale;
    }
    out[0] *= std::f64::consts::FRAC_1_SQRT_2;
    out
}

/// Filterbank energies of a single Hamming-windowed frame.
pub fn filterbank_energies(frame: &[f64], fb: &MelFilterbank) -> Result<Vec<f64>> {
    let window = signal_io::hamming_window(frame.len());
    let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
    let power = power_spectrum(&windowed, fb.fft_size())?;
    Ok(fb.apply(&power))
}

/// MFCCs of one frame. The Hamming window is applied here.
pub fn mfcc_frame(frame: &Frame, fb: &MelFilterbank) -> Result<MfccVector> {
    let energies = filterbank_energies(&frame.samples, fb)?;
    let logs: Vec<f64> = energies.iter().map(|&e| e.max(LOG_FLOOR).ln()).collect();
    Ok(MfccVector {
        coeffs: dct_cepstra(&logs),
    })
}

/// Short-time analysis parameters for [`mfcc_average_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub hop: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len: signal_io::DEFAULT_FRAME_LEN,
            hop: signal_io::DEFAULT_HOP,
        }
    }
}

pub fn mfcc_average(signal: &AudioSignal) -> Result<MfccVector> {
    mfcc_average_with(signal, FrameConfig::default())
}

/// Per-coefficient mean of [`mfcc_frame`] over every frame of the signal.
pub fn mfcc_average_with(signal: &AudioSignal, cfg: FrameConfig) -> Result<MfccVector> {
    let frames = signal_io::frame_signal(signal, cfg.frame_len, cfg.hop)?;
    let fb = MelFilterbank::new(signal.sample_rate(), fft_size_for(cfg.frame_len))?;
    let mut acc = [0.0; NUM_CEPSTRA];
    for frame in &frames {
        let m = mfcc_frame(frame, &fb)?;
        for (a, c) in acc.iter_mut().zip(m.coeffs) {
            *a += c;
        }
    }
    let n = frames.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(MfccVector { coeffs: acc })
}
