//! Vocal fold pathology detection from sustained-vowel recordings.
//!
//! The pipeline extracts a 139-dimensional feature vector per recording
//! (13 averaged MFCCs, then the energy and Shannon entropy of all 63 nodes of
//! a depth-5 db10 wavelet packet tree), reduces it with PCA and classifies the
//! result with a one-hidden-layer sigmoid network.
//!
//! ```no_run
//! use vocalfold::{features, signal_io};
//!
//! let signal = signal_io::read_wav("sample.wav").unwrap();
//! let fv = features::extract_features(&signal).unwrap();
//! assert_eq!(fv.values().len(), features::FEATURE_LEN);
//! ```

pub mod ann;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod pca;
pub mod signal_io;
pub mod spectral;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
