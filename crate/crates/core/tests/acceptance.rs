//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p vocalfold --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vocalfold::ann::{self, MlpModel, TrainConfig};
use vocalfold::evaluation::{self, CvConfig};
use vocalfold::features::{self, FeatureVector, Label, LabeledDataset};
use vocalfold::model::Classifier;
use vocalfold::pca::{self, PcaModel, PcaOptions, ReductionMode};
use vocalfold::signal_io::{self, AudioSignal};
use vocalfold::spectral::{self, MelFilterbank};
use vocalfold::synth::{self, SynthConfig};
use vocalfold::wavelet;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vocalfold")
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| format!("cannot launch vocalfold: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`vocalfold {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

// ---------------------------------------------------------------- wavelet

fn wavelet_correctness() -> Outcome {
    let f = wavelet::db10_filters();
    let h = &f.lowpass;
    let g = &f.highpass;
    let l = h.len();
    let mut filter_err: f64 = 0.0;
    filter_err = filter_err.max((h.iter().sum::<f64>() - 2f64.sqrt()).abs());
    filter_err = filter_err.max((h.iter().map(|x| x * x).sum::<f64>() - 1.0).abs());
    filter_err = filter_err.max(g.iter().sum::<f64>().abs());
    for m in 1..l / 2 {
        let dot: f64 = (0..l - 2 * m).map(|i| h[i] * h[i + 2 * m]).sum();
        filter_err = filter_err.max(dot.abs());
    }
    for i in 0..l {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        filter_err = filter_err.max((g[i] - sign * h[l - 1 - i]).abs());
    }
    ensure!(filter_err < 1e-10, "filter identity error {filter_err:e}");

    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    let mut pr_err: f64 = 0.0;
    let mut parseval_err: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(32..=1024);
        let x = normal_vec(&mut rng, n);
        let tree = wavelet::wp_decompose(&x, 5).map_err(|e| e.to_string())?;
        let used = tree.signal_len();
        ensure!(used == n - n % 32, "tree keeps {used} of {n} samples");
        let y = wavelet::wp_reconstruct(&tree).map_err(|e| e.to_string())?;
        for (a, b) in x[..used].iter().zip(&y) {
            pr_err = pr_err.max((a - b).abs());
        }
        let total: f64 = x[..used].iter().map(|v| v * v).sum();
        for level in 1..=5 {
            let e: f64 = tree.level(level).iter().map(|n| n.energy()).sum();
            parseval_err = parseval_err.max((e - total).abs() / total);
        }
    }
    ensure!(pr_err < 1e-9, "reconstruction error {pr_err:e}");
    ensure!(parseval_err < 1e-8, "Parseval relative error {parseval_err:e}");
    Ok(format!(
        "filters {filter_err:.1e}, reconstruction {pr_err:.1e}, Parseval {parseval_err:.1e}"
    ))
}

// ----------------------------------------------------------- FFT and MFCC

fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    let ang = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, ang)
                })
                .sum()
        })
        .collect()
}

fn fft_mfcc_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0002);
    let mut fft_err: f64 = 0.0;
    for log_n in 0..=8 {
        let n = 1usize << log_n;
        for _ in 0..5 {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let expected = dft(&x);
            let mut got = x.clone();
            spectral::fft_in_place(&mut got);
            let scale = expected.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, b) in got.iter().zip(&expected) {
                fft_err = fft_err.max((a - b).norm() / scale);
            }
        }
    }
    ensure!(fft_err < 1e-9, "FFT relative error {fft_err:e}");

    let sr = 32_000;
    let fb = MelFilterbank::new(sr, 256).map_err(|e| e.to_string())?;
    let centers = spectral::filter_edges();
    let mut concentrated = 0;
    for i in 0..spectral::NUM_FILTERS {
        let fc = centers[i + 1];
        let frame: Vec<f64> = (0..256)
            .map(|t| (2.0 * std::f64::consts::PI * fc * t as f64 / sr as f64).sin())
            .collect();
        let e = spectral::filterbank_energies(&frame, &fb).map_err(|e| e.to_string())?;
        let argmax = (0..e.len()).max_by(|&a, &b| e[a].total_cmp(&e[b])).unwrap();
        ensure!(argmax == i, "sine at {fc:.2} Hz peaks in filter {argmax}, expected {i}");
        concentrated += 1;
    }

    let mut gain_err: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(512..4096);
        let x = normal_vec(&mut rng, n);
        let gain = 10f64.powf(rng.random_range(-2.0..2.0));
        let base = AudioSignal::new(x.clone(), sr).map_err(|e| e.to_string())?;
        let scaled = AudioSignal::new(x.iter().map(|v| v * gain).collect(), sr)
            .map_err(|e| e.to_string())?;
        let a = spectral::mfcc_average(&base).map_err(|e| e.to_string())?;
        let b = spectral::mfcc_average(&scaled).map_err(|e| e.to_string())?;
        for j in 1..13 {
            gain_err = gain_err.max((a.coeffs[j] - b.coeffs[j]).abs() / a.coeffs[j].abs().max(1.0));
        }
    }
    ensure!(gain_err < 1e-9, "c1..c12 change under gain by {gain_err:e}");
    Ok(format!(
        "FFT {fft_err:.1e}, {concentrated}/40 filters concentrate, gain drift {gain_err:.1e}"
    ))
}

// -------------------------------------------------------------------- PCA

fn standardized(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    rows.iter()
        .map(|r| (0..d).map(|j| (r[j] - mean[j]) / sd[j]).collect())
        .collect()
}

fn covariance(z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = z.len() as f64;
    let d = z[0].len();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| z.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

/// Power iteration with Hotelling deflation.
fn power_eigen(mut a: Vec<Vec<f64>>, rng: &mut ChaCha8Rng) -> Vec<(f64, Vec<f64>)> {
    let d = a.len();
    let mut out = Vec::new();
    for _ in 0..d {
        let mut v = normal_vec(rng, d);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut lambda = 0.0;
        for _ in 0..1_000_000 {
            let w: Vec<f64> = a.iter().map(|r| r.iter().zip(&v).map(|(p, q)| p * q).sum()).collect();
            lambda = w.iter().zip(&v).map(|(p, q)| p * q).sum();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let resid: f64 = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - lambda * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            v = next;
            if resid < 1e-14 {
                break;
            }
        }
        for i in 0..d {
            for j in 0..d {
                a[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

fn pca_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let (n, d) = (20, 10);
    let mixing: Vec<Vec<f64>> = (0..d).map(|_| normal_vec(&mut rng, d)).collect();
    let data: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let latent: Vec<f64> = normal_vec(&mut rng, d)
                .into_iter()
                .enumerate()
                .map(|(j, v)| v * (d - j) as f64)
                .collect();
            (0..d)
                .map(|j| (0..d).map(|m| mixing[m][j] * latent[m]).sum::<f64>() + 3.0 * j as f64)
                .collect()
        })
        .collect();
    let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let model = pca::fit_pca(&rows, d, PcaOptions::default()).map_err(|e| e.to_string())?;

    let c = model.components();
    let mut ortho: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum();
            ortho = ortho.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    ensure!(ortho < 1e-8, "orthonormality error {ortho:e}");

    let cov = covariance(&standardized(&data));
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let eig_sum: f64 = model.eigenvalues().iter().sum();
    let trace_err = (trace - eig_sum).abs();
    ensure!(trace_err < 1e-8, "eigenvalues sum to {eig_sum}, trace is {trace}");

    let oracle = power_eigen(cov, &mut rng);
    let mut val_err: f64 = 0.0;
    let mut vec_err: f64 = 0.0;
    for (i, (lambda, v)) in oracle.iter().enumerate() {
        val_err = val_err.max((lambda - model.eigenvalues()[i]).abs());
        let sign = if v.iter().zip(&c[i]).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (a, b) in v.iter().zip(&c[i]) {
            vec_err = vec_err.max((sign * a - b).abs());
        }
    }
    ensure!(val_err < 1e-8, "eigenvalues differ from power iteration by {val_err:e}");
    ensure!(vec_err < 1e-8, "eigenvectors differ from power iteration by {vec_err:e}");

    let mut errors = Vec::new();
    for k in 1..=d {
        let m = pca::fit_pca(&rows, k, PcaOptions::default()).map_err(|e| e.to_string())?;
        errors.push(reconstruction_error(&m, &rows)?);
    }
    for w in errors.windows(2) {
        ensure!(w[1] <= w[0] + 1e-12, "reconstruction error rises: {:?}", errors);
    }
    ensure!(errors[d - 1] < 1e-12, "full-rank reconstruction error {}", errors[d - 1]);
    Ok(format!(
        "orthonormality {ortho:.1e}, trace {trace_err:.1e}, oracle {val_err:.1e}/{vec_err:.1e}, \
         reconstruction monotone over k=1..{d}"
    ))
}

/// Squared reconstruction error summed over `rows`, in standardized units.
fn reconstruction_error(m: &PcaModel, rows: &[&[f64]]) -> Result<f64, String> {
    let mut total = 0.0;
    for r in rows {
        let back = m
            .inverse_transform(&m.transform(r).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let a = m.standardize(r).map_err(|e| e.to_string())?;
        let b = m.standardize(&back).map_err(|e| e.to_string())?;
        total += a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    }
    Ok(total)
}

// -------------------------------------------------------------------- ANN

fn param_bits(m: &MlpModel) -> Vec<u64> {
    m.w1.iter()
        .flatten()
        .chain(&m.b1)
        .chain(&m.w2)
        .chain(std::iter::once(&m.b2))
        .map(|v| v.to_bits())
        .collect()
}

fn blobs(rng: &mut ChaCha8Rng, per_class: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (label, center) in [(Label::Healthy, -3.0), (Label::Pathological, 3.0)] {
        for _ in 0..per_class {
            x.push(normal_vec(rng, 2).into_iter().map(|v| v * 0.5 + center).collect());
            y.push(label);
        }
    }
    (x, y)
}

fn ann_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    let mut grad_err: f64 = 0.0;
    for cfg_idx in 0..20 {
        let d = rng.random_range(1..=8);
        let h = rng.random_range(1..=8);
        let batch = rng.random_range(2..=12);
        let cfg = TrainConfig { hidden: h, seed: cfg_idx, ..TrainConfig::default() };
        let mut model = ann::init_mlp(d, &cfg).map_err(|e| e.to_string())?;
        for b in model.b1.iter_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
        model.b2 = rng.random_range(-0.5..0.5);
        let inputs: Vec<Vec<f64>> = (0..batch).map(|_| normal_vec(&mut rng, d)).collect();
        let targets: Vec<f64> = (0..batch).map(|i| (i % 2) as f64).collect();
        let e = ann::numerical_gradient_check(&model, &inputs, &targets).map_err(|e| e.to_string())?;
        grad_err = grad_err.max(e);
    }
    ensure!(grad_err < 1e-5, "gradient relative error {grad_err:e}");

    let (x, y) = blobs(&mut rng, 50);
    let cfg = TrainConfig { hidden: 3, seed: 11, ..TrainConfig::default() };
    let init = ann::init_mlp(2, &cfg).map_err(|e| e.to_string())?;
    let a = ann::train(&init, &x, &y, &cfg).map_err(|e| e.to_string())?;
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(xi, &yi)| a.model.predict(xi).map(|p| p == yi).unwrap_or(false))
        .count();
    ensure!(correct == x.len(), "blobs: {correct}/{} correct", x.len());

    let init2 = ann::init_mlp(2, &cfg).map_err(|e| e.to_string())?;
    let b = ann::train(&init2, &x, &y, &cfg).map_err(|e| e.to_string())?;
    ensure!(param_bits(&a.model) == param_bits(&b.model), "seeded training is not bit-exact");
    let trace_a: Vec<u64> = a.loss_trace.iter().map(|v| v.to_bits()).collect();
    let trace_b: Vec<u64> = b.loss_trace.iter().map(|v| v.to_bits()).collect();
    ensure!(trace_a == trace_b, "loss traces differ between identical runs");
    Ok(format!("gradient {grad_err:.1e} over 20 configs, blobs 100/100, deterministic"))
}

// ------------------------------------------------------------------ shape

fn pipeline_shape() -> Outcome {
    let cfg = SynthConfig { seed: 5, ..SynthConfig::default() };
    let signal = synth::synth_voice(&cfg, Label::Pathological).map_err(|e| e.to_string())?;
    let fv = features::extract_features(&signal).map_err(|e| e.to_string())?;
    let v = fv.values();
    ensure!(v.len() == 139, "feature vector has {} entries", v.len());
    ensure!(v.iter().all(|x| x.is_finite()), "non-finite feature");

    let mfcc = spectral::mfcc_average(&signal).map_err(|e| e.to_string())?;
    ensure!(v[..13] == mfcc.coeffs[..], "entries 0..13 are not the averaged MFCCs");
    let tree = wavelet::wp_decompose(signal.samples(), 5).map_err(|e| e.to_string())?;
    ensure!(tree.nodes().len() == 63, "tree has {} nodes", tree.nodes().len());
    let mut k = 0;
    for level in 0..=5 {
        for pos in 0..1usize << level {
            let node = &tree.nodes()[k];
            ensure!(
                node.level == level && node.position == pos && wavelet::node_index(level, pos) == k,
                "node {k} is ({}, {}), expected ({level}, {pos})",
                node.level,
                node.position
            );
            ensure!(v[13 + k] == node.energy(), "entry {} is not the energy of node {k}", 13 + k);
            ensure!(
                v[76 + k] == node.shannon_entropy(),
                "entry {} is not the entropy of node {k}",
                76 + k
            );
            k += 1;
        }
    }
    ensure!(features::feature_name(0) == "mfcc_1", "name of entry 0");
    ensure!(features::feature_name(13) == "energy_1", "name of entry 13");
    ensure!(features::feature_name(138) == "entropy_63", "name of entry 138");
    Ok("139 finite entries: 13 MFCC, 63 energies, 63 entropies; 63 nodes in breadth-first order".into())
}

// ------------------------------------------------------------ end to end

fn read_sweep(path: &Path, rows: usize) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    ensure!(
        lines.next() == Some("param,accuracy,sensitivity,specificity"),
        "{} has an unexpected header",
        path.display()
    );
    let mut acc = Vec::new();
    for line in lines {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|_| format!("bad field in {line:?}")))
            .collect::<Result<_, _>>()?;
        ensure!(fields.len() == 4, "row {line:?} does not have 4 fields");
        for &f in &fields[1..] {
            ensure!((0.0..=1.0).contains(&f), "rate {f} outside [0,1] in {line:?}");
        }
        acc.push(fields[1]);
    }
    ensure!(acc.len() == rows, "{} has {} rows, expected {rows}", path.display(), acc.len());
    Ok(acc)
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let data = dir.join("data");
    let feats = dir.join("features.csv");
    let s = |p: &Path| p.to_str().unwrap().to_owned();

    run_cli(&["synth", "--out", &s(&data), "--seed", "1", "--n-path", "75", "--n-healthy", "55"])?;
    run_cli(&["extract", "--manifest", &s(&data.join("manifest.csv")), "--out", &s(&feats)])?;
    let ds = LabeledDataset::read_csv(&feats).map_err(|e| e.to_string())?;
    ensure!(ds.class_counts() == (55, 75), "class counts {:?}", ds.class_counts());

    let out = run_cli(&[
        "evaluate", "--features", &s(&feats), "--k", "36", "--hidden", "5", "--folds", "10", "--seed", "1",
    ])?;
    let accuracy: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("accuracy"))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| format!("no accuracy line in {out:?}"))?;
    ensure!(accuracy >= 0.90, "pooled accuracy {accuracy}");

    let neurons = dir.join("neurons");
    run_cli(&["sweep-neurons", "--features", &s(&feats), "--range", "1:10", "--seed", "1", "--out", &s(&neurons)])?;
    let na = read_sweep(&neurons.with_extension("csv"), 10)?;
    ensure!(neurons.with_extension("dat").exists(), "missing neuron plot data");

    let counts = dir.join("counts");
    let out = run_cli(&["sweep-features", "--features", &s(&feats), "--seed", "1", "--out", &s(&counts)])?;
    let fa = read_sweep(&counts.with_extension("csv"), 28)?;
    ensure!(counts.with_extension("dat").exists(), "missing feature plot data");
    ensure!(out.contains("# best count"), "no selection summary printed");

    let range = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!("{lo:.3}..{hi:.3}")
    };
    Ok(format!(
        "accuracy {accuracy:.4} at k=36/h=5, neuron sweep {}, feature sweep {}",
        range(&na),
        range(&fa)
    ))
}

// ---------------------------------------------------------------- leakage

fn random_dataset(rng: &mut ChaCha8Rng, per_class: usize) -> LabeledDataset {
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (label, shift) in [(Label::Healthy, 0.0), (Label::Pathological, 1.0)] {
        for i in 0..per_class {
            let v: Vec<f64> = normal_vec(rng, features::FEATURE_LEN)
                .into_iter()
                .enumerate()
                .map(|(j, x)| {
                    let x = x + if j % 7 == 0 { shift } else { 0.0 };
                    if (features::ENERGY_OFFSET..features::ENTROPY_OFFSET).contains(&j) {
                        x.abs()
                    } else {
                        x
                    }
                })
                .collect();
            vectors.push(FeatureVector::new(v).unwrap());
            labels.push(label);
            ids.push(format!("{label}_{i}"));
        }
    }
    LabeledDataset::new(vectors, labels, ids).unwrap()
}

fn fold_bits(f: &evaluation::FoldOutcome) -> Vec<u64> {
    let m = f.reducer.model();
    let mut bits: Vec<u64> = m
        .mean()
        .iter()
        .chain(m.scale())
        .chain(m.eigenvalues())
        .chain(m.components().iter().flatten())
        .map(|v| v.to_bits())
        .collect();
    bits.extend(f.reducer.selected().iter().map(|&i| i as u64));
    bits.extend(param_bits(&f.model));
    bits
}

fn leakage_guard() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0007);
    let ds = random_dataset(&mut rng, 20);
    let folds = 5;
    let split = evaluation::kfold_split(ds.labels(), folds, 3).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for mode in [ReductionMode::Project, ReductionMode::Select] {
        let cfg = CvConfig {
            folds,
            seed: 3,
            mode,
            train: TrainConfig { epochs: 200, ..TrainConfig::default() },
        };
        let base = evaluation::run_folds(&ds, &split, 8, 3, &cfg).map_err(|e| e.to_string())?;
        for fold in 0..folds {
            let held: Vec<usize> = split.test_indices(fold);
            let vectors: Vec<FeatureVector> = ds
                .vectors()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if held.contains(&i) {
                        let w = v.values().iter().map(|x| x * 7.5 + 100.0).collect();
                        FeatureVector::new(w).unwrap()
                    } else {
                        v.clone()
                    }
                })
                .collect();
            let perturbed = LabeledDataset::new(vectors, ds.labels().to_vec(), ds.ids().to_vec())
                .map_err(|e| e.to_string())?;
            let again = evaluation::run_folds(&perturbed, &split, 8, 3, &cfg).map_err(|e| e.to_string())?;
            ensure!(
                fold_bits(&base[fold]) == fold_bits(&again[fold]),
                "{mode} fold {fold}: model changed when its held-out data was perturbed"
            );
            let other = (fold + 1) % folds;
            ensure!(
                fold_bits(&base[other]) != fold_bits(&again[other]),
                "{mode} fold {other}: perturbing its training data had no effect"
            );
            checked += 1;
        }
    }
    Ok(format!("{checked} fold models bit-identical under held-out perturbation"))
}

// ------------------------------------------------------------ round trips

fn round_trips() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0008);
    let mut wav_err: f64 = 0.0;
    for i in 0..20 {
        let n = rng.random_range(1..5000);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let sig = AudioSignal::new(x, 8_000 * (1 + i % 4)).map_err(|e| e.to_string())?;
        let path = tmp.path().join(format!("rt{i}.wav"));
        signal_io::write_wav(&path, &sig).map_err(|e| e.to_string())?;
        let back = signal_io::read_wav(&path).map_err(|e| e.to_string())?;
        ensure!(back.len() == sig.len(), "WAV length {} became {}", sig.len(), back.len());
        ensure!(back.sample_rate() == sig.sample_rate(), "sample rate changed");
        for (a, b) in sig.samples().iter().zip(back.samples()) {
            wav_err = wav_err.max((a - b).abs());
        }
    }
    ensure!(wav_err <= 1.0 / 32768.0, "WAV sample error {wav_err:e}");

    let scfg = SynthConfig { duration: 0.25, ..SynthConfig::default() };
    let entries = synth::synth_dataset(tmp.path().join("data"), 8, 8, &scfg, 4).map_err(|e| e.to_string())?;
    let ds = features::extract_dataset(&entries).map_err(|e| e.to_string())?.dataset;
    let mut prob_err: f64 = 0.0;
    for mode in [ReductionMode::Project, ReductionMode::Select] {
        let tcfg = TrainConfig { epochs: 300, hidden: 4, ..TrainConfig::default() };
        let (reducer, mlp) = evaluation::fit_classifier(&ds, 6, mode, &tcfg).map_err(|e| e.to_string())?;
        let clf = Classifier::new(reducer, mlp).map_err(|e| e.to_string())?;
        let path = tmp.path().join(format!("{mode}.model"));
        clf.save(&path).map_err(|e| e.to_string())?;
        let loaded = Classifier::load(&path).map_err(|e| e.to_string())?;
        for v in ds.vectors() {
            let a = clf.probability(v.values()).map_err(|e| e.to_string())?;
            let b = loaded.probability(v.values()).map_err(|e| e.to_string())?;
            prob_err = prob_err.max((a - b).abs());
        }
        let wav = &entries[0].path;
        let out = run_cli(&["classify", "--model", path.to_str().unwrap(), "--wav", wav.to_str().unwrap()])?;
        let p: f64 = out
            .split_whitespace()
            .nth(1)
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| format!("cannot parse classify output {out:?}"))?;
        let direct = clf.probability(ds.vectors()[0].values()).map_err(|e| e.to_string())?;
        prob_err = prob_err.max((p - direct).abs());
    }
    ensure!(prob_err < 1e-12, "probability changed by {prob_err:e} across save/load");
    Ok(format!("WAV error {wav_err:.2e} (bound {:.2e}), probability drift {prob_err:.1e}", 1.0 / 32768.0))
}

// ---------------------------------------------------------------- runner

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "wavelet correctness", limit: Some(Duration::from_secs(10)), check: wavelet_correctness },
        Criterion { name: "FFT/MFCC correctness", limit: Some(Duration::from_secs(10)), check: fft_mfcc_correctness },
        Criterion { name: "PCA correctness", limit: Some(Duration::from_secs(5)), check: pca_correctness },
        Criterion { name: "ANN correctness", limit: Some(Duration::from_secs(30)), check: ann_correctness },
        Criterion { name: "pipeline shape", limit: None, check: pipeline_shape },
        Criterion { name: "end-to-end synthetic experiment", limit: Some(Duration::from_secs(300)), check: end_to_end },
        Criterion { name: "leakage guard", limit: None, check: leakage_guard },
        Criterion { name: "round-trips", limit: None, check: round_trips },
    ];

    let mut failures = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()))
            }
            (r, _) => r,
        };
        let (status, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{status} [{}] {}: {detail} ({:.2} s)", i + 1, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
