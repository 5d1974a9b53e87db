//! One-hidden-layer sigmoid network trained by full-batch gradient descent on
//! mean binary cross-entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 2000,
            seed: 0,
            hidden: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.hidden == 0 {
            return Err(Error::invalid("hidden layer needs at least one unit"));
        }
        Ok(())
    }
}

/// Logistic function, evaluated so that neither branch overflows.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// `hidden × input` weights.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Parameter gradients, laid out like [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w1: vec![vec![0.0; input]; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Checks that the layer shapes agree and every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        let h = self.w1.len();
        let d = self.input_dim();
        if h == 0 || d == 0 {
            return Err(Error::invalid("network needs at least one input and hidden unit"));
        }
        if self.w1.iter().any(|r| r.len() != d) || self.b1.len() != h || self.w2.len() != h {
            return Err(Error::invalid("network layer dimensions are inconsistent"));
        }
        let finite = self.w1.iter().flatten().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite())
            && self.b2.is_finite();
        if !finite {
            return Err(Error::invalid("network has non-finite parameters"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.first().map_or(0, Vec::len)
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| sigmoid(w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b))
            .collect()
    }

    fn output_logit(&self, hidden: &[f64]) -> f64 {
        self.w2.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>() + self.b2
    }

    /// Probability of the pathological class.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(sigmoid(self.output_logit(&self.hidden_activations(x))))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(if self.forward(x)? > 0.5 {
            Label::Pathological
        } else {
            Label::Healthy
        })
    }

    /// Mean binary cross-entropy over a batch.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (x, &t) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            let z = self.output_logit(&self.hidden_activations(x));
            // -[t ln σ(z) + (1-t) ln(1-σ(z))] = softplus(z) - t z
            total += softplus(z) - t * z;
        }
        Ok(total / inputs.len() as f64)
    }

    /// Back-propagated gradient of [`MlpModel::loss`].
    pub fn gradients(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<Gradients> {
        Ok(self.loss_and_gradients(inputs, targets)?.1)
    }

    /// Loss and gradient from a single forward pass per sample.
    pub fn loss_and_gradients(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<(f64, Gradients)> {
        let (h, d) = (self.hidden(), self.input_dim());
        let mut g = Gradients {
            w1: vec![vec![0.0; d]; h],
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: 0.0,
        };
        let n = inputs.len() as f64;
        let mut loss = 0.0;
        for (x, &t) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            let a = self.hidden_activations(x);
            let z = self.output_logit(&a);
            loss += softplus(z) - t * z;
            let delta_out = (sigmoid(z) - t) / n;
            g.b2 += delta_out;
            for j in 0..h {
                g.w2[j] += delta_out * a[j];
                let delta_hidden = delta_out * self.w2[j] * a[j] * (1.0 - a[j]);
                g.b1[j] += delta_hidden;
                for (gw, &xi) in g.w1[j].iter_mut().zip(x) {
                    *gw += delta_hidden * xi;
                }
            }
        }
        Ok((loss / n, g))
    }

    fn apply_step(&mut self, g: &Gradients, lr: f64) {
        for (w, gw) in self.w1.iter_mut().flatten().zip(g.w1.iter().flatten()) {
            *w -= lr * gw;
        }
        for (b, gb) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * gb;
        }
        for (w, gw) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * gw;
        }
        self.b2 -= lr * g.b2;
    }

    fn params_mut(&mut self) -> Vec<&mut f64> {
        let mut p: Vec<&mut f64> = self.w1.iter_mut().flatten().collect();
        p.extend(self.b1.iter_mut());
        p.extend(self.w2.iter_mut());
        p.push(&mut self.b2);
        p
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w1.iter().flatten().copied().collect();
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }
}

/// Uniform initialization in `±1/√fan_in` per layer; biases start at zero.
pub fn init_mlp(input: usize, cfg: &TrainConfig) -> Result<MlpModel> {
    if input == 0 {
        return Err(Error::invalid("input dimension must be at least 1"));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::zeros(input, cfg.hidden);
    let bound1 = 1.0 / (input as f64).sqrt();
    for w in model.w1.iter_mut().flatten() {
        *w = rng.random_range(-bound1..=bound1);
    }
    let bound2 = 1.0 / (cfg.hidden as f64).sqrt();
    for w in model.w2.iter_mut() {
        *w = rng.random_range(-bound2..=bound2);
    }
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Loss before each update, one entry per epoch.
    pub loss_trace: Vec<f64>,
}

/// Runs `cfg.epochs` full-batch gradient steps starting from `model`.
pub fn train(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} training inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if !labels.contains(&Label::Healthy) || !labels.contains(&Label::Pathological) {
        return Err(Error::invalid("training data needs samples of both classes"));
    }
    let targets: Vec<f64> = labels.iter().map(|l| l.target()).collect();
    let mut model = model.clone();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, g) = model.loss_and_gradients(inputs, &targets)?;
        if loss.is_nan() {
            return Err(Error::Diverged { epoch });
        }
        loss_trace.push(loss);
        model.apply_step(&g, cfg.learning_rate);
    }
    Ok(TrainOutcome { model, loss_trace })
}

/// Finite-difference step used by [`numerical_gradient_check`].
pub const GRADIENT_CHECK_STEP: f64 = 1e-6;

/// Central-difference gradient of the batch loss, one entry per parameter in
/// [`Gradients::flatten`] order.
pub fn numerical_gradients(model: &MlpModel, inputs: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>> {
    let count = model.clone().params_mut().len();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut plus = model.clone();
        *plus.params_mut()[i] += GRADIENT_CHECK_STEP;
        let mut minus = model.clone();
        *minus.params_mut()[i] -= GRADIENT_CHECK_STEP;
        let lp = plus.loss(inputs, targets)?;
        let lm = minus.loss(inputs, targets)?;
        out.push((lp - lm) / (2.0 * GRADIENT_CHECK_STEP));
    }
    Ok(out)
}

/// Max of `|ga - gn| / max(|ga|, |gn|, 1e-8)` between the supplied analytic
/// gradients and central differences.
pub fn compare_gradients(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    analytic: &Gradients,
) -> Result<f64> {
    let numeric = numerical_gradients(model, inputs, targets)?;
    let analytic = analytic.flatten();
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max))
}

pub fn numerical_gradient_check(model: &MlpModel, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::invalid("gradient check needs a nonempty batch"));
    }
    let analytic = model.gradients(inputs, targets)?;
    compare_gradients(model, inputs, targets, &analytic)
}
