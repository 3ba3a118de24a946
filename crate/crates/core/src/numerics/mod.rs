//! Tensor arithmetic, activations, deterministic initialization, and the
//! finite-difference gradient checker. All arithmetic is in 64-bit floats;
//! the gradient checker is the correctness oracle for every backward pass
//! in the model stack.

mod rng;
mod tensor;

pub use rng::{streams, Rng};
pub use tensor::Tensor;

use crate::error::{Error, Result};

/// Default slope for the negative branch of leaky ReLU.
pub const DEFAULT_LEAKY_ALPHA: f64 = 0.01;

/// Numerically stable softmax over a logit vector.
///
/// The maximum logit is subtracted before exponentiation and the divisor is
/// accumulated with compensated summation, so outputs sum to 1 within 1e-12
/// even for long vectors.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::argument("softmax requires a non-empty logit vector"));
    }
    if let Some(bad) = logits.iter().find(|x| !x.is_finite()) {
        return Err(Error::numeric(format!("softmax input contains non-finite value {bad}")));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();

    // Kahan summation keeps the normalizer exact enough for 10k-long inputs.
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &e in &exps {
        let y = e - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Elementwise activation kinds used by the model stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    LeakyRelu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64, alpha: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::Linear => x,
        }
    }

    /// Derivative at pre-activation `x` with activated output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64, alpha: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Activation> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "leaky_relu" => Ok(Activation::LeakyRelu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::argument(format!("unknown activation kind '{other}'"))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Applies an activation elementwise; shape is preserved.
pub fn apply_activation(kind: Activation, x: &Tensor, alpha: f64) -> Tensor {
    x.map(|v| kind.apply(v, alpha))
}

/// Weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// U(-L, L) with L = sqrt(6 / (fan_in + fan_out)).
    GlorotUniform,
    Zeros,
}

/// Deterministically initializes a tensor of the given shape.
///
/// For rank-2 shapes `[rows, cols]`, fan_in = cols and fan_out = rows;
/// rank-1 shapes use their length for both. Draws consume the generator in
/// row-major order, so a given (seed, shape, scheme) is bit-reproducible.
pub fn init_params(shape: &[usize], rng: &mut Rng, scheme: InitScheme) -> Result<Tensor> {
    if shape.is_empty() || shape.iter().any(|&d| d == 0) {
        return Err(Error::argument(format!("init_params requires positive extents, got {shape:?}")));
    }
    match scheme {
        InitScheme::Zeros => Ok(Tensor::zeros(shape)),
        InitScheme::GlorotUniform => {
            let (fan_in, fan_out) = match shape.len() {
                1 => (shape[0], shape[0]),
                _ => (shape[1..].iter().product::<usize>(), shape[0]),
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| rng.uniform(-limit, limit)).collect();
            Tensor::from_vec(shape, data)
        }
    }
}

/// Central-difference gradient check over a flat parameter vector.
///
/// For each coordinate, compares `analytic[i]` against
/// `(loss(p + eps e_i) - loss(p - eps e_i)) / (2 eps)` and returns the
/// maximum over coordinates of `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check(
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
    analytic: &[f64],
    theta: &[f64],
    epsilon: f64,
) -> Result<f64> {
    if !(1e-6..=1e-4).contains(&epsilon) {
        return Err(Error::argument(format!(
            "grad_check epsilon must lie in [1e-6, 1e-4], got {epsilon}"
        )));
    }
    if analytic.len() != theta.len() {
        return Err(Error::argument(format!(
            "grad_check got {} analytic gradients for {} parameters",
            analytic.len(),
            theta.len()
        )));
    }

    let mut scratch = theta.to_vec();
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        scratch[i] = theta[i] + epsilon;
        let up = loss(&scratch)?;
        scratch[i] = theta[i] - epsilon;
        let down = loss(&scratch)?;
        scratch[i] = theta[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::numeric(format!(
                "loss is non-finite near parameter {i} (loss+ = {up}, loss- = {down})"
            )));
        }
        let numeric = (up - down) / (2.0 * epsilon);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}
