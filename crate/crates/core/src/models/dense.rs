//! Fully connected layers and the frozen standardization stage that fronts
//! the DNN.

use crate::error::{Error, Result};
use crate::numerics::{Activation, InitScheme, Rng, Tensor};

/// One dense layer: y = activation(W·x + b).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams {
    /// Shape (out_dim, in_dim).
    pub w: Tensor,
    /// Shape (out_dim).
    pub b: Tensor,
    pub activation: Activation,
    pub alpha: f64,
}

impl DenseLayerParams {
    /// Glorot-uniform weights, zero biases.
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        alpha: f64,
        rng: &mut Rng,
    ) -> Result<DenseLayerParams> {
        let w = crate::numerics::init_params(&[out_dim, in_dim], rng, InitScheme::GlorotUniform)?;
        let b = Tensor::zeros(&[out_dim]);
        Ok(DenseLayerParams { w, b, activation, alpha })
    }

    pub fn in_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Forward cache: the input, pre-activation, and output of one layer.
#[derive(Debug, Clone)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn dense_forward(layer: &DenseLayerParams, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
    if x.len() != layer.in_dim() {
        return Err(Error::shape(format!(
            "dense layer expects input of length {}, got {}",
            layer.in_dim(),
            x.len()
        )));
    }
    let mut z = layer.w.matvec(x);
    for (zv, bv) in z.iter_mut().zip(layer.b.data()) {
        *zv += bv;
    }
    let y: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v, layer.alpha)).collect();
    Ok((y.clone(), DenseCache { x: x.to_vec(), z, y }))
}

/// Gradient accumulators mirroring [`DenseLayerParams`] shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dw: Tensor,
    pub db: Tensor,
}

impl DenseGrads {
    pub fn zeros_like(layer: &DenseLayerParams) -> DenseGrads {
        DenseGrads { dw: Tensor::zeros(layer.w.shape()), db: Tensor::zeros(layer.b.shape()) }
    }
}

/// Backprop through one dense layer for one sample. Parameter gradients
/// accumulate into `grads`; returns dLoss/dInput.
pub fn dense_backward(
    layer: &DenseLayerParams,
    cache: &DenseCache,
    dy: &[f64],
    grads: &mut DenseGrads,
) -> Result<Vec<f64>> {
    if dy.len() != layer.out_dim() {
        return Err(Error::shape(format!(
            "dense backward: upstream gradient length {}, expected {}",
            dy.len(),
            layer.out_dim()
        )));
    }
    let dz: Vec<f64> = dy
        .iter()
        .zip(cache.z.iter().zip(&cache.y))
        .map(|(d, (&z, &y))| d * layer.activation.derivative(z, y, layer.alpha))
        .collect();
    grads.dw.add_outer(&dz, &cache.x);
    for (acc, d) in grads.db.data_mut().iter_mut().zip(&dz) {
        *acc += d;
    }
    Ok(layer.w.matvec_transpose(&dz))
}

/// Frozen affine standardization: x' = (x − mean) / std per input position.
/// Statistics are fitted once at training start and never receive
/// gradients; a zero-variance position keeps std = 1 so it maps to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardize {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardize {
    /// Identity transform (mean 0, std 1), the state before fitting.
    pub fn identity(dim: usize) -> Standardize {
        Standardize { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    /// Population mean/std per position over the given rows.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Standardize> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::argument("standardize fit needs at least one row"));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape("standardize fit rows have inconsistent lengths"));
        }
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .iter()
            .map(|&s| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        Ok(Standardize { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!(
                "standardize expects input of length {}, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::streams;

    #[test]
    fn forward_is_affine_then_activation() {
        let layer = DenseLayerParams {
            w: Tensor::from_vec(&[2, 3], vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.5]).unwrap(),
            b: Tensor::from_vec(&[2], vec![0.1, -2.0]).unwrap(),
            activation: Activation::LeakyRelu,
            alpha: 0.01,
        };
        let (y, cache) = dense_forward(&layer, &[2.0, 4.0, 1.0]).unwrap();
        // z = [2 - 1 + 0.1, 3.5 - 2] = [1.1, 1.5]; both positive so leaky is identity.
        assert!((y[0] - 1.1).abs() < 1e-15);
        assert!((y[1] - 1.5).abs() < 1e-15);
        assert_eq!(cache.x, vec![2.0, 4.0, 1.0]);

        let mut negative = layer.clone();
        negative.b.data_mut()[0] = -3.0;
        let (y, _) = dense_forward(&negative, &[2.0, 4.0, 1.0]).unwrap();
        assert!((y[0] - 0.01 * (1.0 - 3.0)).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = Rng::with_stream(42, streams::INIT);
        let layer = DenseLayerParams::new(3, 2, Activation::LeakyRelu, 0.01, &mut rng).unwrap();
        let x = [0.3, -0.7, 0.2];
        let target = [0.5, -0.5];

        let loss_of = |layer: &DenseLayerParams| -> f64 {
            let (y, _) = dense_forward(layer, &x).unwrap();
            y.iter().zip(&target).map(|(p, t)| (p - t) * (p - t)).sum()
        };

        let (y, cache) = dense_forward(&layer, &x).unwrap();
        let dy: Vec<f64> = y.iter().zip(&target).map(|(p, t)| 2.0 * (p - t)).collect();
        let mut grads = DenseGrads::zeros_like(&layer);
        dense_backward(&layer, &cache, &dy, &mut grads).unwrap();

        let eps = 1e-6;
        for idx in 0..layer.w.len() {
            let mut plus = layer.clone();
            plus.w.data_mut()[idx] += eps;
            let mut minus = layer.clone();
            minus.w.data_mut()[idx] -= eps;
            let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
            assert!((grads.dw.data()[idx] - numeric).abs() < 1e-7, "dW[{idx}]");
        }
    }

    #[test]
    fn standardize_fit_centers_and_scales() {
        let rows = vec![vec![1.0, 10.0, 5.0], vec![3.0, 10.0, 7.0]];
        let s = Standardize::fit(&rows).unwrap();
        assert_eq!(s.mean, vec![2.0, 10.0, 6.0]);
        // Population std of {1,3} is 1; constant column keeps std 1.
        assert_eq!(s.std, vec![1.0, 1.0, 1.0]);
        assert_eq!(s.apply(&[2.0, 10.0, 6.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.apply(&[3.0, 10.0, 6.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_rejects_empty_and_ragged() {
        assert!(Standardize::fit(&[]).is_err());
        assert!(Standardize::fit(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Standardize::identity(3).apply(&[1.0]).is_err());
    }
}
