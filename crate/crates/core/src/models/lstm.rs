//! LSTM layer: cell step, sequence forward, and backpropagation through
//! time.
//!
//! Cell equations are the canonical formulation (the standard gate math):
//!
//! ```text
//! z   = W·x_t + U·h_prev + b          split into blocks (i, f, g, o)
//! i   = sigmoid(z_i)    f = sigmoid(z_f)
//! g   = tanh(z_g)       o = sigmoid(z_o)
//! c_t = f ⊙ c_prev + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! Gate blocks are stacked in the fixed order (i, f, g, o): row
//! `gate·units + k` of W, U, b belongs to unit k of that gate. Initial
//! states are h_0 = c_0 = 0.

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, InitScheme, Rng, Tensor};

/// Number of gate blocks per LSTM layer, in order (i, f, g, o).
pub const GATES: usize = 4;

/// One LSTM layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    /// Input weights, shape (4·units, input_dim).
    pub w: Tensor,
    /// Recurrent weights, shape (4·units, units).
    pub u: Tensor,
    /// Biases, shape (4·units).
    pub b: Tensor,
    pub units: usize,
    /// Emit every step's hidden state (true) or only the last (false).
    pub return_sequences: bool,
}

impl LstmLayerParams {
    /// Glorot-uniform weights, zero biases. Draw order is W then U, a fixed
    /// part of the reproducibility contract.
    pub fn new(
        input_dim: usize,
        units: usize,
        return_sequences: bool,
        rng: &mut Rng,
    ) -> Result<LstmLayerParams> {
        let w = crate::numerics::init_params(&[GATES * units, input_dim], rng, InitScheme::GlorotUniform)?;
        let u = crate::numerics::init_params(&[GATES * units, units], rng, InitScheme::GlorotUniform)?;
        let b = Tensor::zeros(&[GATES * units]);
        Ok(LstmLayerParams { w, u, b, units, return_sequences })
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.u.len() + self.b.len()
    }
}

/// Everything one cell step must retain for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// Per-step caches for an unrolled sequence, oldest first.
#[derive(Debug, Clone)]
pub struct LstmLayerCache {
    pub steps: Vec<LstmStepCache>,
}

/// Advances the cell one time step. Returns (h_t, c_t, cache).
pub fn lstm_cell_step(
    layer: &LstmLayerParams,
    x_t: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, LstmStepCache)> {
    let u = layer.units;
    if x_t.len() != layer.input_dim() {
        return Err(Error::shape(format!(
            "lstm cell: input length {} != input_dim {}",
            x_t.len(),
            layer.input_dim()
        )));
    }
    if h_prev.len() != u || c_prev.len() != u {
        return Err(Error::shape(format!(
            "lstm cell: state lengths ({}, {}) != units {u}",
            h_prev.len(),
            c_prev.len()
        )));
    }

    let mut z = layer.w.matvec(x_t);
    let uh = layer.u.matvec(h_prev);
    for ((zv, uv), bv) in z.iter_mut().zip(&uh).zip(layer.b.data()) {
        *zv += uv + bv;
    }

    let mut i = vec![0.0; u];
    let mut f = vec![0.0; u];
    let mut g = vec![0.0; u];
    let mut o = vec![0.0; u];
    for k in 0..u {
        i[k] = sigmoid(z[k]);
        f[k] = sigmoid(z[u + k]);
        g[k] = z[2 * u + k].tanh();
        o[k] = sigmoid(z[3 * u + k]);
    }

    let mut c = vec![0.0; u];
    let mut tanh_c = vec![0.0; u];
    let mut h = vec![0.0; u];
    for k in 0..u {
        c[k] = f[k] * c_prev[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }

    let cache = LstmStepCache {
        x: x_t.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        c: c.clone(),
        tanh_c,
    };
    Ok((h, c, cache))
}

/// Unrolls the cell over a (steps, input_dim) sequence from zero initial
/// state. Output is (steps, units) when return_sequences, else (units).
pub fn lstm_forward(layer: &LstmLayerParams, sequence: &Tensor) -> Result<(Tensor, LstmLayerCache)> {
    let shape = sequence.shape();
    if shape.len() != 2 || shape[1] != layer.input_dim() || shape[0] == 0 {
        return Err(Error::shape(format!(
            "lstm layer expects (steps, {}) input, got {shape:?}",
            layer.input_dim()
        )));
    }
    let steps = shape[0];
    let u = layer.units;

    let mut h = vec![0.0; u];
    let mut c = vec![0.0; u];
    let mut caches = Vec::with_capacity(steps);
    let mut outputs = if layer.return_sequences { Vec::with_capacity(steps * u) } else { Vec::new() };
    for t in 0..steps {
        let x_t = &sequence.data()[t * layer.input_dim()..(t + 1) * layer.input_dim()];
        let (h_t, c_t, cache) = lstm_cell_step(layer, x_t, &h, &c)?;
        h = h_t;
        c = c_t;
        caches.push(cache);
        if layer.return_sequences {
            outputs.extend_from_slice(&h);
        }
    }

    let output = if layer.return_sequences {
        Tensor::from_vec(&[steps, u], outputs)?
    } else {
        Tensor::from_vec(&[u], h)?
    };
    Ok((output, LstmLayerCache { steps: caches }))
}

/// Gradient accumulators mirroring [`LstmLayerParams`] shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerGrads {
    pub dw: Tensor,
    pub du: Tensor,
    pub db: Tensor,
}

impl LstmLayerGrads {
    pub fn zeros_like(layer: &LstmLayerParams) -> LstmLayerGrads {
        LstmLayerGrads {
            dw: Tensor::zeros(layer.w.shape()),
            du: Tensor::zeros(layer.u.shape()),
            db: Tensor::zeros(layer.b.shape()),
        }
    }
}

/// Backpropagation through time for one layer and one sample.
///
/// `d_out` matches the forward output shape: (steps, units) when
/// return_sequences, else (units), which is treated as a gradient on the
/// final step only. Parameter gradients ACCUMULATE into `grads` (batch
/// semantics are summation); the return value is dLoss/dInput with shape
/// (steps, input_dim) for the layer below.
pub fn lstm_layer_backward(
    layer: &LstmLayerParams,
    cache: &LstmLayerCache,
    d_out: &Tensor,
    grads: &mut LstmLayerGrads,
) -> Result<Tensor> {
    let steps = cache.steps.len();
    let u = layer.units;
    let expected: &[usize] = if layer.return_sequences { &[steps, u] } else { &[u] };
    if d_out.shape() != expected {
        return Err(Error::shape(format!(
            "lstm backward: upstream gradient shape {:?}, expected {expected:?}",
            d_out.shape()
        )));
    }

    let input_dim = layer.input_dim();
    let mut dx = Tensor::zeros(&[steps, input_dim]);
    let mut dh_next = vec![0.0; u];
    let mut dc_next = vec![0.0; u];
    let mut dz = vec![0.0; GATES * u];

    for t in (0..steps).rev() {
        let step = &cache.steps[t];
        for k in 0..u {
            let upstream = if layer.return_sequences {
                d_out.at2(t, k)
            } else if t == steps - 1 {
                d_out.data()[k]
            } else {
                0.0
            };
            let dh = upstream + dh_next[k];

            let o = step.o[k];
            let tc = step.tanh_c[k];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];

            let i = step.i[k];
            let f = step.f[k];
            let g = step.g[k];
            dz[k] = dc * g * i * (1.0 - i);
            dz[u + k] = dc * step.c_prev[k] * f * (1.0 - f);
            dz[2 * u + k] = dc * i * (1.0 - g * g);
            dz[3 * u + k] = d_o * o * (1.0 - o);

            dc_next[k] = dc * f;
        }

        grads.dw.add_outer(&dz, &step.x);
        grads.du.add_outer(&dz, &step.h_prev);
        for (acc, d) in grads.db.data_mut().iter_mut().zip(&dz) {
            *acc += d;
        }

        let dx_t = layer.w.matvec_transpose(&dz);
        dx.data_mut()[t * input_dim..(t + 1) * input_dim].copy_from_slice(&dx_t);
        dh_next = layer.u.matvec_transpose(&dz);
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::streams;

    fn zero_layer(input_dim: usize, units: usize, return_sequences: bool) -> LstmLayerParams {
        LstmLayerParams {
            w: Tensor::zeros(&[GATES * units, input_dim]),
            u: Tensor::zeros(&[GATES * units, units]),
            b: Tensor::zeros(&[GATES * units]),
            units,
            return_sequences,
        }
    }

    #[test]
    fn zero_weights_give_half_gates_and_zero_state() {
        let layer = zero_layer(3, 2, true);
        let (h, c, cache) = lstm_cell_step(&layer, &[0.4, -1.0, 2.5], &[0.0; 2], &[0.0; 2]).unwrap();
        assert_eq!(cache.i, vec![0.5, 0.5]);
        assert_eq!(cache.f, vec![0.5, 0.5]);
        assert_eq!(cache.o, vec![0.5, 0.5]);
        assert_eq!(cache.g, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_weights_halve_carried_cell_state() {
        let layer = zero_layer(1, 1, true);
        let (h, c, _) = lstm_cell_step(&layer, &[1.0], &[0.3], &[0.8]).unwrap();
        assert_eq!(c, vec![0.4]);
        assert_eq!(h, vec![0.5 * 0.4f64.tanh()]);
    }

    #[test]
    fn bias_construction_carries_cell_state_exactly() {
        // b_f = +40 saturates the forget gate to 1.0 in f64; zero W/U keep
        // g = 0, so i·g vanishes and c passes through untouched.
        let mut layer = zero_layer(2, 2, true);
        layer.b.data_mut()[2] = 40.0;
        layer.b.data_mut()[3] = 40.0;
        layer.b.data_mut()[0] = -40.0;
        layer.b.data_mut()[1] = -40.0;
        let c_prev = [0.123456789, -0.9];
        let (_, c, cache) = lstm_cell_step(&layer, &[5.0, -5.0], &[0.2, 0.2], &c_prev).unwrap();
        assert_eq!(cache.f, vec![1.0, 1.0]);
        assert_eq!(c, c_prev.to_vec());
    }

    #[test]
    fn two_unit_cell_matches_scalar_oracle() {
        let mut rng = Rng::with_stream(42, streams::INIT);
        let layer = LstmLayerParams::new(3, 2, true, &mut rng).unwrap();
        let x = [0.1, -0.2, 0.3];
        let h_prev = [0.05, -0.1];
        let c_prev = [0.2, 0.3];
        let (h, c, _) = lstm_cell_step(&layer, &x, &h_prev, &c_prev).unwrap();

        // Scalar-by-scalar re-derivation with explicit index arithmetic.
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let u = 2;
        let mut z = [0.0; 8];
        for (r, zv) in z.iter_mut().enumerate() {
            let mut acc = layer.b.data()[r];
            for (col, xv) in x.iter().enumerate() {
                acc += layer.w.at2(r, col) * xv;
            }
            for (col, hv) in h_prev.iter().enumerate() {
                acc += layer.u.at2(r, col) * hv;
            }
            *zv = acc;
        }
        for k in 0..u {
            let i = sig(z[k]);
            let f = sig(z[u + k]);
            let g = z[2 * u + k].tanh();
            let o = sig(z[3 * u + k]);
            let c_expect = f * c_prev[k] + i * g;
            let h_expect = o * c_expect.tanh();
            assert!((c[k] - c_expect).abs() < 1e-12, "c[{k}]");
            assert!((h[k] - h_expect).abs() < 1e-12, "h[{k}]");
        }
    }

    #[test]
    fn cell_step_rejects_mismatched_dimensions() {
        let layer = zero_layer(3, 2, true);
        assert!(matches!(
            lstm_cell_step(&layer, &[1.0, 2.0], &[0.0; 2], &[0.0; 2]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            lstm_cell_step(&layer, &[1.0, 2.0, 3.0], &[0.0; 1], &[0.0; 2]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn forward_output_shape_follows_return_sequences() {
        let seq = Tensor::from_vec(&[8, 3], (0..24).map(|v| v as f64 / 24.0).collect()).unwrap();
        let full = zero_layer(3, 5, true);
        let (out, cache) = lstm_forward(&full, &seq).unwrap();
        assert_eq!(out.shape(), &[8, 5]);
        assert_eq!(cache.steps.len(), 8);
        assert!(out.data().iter().all(|&v| v == 0.0));

        let last = zero_layer(3, 5, false);
        let (out, _) = lstm_forward(&last, &seq).unwrap();
        assert_eq!(out.shape(), &[5]);
    }

    #[test]
    fn forward_rejects_wrong_feature_count() {
        let layer = zero_layer(3, 2, true);
        let seq = Tensor::from_vec(&[4, 2], vec![0.0; 8]).unwrap();
        assert!(matches!(lstm_forward(&layer, &seq), Err(Error::Shape(_))));
    }

    #[test]
    fn backward_accumulates_across_calls() {
        let mut rng = Rng::with_stream(7, streams::INIT);
        let layer = LstmLayerParams::new(2, 3, false, &mut rng).unwrap();
        let seq = Tensor::from_vec(&[4, 2], (0..8).map(|v| v as f64 / 8.0).collect()).unwrap();
        let (_, cache) = lstm_forward(&layer, &seq).unwrap();
        let d_out = Tensor::from_vec(&[3], vec![0.1, -0.2, 0.3]).unwrap();

        let mut once = LstmLayerGrads::zeros_like(&layer);
        lstm_layer_backward(&layer, &cache, &d_out, &mut once).unwrap();
        let mut twice = LstmLayerGrads::zeros_like(&layer);
        lstm_layer_backward(&layer, &cache, &d_out, &mut twice).unwrap();
        lstm_layer_backward(&layer, &cache, &d_out, &mut twice).unwrap();
        for (a, b) in once.dw.data().iter().zip(twice.dw.data()) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }
}
