//! Fully connected encoder `H = MLP(X)` with hand-written reverse mode and an
//! Adam optimizer using decoupled weight decay.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative evaluated at the pre-activation; 0 at exactly 0.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Encoder weights plus the trainable cluster centroids.
///
/// Layer `l` maps `x ↦ x·W_l + b_l`, with `W_l` of shape
/// `layer_dims[l] × layer_dims[l + 1]`. Every layer except the last is
/// followed by the activation.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activation: Activation,
    pub centroids: Array2<f64>,
}

impl EncoderParams {
    /// Scaled-uniform weights in `±√(6/(fan_in + fan_out))`, zero biases and
    /// zero centroids.
    pub fn init<R: Rng>(layer_dims: &[usize], n_clusters: usize, rng: &mut R) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "layer_dims",
                reason: format!("need at least two positive sizes, got {layer_dims:?}"),
            });
        }
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.random_range(-bound..bound)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        let d = *layer_dims.last().unwrap();
        Ok(EncoderParams {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            activation: Activation::Relu,
            centroids: Array2::zeros((n_clusters, d)),
        })
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
            && self.centroids.iter().all(|v| v.is_finite())
    }
}

/// Per-layer inputs and pre-activations recorded by [`forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

pub fn forward(params: &EncoderParams, x: &ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    if x.ncols() != params.input_dim() {
        return Err(Error::shape("encoder input columns", params.input_dim(), x.ncols()));
    }
    let last = params.n_layers() - 1;
    let mut inputs = Vec::with_capacity(params.n_layers());
    let mut pre_activations = Vec::with_capacity(params.n_layers());
    let mut current = x.to_owned();
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let mut z = current.dot(w);
        z += b;
        let next = if l == last {
            z.clone()
        } else {
            z.mapv(|v| params.activation.apply(v))
        };
        inputs.push(current);
        pre_activations.push(z);
        current = next;
    }
    Ok((
        current,
        ForwardCache {
            inputs,
            pre_activations,
        },
    ))
}

/// Gradients for every trainable tensor, shaped like [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub centroids: Array2<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        Gradients {
            weights: params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: params.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            centroids: Array2::zeros(params.centroids.raw_dim()),
        }
    }

    fn tensors(&self) -> impl Iterator<Item = (String, &[f64])> {
        let w = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| (format!("weights[{i}]"), w.as_slice().unwrap()));
        let b = self
            .biases
            .iter()
            .enumerate()
            .map(|(i, b)| (format!("biases[{i}]"), b.as_slice().unwrap()));
        w.chain(b)
            .chain(std::iter::once(("centroids".to_string(), self.centroids.as_slice().unwrap())))
    }
}

/// Reverse pass through [`forward`]. Centroid gradients are left at zero.
pub fn backward(
    params: &EncoderParams,
    cache: &ForwardCache,
    d_output: &ArrayView2<f64>,
) -> Result<Gradients> {
    if cache.inputs.len() != params.n_layers() {
        return Err(Error::shape("cache layers", params.n_layers(), cache.inputs.len()));
    }
    let expected = cache.pre_activations.last().unwrap().dim();
    if d_output.dim() != expected {
        return Err(Error::shape(
            "output cotangent",
            format!("{expected:?}"),
            format!("{:?}", d_output.dim()),
        ));
    }
    let mut grads = Gradients::zeros_like(params);
    let last = params.n_layers() - 1;
    let mut delta = d_output.to_owned();
    for l in (0..params.n_layers()).rev() {
        if l != last {
            Zip::from(&mut delta)
                .and(&cache.pre_activations[l])
                .for_each(|d, &z| *d *= params.activation.derivative(z));
        }
        grads.weights[l] = cache.inputs[l].t().dot(&delta);
        grads.biases[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            delta = delta.dot(&params.weights[l].t());
        }
    }
    Ok(grads)
}

/// Adam moments and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &EncoderParams, learning_rate: f64, weight_decay: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: format!("must be positive, got {learning_rate}"),
            });
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "weight_decay",
                reason: format!("must be non-negative, got {weight_decay}"),
            });
        }
        Ok(AdamState {
            first_moment: Gradients::zeros_like(params),
            second_moment: Gradients::zeros_like(params),
            step_count: 0,
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        })
    }
}

struct AdamCoefficients {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    bias1: f64,
    bias2: f64,
}

impl AdamCoefficients {
    fn update(&self, param: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64], decay: f64) {
        for (((p, m), v), &g) in param.iter_mut().zip(m).zip(v).zip(g) {
            *p *= decay;
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / self.bias1;
            let v_hat = *v / self.bias2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// One Adam step. Weight decay multiplies encoder weights and biases by
/// `1 - lr·wd` before the moment update; centroids are not decayed.
pub fn adam_step(params: &mut EncoderParams, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    if grads.weights.len() != params.n_layers() || grads.biases.len() != params.n_layers() {
        return Err(Error::shape("gradient layers", params.n_layers(), grads.weights.len()));
    }
    for (l, (g, w)) in grads.weights.iter().zip(&params.weights).enumerate() {
        if g.dim() != w.dim() || grads.biases[l].dim() != params.biases[l].dim() {
            return Err(Error::shape(
                "gradient layer shape",
                format!("{:?}", w.dim()),
                format!("{:?}", g.dim()),
            ));
        }
    }
    if grads.centroids.dim() != params.centroids.dim() {
        return Err(Error::shape(
            "centroid gradient",
            format!("{:?}", params.centroids.dim()),
            format!("{:?}", grads.centroids.dim()),
        ));
    }
    if let Some((name, _)) = grads.tensors().find(|(_, t)| t.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteGradient { parameter: name });
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let coef = AdamCoefficients {
        lr: state.learning_rate,
        beta1: state.beta1,
        beta2: state.beta2,
        epsilon: state.epsilon,
        bias1: 1.0 - state.beta1.powi(t),
        bias2: 1.0 - state.beta2.powi(t),
    };
    let decay = 1.0 - state.learning_rate * state.weight_decay;
    let (m, v) = (&mut state.first_moment, &mut state.second_moment);
    for l in 0..params.n_layers() {
        coef.update(
            params.weights[l].as_slice_mut().unwrap(),
            m.weights[l].as_slice_mut().unwrap(),
            v.weights[l].as_slice_mut().unwrap(),
            grads.weights[l].as_slice().unwrap(),
            decay,
        );
        coef.update(
            params.biases[l].as_slice_mut().unwrap(),
            m.biases[l].as_slice_mut().unwrap(),
            v.biases[l].as_slice_mut().unwrap(),
            grads.biases[l].as_slice().unwrap(),
            decay,
        );
    }
    coef.update(
        params.centroids.as_slice_mut().unwrap(),
        m.centroids.as_slice_mut().unwrap(),
        v.centroids.as_slice_mut().unwrap(),
        grads.centroids.as_slice().unwrap(),
        1.0,
    );
    Ok(())
}
