//! Fully-connected feed-forward networks with hand-written forward and
//! backward passes.
//!
//! Inputs and outputs are column-batched: a `d × m` input matrix holds `m`
//! samples, one per column, and the network maps it to `out_dim × m`.

mod file;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Rng, Scalar};

pub use file::{load_net, save_net, NetFile, NET_FORMAT, NET_FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    ReLU,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::ReLU => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`; the ReLU subgradient at 0 is 0.
    #[inline]
    fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::ReLU => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    /// ReLU hidden layers of the given widths followed by an identity output layer.
    pub fn chain(input: usize, hidden: &[usize], output: usize) -> Vec<LayerSpec> {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(k, w)| {
                let act = if k == last {
                    Activation::Identity
                } else {
                    Activation::ReLU
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect()
    }
}

/// One dense layer `activation(W x + b)`, `W` being `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: DenseMatrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weights: DenseMatrix<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::invalid(format!(
                "bias length {} does not match {} output units",
                bias.len(),
                weights.rows()
            )));
        }
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::invalid("layer dimensions must be at least 1"));
        }
        if !weights.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric("non-finite layer parameter".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.in_dim(), self.out_dim(), self.activation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet<T> {
    layers: Vec<Layer<T>>,
}

/// Activations recorded by [`FeedForwardNet::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    input: DenseMatrix<T>,
    pre: Vec<DenseMatrix<T>>,
    post: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn depth(&self) -> usize {
        self.pre.len()
    }

    pub fn pre_activations(&self) -> &[DenseMatrix<T>] {
        &self.pre
    }

    pub fn post_activations(&self) -> &[DenseMatrix<T>] {
        &self.post
    }

    pub fn batch_size(&self) -> usize {
        self.input.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: DenseMatrix<T>,
    pub bias: Vec<T>,
}

/// Parameter gradients, one entry per layer, summed over the batch columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads<T> {
    pub layers: Vec<LayerGrad<T>>,
}

impl<T: Scalar> ParamGrads<T> {
    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.is_finite() && g.bias.iter().all(|b| b.is_finite()))
    }

    /// Flattened in declaration order: layer by layer, weights (row-major) then bias.
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend_from_slice(g.weights.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out
    }
}

impl<T: Scalar> FeedForwardNet<T> {
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::invalid(format!(
                    "layer {k} outputs {} units but layer {} expects {}",
                    pair[0].out_dim(),
                    k + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (in + out))`, zero biases.
    pub fn init(specs: &[LayerSpec], rng: &mut Rng) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid("empty layer spec list"));
        }
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            if spec.in_dim == 0 || spec.out_dim == 0 {
                return Err(Error::invalid("layer dimensions must be at least 1"));
            }
            let limit = (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt();
            let weights = DenseMatrix::from_fn(spec.out_dim, spec.in_dim, |_, _| {
                T::from_f64_lossy(rng.uniform_in(-limit, limit))
            });
            layers.push(Layer::new(
                weights,
                vec![T::zero(); spec.out_dim],
                spec.activation,
            )?);
        }
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// Parameters flattened in the same order as [`ParamGrads::to_flat`].
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Overwrites all parameters from a flat vector laid out as [`Self::to_flat`].
    pub fn set_flat(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        let mut rest = values;
        for l in &mut self.layers {
            let w = l.weights.as_mut_slice();
            let (head, tail) = rest.split_at(w.len());
            w.copy_from_slice(head);
            let (head, tail) = tail.split_at(l.bias.len());
            l.bias.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn check_input(&self, inputs: &DenseMatrix<T>) -> Result<()> {
        if inputs.rows() != self.input_dim() {
            return Err(Error::invalid(format!(
                "network expects {}-dimensional inputs, got {}",
                self.input_dim(),
                inputs.rows()
            )));
        }
        if !inputs.is_finite() {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        Ok(())
    }

    fn affine(layer: &Layer<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let mut z = layer.weights.matmul(x)?;
        let m = z.cols();
        for (r, &b) in layer.bias.iter().enumerate() {
            for c in 0..m {
                z[(r, c)] = z[(r, c)] + b;
            }
        }
        z.ensure_finite("layer pre-activation")?;
        Ok(z)
    }

    /// Applies the network to every column of `inputs`, keeping the trace for [`Self::backward`].
    pub fn forward(&self, inputs: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, ForwardTrace<T>)> {
        self.check_input(inputs)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<DenseMatrix<T>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post.last().unwrap_or(inputs);
            let z = Self::affine(layer, x)?;
            let act = layer.activation;
            post.push(z.map(|v| act.apply(v)));
            pre.push(z);
        }
        let out = post.last().cloned().expect("at least one layer");
        Ok((
            out,
            ForwardTrace {
                input: inputs.clone(),
                pre,
                post,
            },
        ))
    }

    /// Forward pass without a trace.
    pub fn predict(&self, inputs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_input(inputs)?;
        let mut x = inputs.clone();
        for layer in &self.layers {
            let act = layer.activation;
            x = Self::affine(layer, &x)?.map(|v| act.apply(v));
        }
        Ok(x)
    }

    /// Back-propagates `output_grad` (∂J/∂outputs, `out_dim × m`) through the
    /// recorded trace. Gradients are summed over the batch columns.
    pub fn backward(&self, trace: &ForwardTrace<T>, output_grad: &DenseMatrix<T>) -> Result<ParamGrads<T>> {
        if trace.depth() != self.layers.len() {
            return Err(Error::InvalidState(format!(
                "trace has {} layers, network has {}",
                trace.depth(),
                self.layers.len()
            )));
        }
        for (k, (layer, z)) in self.layers.iter().zip(&trace.pre).enumerate() {
            if z.shape() != (layer.out_dim(), trace.batch_size()) {
                return Err(Error::InvalidState(format!(
                    "trace layer {k} has shape {:?}, network layer outputs {}",
                    z.shape(),
                    layer.out_dim()
                )));
            }
        }
        if output_grad.shape() != (self.output_dim(), trace.batch_size()) {
            return Err(Error::invalid(format!(
                "output gradient is {:?}, expected {}x{}",
                output_grad.shape(),
                self.output_dim(),
                trace.batch_size()
            )));
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let act = layer.activation;
            let delta = upstream.zip_map(&trace.pre[k], |g, z| g * act.derivative(z))?;
            let input = if k == 0 { &trace.input } else { &trace.post[k - 1] };
            let weights = delta.matmul_transpose(input)?;
            let bias = delta.row_sums();
            if k > 0 {
                upstream = layer.weights.transpose_matmul(&delta)?;
            }
            grads.push(LayerGrad { weights, bias });
        }
        grads.reverse();
        Ok(ParamGrads { layers: grads })
    }

    /// `p ← p − lr · ∂p` for every parameter.
    pub fn sgd_step(&mut self, grads: &ParamGrads<T>, lr: T) -> Result<()> {
        if lr <= T::zero() || !lr.is_finite() {
            return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
        }
        if grads.layers.len() != self.layers.len()
            || grads.layers.iter().zip(&self.layers).any(|(g, l)| {
                g.weights.shape() != l.weights.shape() || g.bias.len() != l.bias.len()
            })
        {
            return Err(Error::invalid("gradient shapes do not match the network"));
        }
        if !grads.is_finite() {
            return Err(Error::Numeric("non-finite parameter gradient".into()));
        }
        let mut updated = self.layers.clone();
        for (layer, g) in updated.iter_mut().zip(&grads.layers) {
            for (w, &d) in layer.weights.as_mut_slice().iter_mut().zip(g.weights.as_slice()) {
                *w = *w - lr * d;
            }
            for (b, &d) in layer.bias.iter_mut().zip(&g.bias) {
                *b = *b - lr * d;
            }
            if !layer.weights.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::Numeric("SGD step produced a non-finite parameter".into()));
            }
        }
        self.layers = updated;
        Ok(())
    }
}
