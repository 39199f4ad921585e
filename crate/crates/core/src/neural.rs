//! Minimal dense-network substrate: batched forward pass, exact reverse-mode
//! gradients, adaptive-moment updates and soft target synchronization.
//!
//! Parameters live in one flat array per network (weights then bias per
//! layer) with the optimizer moments alongside, which keeps soft updates and
//! checkpointing trivial.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
            Activation::Identity => T::one(),
        }
    }
}

/// Architecture of one dense network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl NetSpec {
    /// Policy network: bounded symmetric output in (−1, 1).
    pub fn actor(state_dim: usize, action_dim: usize, hidden: &[usize]) -> Self {
        NetSpec {
            input_dim: state_dim,
            output_dim: action_dim,
            hidden: hidden.to_vec(),
            hidden_activation: Activation::Relu,
            output_activation: Activation::Tanh,
        }
    }

    /// Value network over concatenated (state, action): scalar identity output.
    pub fn critic(state_dim: usize, action_dim: usize, hidden: &[usize]) -> Self {
        NetSpec {
            input_dim: state_dim + action_dim,
            output_dim: 1,
            hidden: hidden.to_vec(),
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.iter().any(|w| *w == 0) {
            return Err(Error::Config("network dimensions must be >= 1".into()));
        }
        Ok(())
    }

    /// (input, output) width of every affine layer.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for width in &self.hidden {
            dims.push((prev, *width));
            prev = *width;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    fn activation_of_layer(&self, layer: usize, n_layers: usize) -> Activation {
        if layer + 1 == n_layers {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerLayout {
    w_off: usize,
    b_off: usize,
    rows: usize,
    cols: usize,
}

/// Flat parameter store of one network: values plus first/second optimizer
/// moments of identical shape and the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor<T> {
    pub values: Vec<T>,
    pub moment1: Vec<T>,
    pub moment2: Vec<T>,
    pub step: u64,
}

impl<T: Scalar> ParamTensor<T> {
    fn zeros(len: usize) -> Self {
        ParamTensor {
            values: vec![T::zero(); len],
            moment1: vec![T::zero(); len],
            moment2: vec![T::zero(); len],
            step: 0,
        }
    }
}

/// A dense network: spec, layer layout and flat parameters.
#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: NetSpec,
    layout: Vec<LayerLayout>,
    params: ParamTensor<T>,
}

/// Per-layer state retained by the forward pass for backpropagation.
pub struct ForwardCache<T> {
    /// Input of every layer (batch × in_dim).
    inputs: Vec<Array2<T>>,
    /// Pre-activation of every layer (batch × out_dim).
    preacts: Vec<Array2<T>>,
}

/// Flat parameter gradients plus the gradient w.r.t. the network input.
pub struct Gradients<T> {
    pub flat: Vec<T>,
    pub input: Array2<T>,
}

fn layout_of(spec: &NetSpec) -> Vec<LayerLayout> {
    let mut layout = Vec::new();
    let mut off = 0;
    for (rows, cols) in spec.layer_dims() {
        layout.push(LayerLayout {
            w_off: off,
            b_off: off + rows * cols,
            rows,
            cols,
        });
        off += rows * cols + cols;
    }
    layout
}

impl<T: Scalar> Network<T> {
    /// Fan-in scaled uniform initialization; `final_scale` shrinks the last
    /// layer (DDPG actors start near the neutral action).
    pub fn init<R: Rng + ?Sized>(spec: NetSpec, final_scale: T, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layout = layout_of(&spec);
        let mut params = ParamTensor::zeros(spec.param_count());
        let n_layers = layout.len();
        for (l, lay) in layout.iter().enumerate() {
            let mut bound = (T::one() / T::of(lay.rows as f64)).sqrt();
            if l + 1 == n_layers {
                bound = bound * final_scale;
            }
            for i in 0..lay.rows * lay.cols + lay.cols {
                params.values[lay.w_off + i] = rng.random_range(-bound..bound);
            }
        }
        Ok(Network { spec, layout, params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamTensor<T> {
        &self.params
    }

    pub fn values(&self) -> &[T] {
        &self.params.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.params.values
    }

    fn weight_view(&self, l: usize) -> ArrayView2<'_, T> {
        let lay = self.layout[l];
        ArrayView2::from_shape(
            (lay.rows, lay.cols),
            &self.params.values[lay.w_off..lay.w_off + lay.rows * lay.cols],
        )
        .expect("layout in bounds")
    }

    fn bias_view(&self, l: usize) -> ArrayView1<'_, T> {
        let lay = self.layout[l];
        ArrayView1::from_shape(lay.cols, &self.params.values[lay.b_off..lay.b_off + lay.cols])
            .expect("layout in bounds")
    }

    /// Batched forward pass; rows of `input` are samples.
    pub fn forward_batch(&self, input: &Array2<T>) -> Result<(Array2<T>, ForwardCache<T>)> {
        if input.ncols() != self.spec.input_dim {
            return Err(Error::ShapeMismatch {
                context: "network input",
                expected: self.spec.input_dim,
                got: input.ncols(),
            });
        }
        let n_layers = self.layout.len();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n_layers),
            preacts: Vec::with_capacity(n_layers),
        };
        let mut x = input.clone();
        for l in 0..n_layers {
            let mut z = x.dot(&self.weight_view(l));
            z += &self.bias_view(l);
            let act = self.spec.activation_of_layer(l, n_layers);
            let out = z.mapv(|v| act.apply(v));
            cache.inputs.push(x);
            cache.preacts.push(z);
            x = out;
        }
        Ok((x, cache))
    }

    /// Single-sample forward pass without a cache.
    pub fn forward_one(&self, input: &[T]) -> Result<Vec<T>> {
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec())
            .expect("one row");
        let (out, _) = self.forward_batch(&x)?;
        Ok(out.row(0).to_vec())
    }

    /// Exact gradients of `Σ_batch ⟨output_gradient, output⟩` w.r.t. every
    /// parameter and the input.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache<T>,
        output_gradient: &Array2<T>,
    ) -> Result<Gradients<T>> {
        let n_layers = self.layout.len();
        if output_gradient.ncols() != self.spec.output_dim {
            return Err(Error::ShapeMismatch {
                context: "output gradient",
                expected: self.spec.output_dim,
                got: output_gradient.ncols(),
            });
        }
        let mut flat = vec![T::zero(); self.params.values.len()];
        let mut grad = output_gradient.clone();
        for l in (0..n_layers).rev() {
            let act = self.spec.activation_of_layer(l, n_layers);
            // dL/dz = dL/dout ∘ act'(z)
            let dz = {
                let mut dz = grad;
                dz.zip_mut_with(&cache.preacts[l], |g, z| *g = *g * act.derivative(*z));
                dz
            };
            let x = &cache.inputs[l];
            let dw = x.t().dot(&dz);
            let db = dz.sum_axis(Axis(0));
            let lay = self.layout[l];
            flat[lay.w_off..lay.w_off + lay.rows * lay.cols]
                .copy_from_slice(dw.as_standard_layout().as_slice().expect("contiguous"));
            flat[lay.b_off..lay.b_off + lay.cols]
                .copy_from_slice(db.as_slice().expect("contiguous"));
            grad = dz.dot(&self.weight_view(l).t());
        }
        Ok(Gradients { flat, input: grad })
    }

    /// One adaptive-moment step with bias correction; increments the step
    /// counter.
    pub fn adam_step(&mut self, gradients: &[T], lr: T, betas: (T, T), eps: T) {
        assert_eq!(gradients.len(), self.params.values.len(), "gradient shape");
        let (b1, b2) = betas;
        self.params.step += 1;
        let t = T::of(self.params.step as f64);
        let corr1 = T::one() - b1.powf(t);
        let corr2 = T::one() - b2.powf(t);
        for i in 0..gradients.len() {
            let g = gradients[i];
            let m = b1 * self.params.moment1[i] + (T::one() - b1) * g;
            let v = b2 * self.params.moment2[i] + (T::one() - b2) * g * g;
            self.params.moment1[i] = m;
            self.params.moment2[i] = v;
            let m_hat = m / corr1;
            let v_hat = v / corr2;
            self.params.values[i] = self.params.values[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }

    /// `target ← τ·source + (1−τ)·target`, elementwise over the values.
    pub fn soft_update_from(&mut self, source: &Network<T>, tau: T) {
        assert_eq!(self.spec, source.spec, "soft update across different specs");
        assert!(tau > T::zero() && tau <= T::one());
        for (t, s) in self.params.values.iter_mut().zip(&source.params.values) {
            *t = tau * *s + (T::one() - tau) * *t;
        }
    }

    /// Serializable snapshot of the architecture and values.
    pub fn to_checkpoint(&self, name: &str) -> CheckpointNet<T>
    where
        T: Clone,
    {
        CheckpointNet {
            name: name.to_string(),
            spec: self.spec.clone(),
            values: self.params.values.clone(),
        }
    }

    /// Rebuild a network from a checkpoint entry (fresh optimizer state).
    pub fn from_checkpoint(net: &CheckpointNet<T>) -> Result<Self> {
        net.spec.validate()?;
        if net.values.len() != net.spec.param_count() {
            return Err(Error::Checkpoint(format!(
                "network '{}' carries {} values, spec wants {}",
                net.name,
                net.values.len(),
                net.spec.param_count()
            )));
        }
        let layout = layout_of(&net.spec);
        let mut params = ParamTensor::zeros(net.values.len());
        params.values.copy_from_slice(&net.values);
        Ok(Network {
            spec: net.spec.clone(),
            layout,
            params,
        })
    }
}

/// One named network inside a checkpoint file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointNet<T> {
    pub name: String,
    pub spec: NetSpec,
    pub values: Vec<T>,
}

/// Versioned model file: JSON with fixed field order, loss-free float
/// round-tripping and no optimizer state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format: String,
    pub version: u32,
    pub networks: Vec<CheckpointNet<T>>,
}

pub const CHECKPOINT_FORMAT: &str = "ma-cnoma-model";
pub const CHECKPOINT_VERSION: u32 = 1;

impl<T: Scalar> Checkpoint<T> {
    pub fn new(networks: Vec<CheckpointNet<T>>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            networks,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()>
    where
        T: Serialize,
    {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let text = std::fs::read_to_string(path)?;
        let ck: Checkpoint<T> =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format '{}'", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (supported: {})",
                ck.version, CHECKPOINT_VERSION
            )));
        }
        Ok(ck)
    }

    pub fn network(&self, name: &str) -> Result<Network<T>> {
        let net = self
            .networks
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("no network named '{name}'")))?;
        Network::from_checkpoint(net)
    }
}
