use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::Rng;

use crate::error::{Error, Result};

use super::adam::{adam_step, AdamState};
use super::loss::{predict, softmax_xent};
use super::spec::{LayerShape, LayerSpec, NetworkSpec};
use super::{activation, conv, dense, init, pool, Real, Tensor4};

#[derive(Debug, Clone)]
struct Param<T> {
    value: Vec<T>,
    grad: Vec<T>,
}

impl<T: Real> Param<T> {
    fn new(value: Vec<T>) -> Self {
        let grad = vec![T::zero(); value.len()];
        Self { value, grad }
    }
}

#[derive(Debug, Clone)]
enum Layer<T> {
    Conv { kernel: usize, weights: Param<T>, bias: Param<T> },
    Pool { argmax: Vec<u32> },
    Relu,
    Dense { weights: Param<T>, bias: Param<T> },
}

/// Loss and number of correct arg-max predictions for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
}

/// A compiled [`NetworkSpec`] with parameters, cached activations and
/// gradient buffers.
#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: NetworkSpec,
    shapes: Vec<LayerShape>,
    layers: Vec<Layer<T>>,
    acts: Vec<Tensor4<T>>,
    grad: Tensor4<T>,
    grad_next: Tensor4<T>,
    scratch: Vec<T>,
}

fn ensure_dims<T: Real>(t: &mut Tensor4<T>, dims: [usize; 4]) {
    if t.dims() != dims {
        *t = Tensor4::zeros(dims);
    }
}

impl<T: Real> Network<T> {
    /// Xavier-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Result<Self> {
        Self::build(spec, |shape, len, rng: &mut R| match shape.layer {
            LayerSpec::Conv { out_channels, kernel } => {
                let area = kernel * kernel;
                init::xavier_init(rng, shape.input[0] * area, out_channels * area, len)
            }
            LayerSpec::Dense { units } | LayerSpec::Classifier { classes: units } => {
                init::xavier_init(rng, shape.input.iter().product(), units, len)
            }
            _ => unreachable!("parameter-free layer"),
        }, rng)
    }

    /// All parameters zero.
    pub fn zeroed(spec: &NetworkSpec) -> Result<Self> {
        Self::build(spec, |_, len, _: &mut ()| vec![T::zero(); len], &mut ())
    }

    fn build<R: ?Sized>(
        spec: &NetworkSpec,
        mut weights: impl FnMut(&LayerShape, usize, &mut R) -> Vec<T>,
        rng: &mut R,
    ) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut layers = Vec::with_capacity(shapes.len());
        for shape in &shapes {
            let layer = match shape.layer {
                LayerSpec::Conv { out_channels, kernel } => {
                    let len = out_channels * shape.input[0] * kernel * kernel;
                    Layer::Conv {
                        kernel,
                        weights: Param::new(weights(shape, len, rng)),
                        bias: Param::new(vec![T::zero(); out_channels]),
                    }
                }
                LayerSpec::Pool => Layer::Pool { argmax: Vec::new() },
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Dense { units } | LayerSpec::Classifier { classes: units } => {
                    let len = units * shape.input.iter().product::<usize>();
                    Layer::Dense {
                        weights: Param::new(weights(shape, len, rng)),
                        bias: Param::new(vec![T::zero(); units]),
                    }
                }
            };
            layers.push(layer);
        }
        Ok(Self {
            spec: spec.clone(),
            acts: vec![Tensor4::zeros([0, 0, 0, 0]); shapes.len() + 1],
            shapes,
            layers,
            grad: Tensor4::zeros([0, 0, 0, 0]),
            grad_next: Tensor4::zeros([0, 0, 0, 0]),
            scratch: Vec::new(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn input_dims(&self, batch: usize) -> [usize; 4] {
        [batch, self.spec.input_channels, self.spec.input_side, self.spec.input_side]
    }

    /// Runs the network, caching what backpropagation needs, and returns
    /// the logits `(N, classes, 1, 1)`.
    pub fn forward(&mut self, input: &Tensor4<T>) -> Result<&Tensor4<T>> {
        let n = input.batch();
        if input.dims() != self.input_dims(n) {
            return Err(Error::ShapeMismatch(format!(
                "input {:?}, network expects {:?}",
                input.dims(),
                self.input_dims(n)
            )));
        }
        ensure_dims(&mut self.acts[0], input.dims());
        self.acts[0].data_mut().copy_from_slice(input.data());
        for (i, (layer, shape)) in self.layers.iter_mut().zip(&self.shapes).enumerate() {
            let (head, tail) = self.acts.split_at_mut(i + 1);
            let x = &head[i];
            let y = &mut tail[0];
            let [c, h, w] = shape.output;
            ensure_dims(y, [n, c, h, w]);
            match layer {
                Layer::Conv { kernel, weights, bias } => {
                    conv::forward_into(x, &weights.value, &bias.value, *kernel, y, &mut self.scratch)
                }
                Layer::Pool { argmax } => pool::forward_into(x, y, argmax),
                Layer::Relu => {
                    y.data_mut().copy_from_slice(x.data());
                    activation::relu_in_place(y.data_mut());
                }
                Layer::Dense { weights, bias } => {
                    dense::forward_into(x, &weights.value, &bias.value, y.data_mut())
                }
            }
        }
        let logits = &self.acts[self.layers.len()];
        logits.check_finite("logits")?;
        Ok(logits)
    }

    /// Identifies the piece of the piecewise-linear map used by the last
    /// forward pass: every ReLU on/off bit and every pooling winner.
    pub fn active_piece(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Relu => {
                    for chunk in self.acts[i + 1].data().chunks(64) {
                        let bits = chunk.iter().enumerate().fold(0u64, |b, (j, v)| b | (u64::from(*v > T::zero()) << j));
                        h.write_u64(bits);
                    }
                }
                Layer::Pool { argmax } => argmax.hash(&mut h),
                _ => {}
            }
        }
        h.finish()
    }

    /// Backpropagates `grad_logits` through the last forward pass, replacing
    /// every parameter gradient.
    pub fn backward(&mut self, grad_logits: &Tensor4<T>) -> Result<()> {
        let top = self.layers.len();
        if self.acts[top].dims() != grad_logits.dims() {
            return Err(Error::ShapeMismatch(format!(
                "grad_logits {:?} vs logits {:?}",
                grad_logits.dims(),
                self.acts[top].dims()
            )));
        }
        for layer in &mut self.layers {
            if let Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias } = layer {
                weights.grad.fill(T::zero());
                bias.grad.fill(T::zero());
            }
        }
        ensure_dims(&mut self.grad, grad_logits.dims());
        self.grad.data_mut().copy_from_slice(grad_logits.data());

        for i in (0..top).rev() {
            let x = &self.acts[i];
            let y = &self.acts[i + 1];
            let need_input = i > 0;
            match &mut self.layers[i] {
                Layer::Relu => {
                    activation::relu_mask_in_place(self.grad.data_mut(), y.data());
                    // ReLU keeps the shape, so the gradient stays in place.
                    continue;
                }
                Layer::Conv { kernel, weights, bias } => {
                    ensure_dims(&mut self.grad_next, x.dims());
                    conv::backward_into(
                        &self.grad,
                        x,
                        &weights.value,
                        *kernel,
                        &mut weights.grad,
                        &mut bias.grad,
                        need_input.then_some(&mut self.grad_next),
                        &mut self.scratch,
                    );
                }
                Layer::Pool { argmax } => {
                    ensure_dims(&mut self.grad_next, x.dims());
                    pool::backward_into(self.grad.data(), argmax, x.dims(), self.grad_next.data_mut());
                }
                Layer::Dense { weights, bias } => {
                    ensure_dims(&mut self.grad_next, x.dims());
                    dense::backward_into(
                        self.grad.data(),
                        x,
                        &weights.value,
                        &mut weights.grad,
                        &mut bias.grad,
                        need_input.then_some(self.grad_next.data_mut()),
                    );
                }
            }
            std::mem::swap(&mut self.grad, &mut self.grad_next);
        }
        Ok(())
    }

    /// Forward, mean cross-entropy, backward and one Adam update.
    pub fn train_step(
        &mut self,
        input: &Tensor4<T>,
        labels: &[usize],
        adam: &mut AdamState<T>,
    ) -> Result<StepStats> {
        let logits = self.forward(input)?;
        let correct = predict(logits).iter().zip(labels).filter(|(p, l)| p == l).count();
        let (loss, grad) = softmax_xent(logits, labels)?;
        self.backward(&grad)?;
        let mut params = Vec::new();
        let mut grads = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias } = layer {
                params.push(weights.value.as_mut_slice());
                grads.push(weights.grad.as_slice());
                params.push(bias.value.as_mut_slice());
                grads.push(bias.grad.as_slice());
            }
        }
        adam_step(&mut params, &grads, adam)?;
        Ok(StepStats { loss: loss.as_f64(), correct })
    }

    /// Arg-max predictions, evaluated in chunks of at most `chunk` items.
    pub fn predict(&mut self, input: &Tensor4<T>, chunk: usize) -> Result<Vec<usize>> {
        let [n, c, h, w] = input.dims();
        let per = c * h * w;
        let mut out = Vec::with_capacity(n);
        let mut start = 0;
        while start < n {
            let end = (start + chunk.max(1)).min(n);
            let part = Tensor4::from_vec([end - start, c, h, w], input.data()[start * per..end * per].to_vec())?;
            out.extend(predict(self.forward(&part)?));
            start = end;
        }
        Ok(out)
    }

    /// Parameter arrays in declaration order (weights then bias, per layer).
    pub fn params(&self) -> Vec<&[T]> {
        self.param_pairs().map(|p| p.value.as_slice()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias } = layer {
                out.push(weights.value.as_mut_slice());
                out.push(bias.value.as_mut_slice());
            }
        }
        out
    }

    /// Gradients from the last [`Network::backward`], aligned with [`Network::params`].
    pub fn grads(&self) -> Vec<&[T]> {
        self.param_pairs().map(|p| p.grad.as_slice()).collect()
    }

    fn param_pairs(&self) -> impl Iterator<Item = &Param<T>> {
        self.layers.iter().flat_map(|layer| match layer {
            Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias } => vec![weights, bias],
            _ => vec![],
        })
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    /// Replaces all parameters; `values` must match [`Network::param_sizes`].
    pub fn set_params(&mut self, values: &[Vec<T>]) -> Result<()> {
        let sizes = self.param_sizes();
        if values.len() != sizes.len() || values.iter().zip(&sizes).any(|(v, &s)| v.len() != s) {
            return Err(Error::ShapeMismatch("parameter arrays do not match the network".into()));
        }
        for (dst, src) in self.params_mut().into_iter().zip(values) {
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    /// Copy of the network in another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        let mut net = Network::<U>::zeroed(&self.spec).expect("spec already compiled");
        let values: Vec<Vec<U>> = self
            .params()
            .iter()
            .map(|p| p.iter().map(|v| U::lit(v.as_f64())).collect())
            .collect();
        net.set_params(&values).expect("same spec");
        net
    }
}
