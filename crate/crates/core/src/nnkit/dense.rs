use crate::error::{Error, Result};

use super::{Real, Tensor4};

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub input: Tensor4<T>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

fn check<T: Real>(input: &Tensor4<T>, weights: &[T], bias: &[T]) -> Result<(usize, usize)> {
    let fan_in = input.item_len();
    let units = bias.len();
    if weights.len() != units * fan_in {
        return Err(Error::ShapeMismatch(format!(
            "dense weights of {} values for {} inputs x {} units",
            weights.len(),
            fan_in,
            units
        )));
    }
    Ok((fan_in, units))
}

pub(crate) fn forward_into<T: Real>(input: &Tensor4<T>, weights: &[T], bias: &[T], out: &mut [T]) {
    let (n, fan_in, units) = (input.batch(), input.item_len(), bias.len());
    for row in out.chunks_exact_mut(units) {
        row.copy_from_slice(bias);
    }
    T::gemm(false, true, n, units, fan_in, T::one(), input.data(), weights, T::one(), out);
}

pub(crate) fn backward_into<T: Real>(
    grad_out: &[T],
    input: &Tensor4<T>,
    weights: &[T],
    grad_weights: &mut [T],
    grad_bias: &mut [T],
    grad_input: Option<&mut [T]>,
) {
    let (n, fan_in, units) = (input.batch(), input.item_len(), grad_bias.len());
    for row in grad_out.chunks_exact(units) {
        for (gb, g) in grad_bias.iter_mut().zip(row) {
            *gb += *g;
        }
    }
    T::gemm(true, false, units, fan_in, n, T::one(), grad_out, input.data(), T::one(), grad_weights);
    if let Some(gx) = grad_input {
        T::gemm(false, false, n, fan_in, units, T::one(), grad_out, weights, T::zero(), gx);
    }
}

/// Affine map over the flattened item: `y = x·Wᵀ + b` with `W` stored
/// row-major as `(units, fan_in)`. Output dims are `(N, units, 1, 1)`.
pub fn dense_forward<T: Real>(input: &Tensor4<T>, weights: &[T], bias: &[T]) -> Result<Tensor4<T>> {
    let (_, units) = check(input, weights, bias)?;
    let mut out = Tensor4::zeros([input.batch(), units, 1, 1]);
    forward_into(input, weights, bias, out.data_mut());
    Ok(out)
}

pub fn dense_backward<T: Real>(
    grad_out: &Tensor4<T>,
    input: &Tensor4<T>,
    weights: &[T],
) -> Result<DenseGrads<T>> {
    let units = grad_out.item_len();
    if grad_out.batch() != input.batch() || weights.len() != units * input.item_len() {
        return Err(Error::ShapeMismatch(format!(
            "dense grad_out {:?} against input {:?}",
            grad_out.dims(),
            input.dims()
        )));
    }
    let mut gw = vec![T::zero(); weights.len()];
    let mut gb = vec![T::zero(); units];
    let mut gx = Tensor4::zeros(input.dims());
    backward_into(grad_out.data(), input, weights, &mut gw, &mut gb, Some(gx.data_mut()));
    Ok(DenseGrads { input: gx, weights: gw, bias: gb })
}
