//! 3x3 / stride-2 max pooling with `SAME`-style implicit -inf padding.

use crate::error::{Error, Result};

use super::{Real, Tensor4};

pub const POOL_KERNEL: usize = 3;
pub const POOL_STRIDE: usize = 2;

/// Output side for an input side `h`: `ceil(h / 2)`.
pub fn pool_output_side(h: usize) -> usize {
    h.div_ceil(POOL_STRIDE)
}

fn pad_before(h: usize) -> usize {
    let out = pool_output_side(h);
    ((out - 1) * POOL_STRIDE + POOL_KERNEL).saturating_sub(h) / 2
}

/// Winning input position (flattened within its channel plane) per output cell.
#[derive(Debug, Clone)]
pub struct PoolCache {
    in_dims: [usize; 4],
    argmax: Vec<u32>,
}

impl PoolCache {
    pub fn input_dims(&self) -> [usize; 4] {
        self.in_dims
    }

    pub fn argmax(&self) -> &[u32] {
        &self.argmax
    }
}

pub(crate) fn forward_into<T: Real>(
    input: &Tensor4<T>,
    out: &mut Tensor4<T>,
    argmax: &mut Vec<u32>,
) {
    let [n, c, h, w] = input.dims();
    let (oh, ow) = (pool_output_side(h), pool_output_side(w));
    let (ph, pw) = (pad_before(h), pad_before(w));
    argmax.resize(n * c * oh * ow, 0);
    let x = input.data();
    let y = out.data_mut();
    for plane in 0..n * c {
        let src = &x[plane * h * w..(plane + 1) * h * w];
        let base = plane * oh * ow;
        for r in 0..oh {
            let r0 = (r * POOL_STRIDE).saturating_sub(ph);
            let r1 = (r * POOL_STRIDE + POOL_KERNEL - ph).min(h);
            for q in 0..ow {
                let q0 = (q * POOL_STRIDE).saturating_sub(pw);
                let q1 = (q * POOL_STRIDE + POOL_KERNEL - pw).min(w);
                let mut best = T::neg_infinity();
                let mut at = 0usize;
                for i in r0..r1 {
                    for j in q0..q1 {
                        let v = src[i * w + j];
                        // Strict comparison keeps the first maximum in scan order.
                        if v > best {
                            best = v;
                            at = i * w + j;
                        }
                    }
                }
                y[base + r * ow + q] = best;
                argmax[base + r * ow + q] = at as u32;
            }
        }
    }
}

pub(crate) fn backward_into<T: Real>(grad_out: &[T], argmax: &[u32], in_dims: [usize; 4], grad_in: &mut [T]) {
    let [n, c, h, w] = in_dims;
    let (oh, ow) = (pool_output_side(h), pool_output_side(w));
    grad_in.fill(T::zero());
    for plane in 0..n * c {
        let dst = &mut grad_in[plane * h * w..(plane + 1) * h * w];
        let g = &grad_out[plane * oh * ow..(plane + 1) * oh * ow];
        let am = &argmax[plane * oh * ow..(plane + 1) * oh * ow];
        for (gv, &idx) in g.iter().zip(am) {
            dst[idx as usize] += *gv;
        }
    }
}

pub fn maxpool_forward<T: Real>(input: &Tensor4<T>) -> Result<(Tensor4<T>, PoolCache)> {
    let [n, c, h, w] = input.dims();
    if h == 0 || w == 0 {
        return Err(Error::ShapeMismatch(format!("pooling an empty plane {:?}", input.dims())));
    }
    let mut out = Tensor4::zeros([n, c, pool_output_side(h), pool_output_side(w)]);
    let mut argmax = Vec::new();
    forward_into(input, &mut out, &mut argmax);
    Ok((out, PoolCache { in_dims: input.dims(), argmax }))
}

pub fn maxpool_backward<T: Real>(grad_out: &Tensor4<T>, cache: &PoolCache) -> Result<Tensor4<T>> {
    let [n, c, h, w] = cache.in_dims;
    let want = [n, c, pool_output_side(h), pool_output_side(w)];
    if grad_out.dims() != want || cache.argmax.len() != grad_out.len() {
        return Err(Error::ShapeMismatch(format!(
            "pool grad_out {:?} does not match cached forward output {:?}",
            grad_out.dims(),
            want
        )));
    }
    let mut gx = Tensor4::zeros(cache.in_dims);
    backward_into(grad_out.data(), &cache.argmax, cache.in_dims, gx.data_mut());
    Ok(gx)
}
