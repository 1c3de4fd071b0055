//! Stride-1 "same" cross-correlation via im2col + GEMM.
//!
//! Padding follows the TensorFlow `SAME` rule: a kernel of side `s` pads
//! `(s - 1) / 2` zeros before and the remainder after, so even kernels are
//! anchored at the top-left.

use crate::error::{Error, Result};

use super::{Real, Tensor4};

/// Zeros padded (before, after) along each spatial axis for kernel side `s`.
pub fn same_padding(kernel: usize) -> (usize, usize) {
    let before = (kernel - 1) / 2;
    (before, kernel - 1 - before)
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor4<T>,
    pub weights: Tensor4<T>,
    pub bias: Vec<T>,
}

fn check_shapes<T: Real>(input: &Tensor4<T>, weights: &Tensor4<T>, bias_len: usize) -> Result<()> {
    let [_, c, _, _] = input.dims();
    let [o, wc, kh, kw] = weights.dims();
    if wc != c || kh != kw || kh == 0 || bias_len != o {
        return Err(Error::ShapeMismatch(format!(
            "conv weights {:?} / bias {} against input {:?}",
            weights.dims(),
            bias_len,
            input.dims()
        )));
    }
    Ok(())
}

/// Unfolds one `C x H x W` image into a `(C·s·s) x (H·W)` column matrix.
pub(crate) fn im2col<T: Real>(x: &[T], c: usize, h: usize, w: usize, s: usize, cols: &mut [T]) {
    let (pad, _) = same_padding(s);
    let hw = h * w;
    for ch in 0..c {
        let plane = &x[ch * hw..(ch + 1) * hw];
        for ki in 0..s {
            for kj in 0..s {
                let row = (ch * s + ki) * s + kj;
                let dst = &mut cols[row * hw..(row + 1) * hw];
                // Valid output columns for this kernel column offset.
                let ow_lo = pad.saturating_sub(kj);
                let ow_hi = (w + pad).saturating_sub(kj).min(w);
                for oh in 0..h {
                    let d = &mut dst[oh * w..(oh + 1) * w];
                    let ih = oh + ki;
                    if ih < pad || ih - pad >= h || ow_lo >= ow_hi {
                        d.fill(T::zero());
                        continue;
                    }
                    let src = &plane[(ih - pad) * w..(ih - pad + 1) * w];
                    d[..ow_lo].fill(T::zero());
                    d[ow_hi..].fill(T::zero());
                    let iw_lo = ow_lo + kj - pad;
                    d[ow_lo..ow_hi].copy_from_slice(&src[iw_lo..iw_lo + (ow_hi - ow_lo)]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates a column matrix back into an image.
pub(crate) fn col2im<T: Real>(cols: &[T], c: usize, h: usize, w: usize, s: usize, x: &mut [T]) {
    let (pad, _) = same_padding(s);
    let hw = h * w;
    for ch in 0..c {
        let plane = &mut x[ch * hw..(ch + 1) * hw];
        for ki in 0..s {
            for kj in 0..s {
                let row = (ch * s + ki) * s + kj;
                let src = &cols[row * hw..(row + 1) * hw];
                let ow_lo = pad.saturating_sub(kj);
                let ow_hi = (w + pad).saturating_sub(kj).min(w);
                if ow_lo >= ow_hi {
                    continue;
                }
                for oh in 0..h {
                    let ih = oh + ki;
                    if ih < pad || ih - pad >= h {
                        continue;
                    }
                    let dst = &mut plane[(ih - pad) * w..(ih - pad + 1) * w];
                    let iw_lo = ow_lo + kj - pad;
                    for (d, &v) in dst[iw_lo..iw_lo + (ow_hi - ow_lo)]
                        .iter_mut()
                        .zip(&src[oh * w + ow_lo..oh * w + ow_hi])
                    {
                        *d += v;
                    }
                }
            }
        }
    }
}

pub(crate) fn forward_into<T: Real>(
    input: &Tensor4<T>,
    weights: &[T],
    bias: &[T],
    kernel: usize,
    out: &mut Tensor4<T>,
    cols: &mut Vec<T>,
) {
    let [n, c, h, w] = input.dims();
    let o = bias.len();
    let k = c * kernel * kernel;
    let hw = h * w;
    cols.resize(k * hw, T::zero());
    for i in 0..n {
        im2col(input.item(i), c, h, w, kernel, cols);
        let y = out.item_mut(i);
        for (ch, b) in bias.iter().enumerate() {
            y[ch * hw..(ch + 1) * hw].fill(*b);
        }
        T::gemm(false, false, o, hw, k, T::one(), weights, cols, T::one(), y);
    }
}

/// Accumulates weight/bias gradients and, when `grad_input` is given,
/// overwrites it with the input gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_into<T: Real>(
    grad_out: &Tensor4<T>,
    input: &Tensor4<T>,
    weights: &[T],
    kernel: usize,
    grad_weights: &mut [T],
    grad_bias: &mut [T],
    mut grad_input: Option<&mut Tensor4<T>>,
    cols: &mut Vec<T>,
) {
    let [n, c, h, w] = input.dims();
    let o = grad_bias.len();
    let k = c * kernel * kernel;
    let hw = h * w;
    cols.resize(2 * k * hw, T::zero());
    let (col, gcol) = cols.split_at_mut(k * hw);
    for i in 0..n {
        let g = grad_out.item(i);
        for (ch, gb) in grad_bias.iter_mut().enumerate() {
            *gb += g[ch * hw..(ch + 1) * hw].iter().copied().sum::<T>();
        }
        im2col(input.item(i), c, h, w, kernel, col);
        T::gemm(false, true, o, k, hw, T::one(), g, col, T::one(), grad_weights);
        if let Some(gx) = grad_input.as_deref_mut() {
            T::gemm(true, false, k, hw, o, T::one(), weights, g, T::zero(), gcol);
            let dst = gx.item_mut(i);
            dst.fill(T::zero());
            col2im(gcol, c, h, w, kernel, dst);
        }
    }
}

/// Stride-1 same-padded convolution. `weights` has dims `(out, in, s, s)`.
pub fn conv2d_forward<T: Real>(
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
    bias: &[T],
) -> Result<Tensor4<T>> {
    check_shapes(input, weights, bias.len())?;
    let [n, _, h, w] = input.dims();
    let [o, _, s, _] = weights.dims();
    let mut out = Tensor4::zeros([n, o, h, w]);
    forward_into(input, weights.data(), bias, s, &mut out, &mut Vec::new());
    Ok(out)
}

pub fn conv2d_backward<T: Real>(
    grad_out: &Tensor4<T>,
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
) -> Result<ConvGrads<T>> {
    let [o, c, s, _] = weights.dims();
    check_shapes(input, weights, o)?;
    let [n, _, h, w] = input.dims();
    if grad_out.dims() != [n, o, h, w] {
        return Err(Error::ShapeMismatch(format!(
            "conv grad_out {:?}, forward output was {:?}",
            grad_out.dims(),
            [n, o, h, w]
        )));
    }
    let mut gw = Tensor4::zeros([o, c, s, s]);
    let mut gb = vec![T::zero(); o];
    let mut gx = Tensor4::zeros(input.dims());
    backward_into(
        grad_out,
        input,
        weights.data(),
        s,
        gw.data_mut(),
        &mut gb,
        Some(&mut gx),
        &mut Vec::new(),
    );
    Ok(ConvGrads { input: gx, weights: gw, bias: gb })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct nested-loop correlation with the same padding rule.
    #[allow(clippy::needless_range_loop)]
    fn reference(x: &Tensor4<f64>, wt: &Tensor4<f64>, b: &[f64]) -> Tensor4<f64> {
        let [n, c, h, w] = x.dims();
        let [o, _, s, _] = wt.dims();
        let (pad, _) = same_padding(s);
        let mut y = Tensor4::zeros([n, o, h, w]);
        for i in 0..n {
            for oc in 0..o {
                for r in 0..h {
                    for q in 0..w {
                        let mut acc = b[oc];
                        for ic in 0..c {
                            for a in 0..s {
                                for bb in 0..s {
                                    let (ir, iq) = (r + a, q + bb);
                                    if ir < pad || iq < pad || ir - pad >= h || iq - pad >= w {
                                        continue;
                                    }
                                    acc += wt.at(oc, ic, a, bb) * x.at(i, ic, ir - pad, iq - pad);
                                }
                            }
                        }
                        y.data_mut()[((i * o + oc) * h + r) * w + q] = acc;
                    }
                }
            }
        }
        y
    }

    fn pseudo(len: usize, seed: f64) -> Vec<f64> {
        (0..len).map(|i| ((i as f64 + seed) * 12.9898).sin() * 0.5).collect()
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = Tensor4::from_vec([2, 1, 3, 4], pseudo(24, 1.0)).unwrap();
        let wt = Tensor4::from_vec([1, 1, 1, 1], vec![1.0]).unwrap();
        let y = conv2d_forward(&x, &wt, &[0.0]).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn ones_kernel_on_ones_image_is_top_left_anchored() {
        let x = Tensor4::filled([1, 1, 2, 2], 1.0f64);
        let wt = Tensor4::filled([1, 1, 2, 2], 1.0);
        let y = conv2d_forward(&x, &wt, &[0.0]).unwrap();
        assert_eq!(y.data(), &[4.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn zero_input_gives_bias() {
        let x = Tensor4::<f32>::zeros([1, 2, 5, 5]);
        let wt = Tensor4::filled([3, 2, 2, 2], 0.7);
        let y = conv2d_forward(&x, &wt, &[0.1, -0.2, 0.3]).unwrap();
        for (ch, b) in [0.1f32, -0.2, 0.3].iter().enumerate() {
            assert!(y.data()[ch * 25..(ch + 1) * 25].iter().all(|v| v == b));
        }
    }

    #[test]
    fn matches_direct_loops_for_odd_and_even_kernels() {
        for s in 1..=6 {
            let x = Tensor4::from_vec([2, 3, 7, 6], pseudo(2 * 3 * 42, s as f64)).unwrap();
            let wt = Tensor4::from_vec([4, 3, s, s], pseudo(4 * 3 * s * s, 3.0)).unwrap();
            let b = pseudo(4, 9.0);
            let got = conv2d_forward(&x, &wt, &b).unwrap();
            let want = reference(&x, &wt, &b);
            for (g, w) in got.data().iter().zip(want.data()) {
                assert!((g - w).abs() < 1e-12, "kernel {s}");
            }
        }
    }

    #[test]
    fn backward_zero_upstream_is_zero() {
        let x = Tensor4::from_vec([1, 2, 4, 4], pseudo(32, 2.0)).unwrap();
        let wt = Tensor4::from_vec([3, 2, 2, 2], pseudo(24, 5.0)).unwrap();
        let g = conv2d_backward(&Tensor4::zeros([1, 3, 4, 4]), &x, &wt).unwrap();
        assert!(g.input.data().iter().chain(g.weights.data()).chain(&g.bias).all(|v| *v == 0.0));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let x = Tensor4::from_vec([2, 2, 5, 5], pseudo(100, 4.0)).unwrap();
        let wt = Tensor4::from_vec([3, 2, 2, 2], pseudo(24, 6.0)).unwrap();
        let a = Tensor4::from_vec([2, 3, 5, 5], pseudo(150, 7.0)).unwrap();
        let b = Tensor4::from_vec([2, 3, 5, 5], pseudo(150, 8.0)).unwrap();
        let ab = Tensor4::from_vec(
            a.dims(),
            a.data().iter().zip(b.data()).map(|(p, q)| p + q).collect(),
        )
        .unwrap();
        let ga = conv2d_backward(&a, &x, &wt).unwrap();
        let gb = conv2d_backward(&b, &x, &wt).unwrap();
        let gab = conv2d_backward(&ab, &x, &wt).unwrap();
        let pairs = ga
            .input
            .data()
            .iter()
            .zip(gb.input.data())
            .zip(gab.input.data())
            .chain(ga.weights.data().iter().zip(gb.weights.data()).zip(gab.weights.data()))
            .chain(ga.bias.iter().zip(&gb.bias).zip(&gab.bias));
        for ((p, q), s) in pairs {
            assert!((p + q - s).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let x = Tensor4::<f32>::zeros([1, 2, 4, 4]);
        let wt = Tensor4::zeros([3, 1, 2, 2]);
        assert!(matches!(conv2d_forward(&x, &wt, &[0.0; 3]), Err(Error::ShapeMismatch(_))));
    }
}
