use crate::error::{Error, Result};

use super::{Real, Tensor4};

pub fn relu_forward<T: Real>(input: &Tensor4<T>) -> Tensor4<T> {
    let mut out = input.clone();
    relu_in_place(out.data_mut());
    out
}

pub(crate) fn relu_in_place<T: Real>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Gradient through ReLU given the forward *output*; the subgradient at 0 is 0.
pub fn relu_backward<T: Real>(grad_out: &Tensor4<T>, output: &Tensor4<T>) -> Result<Tensor4<T>> {
    if grad_out.dims() != output.dims() {
        return Err(Error::ShapeMismatch(format!(
            "relu grad {:?} vs output {:?}",
            grad_out.dims(),
            output.dims()
        )));
    }
    let mut g = grad_out.clone();
    relu_mask_in_place(g.data_mut(), output.data());
    Ok(g)
}

pub(crate) fn relu_mask_in_place<T: Real>(grad: &mut [T], output: &[T]) {
    for (g, y) in grad.iter_mut().zip(output) {
        if *y <= T::zero() {
            *g = T::zero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_and_masks() {
        let x = Tensor4::from_vec([1, 4, 1, 1], vec![-1.0, 0.0, 2.0, -0.0f64]).unwrap();
        let y = relu_forward(&x);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0, 0.0]);
        let g = relu_backward(&Tensor4::filled([1, 4, 1, 1], 1.0), &y).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0, 0.0]);
    }
}
