//! Central finite-difference check of backpropagated parameter gradients.

use std::collections::HashSet;

use rand::Rng;

use crate::error::Result;

use super::loss::softmax_xent;
use super::{Network, Tensor4};

/// Denominator floor for the relative error so that parameters with
/// (near-)zero gradient are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Candidates whose `±eps` probe switched a ReLU or pooling decision;
    /// their difference quotient spans a kink and says nothing about the
    /// gradient, so another parameter was drawn instead.
    pub skipped: usize,
    pub max_rel_error: f64,
    /// `(array, element)` of the worst parameter.
    pub worst: (usize, usize),
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

fn loss(net: &mut Network<f64>, input: &Tensor4<f64>, labels: &[usize]) -> Result<f64> {
    let logits = net.forward(input)?;
    Ok(softmax_xent(logits, labels)?.0)
}

/// Splits `budget` checks over arrays of the given sizes, as evenly as their
/// lengths allow.
fn allocate(sizes: &[usize], budget: usize) -> Vec<usize> {
    let mut take = vec![0; sizes.len()];
    let mut left = budget.min(sizes.iter().sum());
    while left > 0 {
        for (t, &s) in take.iter_mut().zip(sizes) {
            if left > 0 && *t < s {
                *t += 1;
                left -= 1;
            }
        }
    }
    take
}

/// Compares backprop against `(L(θ+ε) − L(θ−ε)) / 2ε` for every parameter,
/// or for a stratified random subset of `max_params` when the net is larger.
/// Probes that cross a ReLU or pooling kink are replaced, not scored.
pub fn grad_check<R: Rng + ?Sized>(
    net: &mut Network<f64>,
    input: &Tensor4<f64>,
    labels: &[usize],
    eps: f64,
    max_params: usize,
    rng: &mut R,
) -> Result<GradCheckReport> {
    let logits = net.forward(input)?;
    let (_, grad) = softmax_xent(logits, labels)?;
    net.backward(&grad)?;
    let piece = net.active_piece();
    let analytic: Vec<Vec<f64>> = net.grads().iter().map(|g| g.to_vec()).collect();
    let sizes = net.param_sizes();

    let mut report = GradCheckReport { checked: 0, skipped: 0, max_rel_error: 0.0, worst: (0, 0) };
    let mut tried: Vec<HashSet<usize>> = vec![HashSet::new(); sizes.len()];
    let quota = allocate(&sizes, max_params);
    let target: usize = quota.iter().sum();
    // A skipped probe's quota moves on to the next array, wrapping around,
    // until the target is met or every parameter has been tried.
    let mut carry = 0;
    for pass in 0..2 {
        for array in 0..sizes.len() {
            let size = sizes[array];
            let want = if pass == 0 { quota[array] + carry } else { carry };
            let mut accepted = 0;
            while accepted < want && tried[array].len() < size {
                let elem = if quota[array] == size || tried[array].len() * 2 > size {
                    (0..size).find(|e| !tried[array].contains(e)).unwrap_or(0)
                } else {
                    rng.random_range(0..size)
                };
                if !tried[array].insert(elem) {
                    continue;
                }
                let orig = net.params()[array][elem];
                net.params_mut()[array][elem] = orig + eps;
                let up = loss(net, input, labels)?;
                let smooth_up = net.active_piece() == piece;
                net.params_mut()[array][elem] = orig - eps;
                let down = loss(net, input, labels)?;
                let smooth_down = net.active_piece() == piece;
                net.params_mut()[array][elem] = orig;
                if !(smooth_up && smooth_down) {
                    report.skipped += 1;
                    continue;
                }
                accepted += 1;
                let numeric = (up - down) / (2.0 * eps);
                let err = relative_error(analytic[array][elem], numeric);
                report.checked += 1;
                if err > report.max_rel_error {
                    report.max_rel_error = err;
                    report.worst = (array, elem);
                }
            }
            carry = want - accepted;
            if report.checked == target {
                return Ok(report);
            }
        }
    }
    Ok(report)
}
