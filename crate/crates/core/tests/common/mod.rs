//! Finite-difference and shape oracles shared by the integration tests.
#![allow(dead_code)]

use psvrt::nnkit::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, grad_check, maxpool_backward, maxpool_forward,
    relu_backward, relu_forward, softmax_xent,
};
use psvrt::rng::stream_rng;
use psvrt::{psvrt_baseline, Network, Tensor4};
use rand::seq::index;
use rand::Rng;

pub const EPS: f64 = 1e-5;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

pub fn uniform<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Worst relative error between `analytic[i]` and the central difference of
/// `f` in coordinate `i`, over `picks`: plain, and ignoring coordinates whose
/// absolute disagreement is within the rounding noise of the quotient
/// (`16 ulp * |f| / eps`).
pub fn fd_worst(x: &mut [f64], picks: &[usize], analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> (f64, f64) {
    let (mut worst, mut beyond) = (0.0f64, 0.0f64);
    for &i in picks {
        let orig = x[i];
        x[i] = orig + EPS;
        let up = f(x);
        x[i] = orig - EPS;
        let down = f(x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * EPS);
        let err = rel_err(analytic[i], numeric);
        worst = worst.max(err);
        let noise = 16.0 * f64::EPSILON * up.abs().max(down.abs()).max(1.0) / EPS;
        if (analytic[i] - numeric).abs() > noise {
            beyond = beyond.max(err);
        }
    }
    (worst, beyond)
}

fn merge(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.max(b.1))
}

fn pick<R: Rng>(rng: &mut R, len: usize, count: usize) -> Vec<usize> {
    index::sample(rng, len, count.min(len)).into_vec()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn t(dims: [usize; 4], v: Vec<f64>) -> Tensor4<f64> {
    Tensor4::from_vec(dims, v).unwrap()
}

/// `(checked, worst)` for one random instance of a layer kind; parameters
/// and inputs are probed through the scalar `<R, layer(x)>`.
pub struct LayerCheck {
    pub checked: usize,
    pub worst: f64,
    /// Worst error among coordinates that disagree by more than rounding noise.
    pub beyond_rounding: f64,
    /// Probes dropped for crossing a kink (full-network check only).
    pub skipped: usize,
}

pub fn check_conv(seed: u64, param_picks: usize, input_picks: usize) -> LayerCheck {
    let mut rng = stream_rng(seed, 1);
    let kernel = 1 + (seed as usize % 5);
    let (n, cin, cout, side) = (2, 3, 4, 6);
    let in_dims = [n, cin, side, side];
    let w_dims = [cout, cin, kernel, kernel];
    let mut x = uniform(&mut rng, n * cin * side * side, -1.0, 1.0);
    let mut w = uniform(&mut rng, cout * cin * kernel * kernel, -1.0, 1.0);
    let mut b = uniform(&mut rng, cout, -1.0, 1.0);
    let r = uniform(&mut rng, n * cout * side * side, -1.0, 1.0);
    let out_dims = [n, cout, side, side];
    let g = conv2d_backward(&t(out_dims, r.clone()), &t(in_dims, x.clone()), &t(w_dims, w.clone())).unwrap();

    let wl = w.len();
    let mut theta: Vec<f64> = w.iter().chain(&b).copied().collect();
    let analytic: Vec<f64> = g.weights.data().iter().chain(&g.bias).copied().collect();
    let picks = pick(&mut rng, theta.len(), param_picks);
    let (xc, rc) = (x.clone(), r.clone());
    let first = fd_worst(&mut theta, &picks, &analytic, |th| {
        let y = conv2d_forward(&t(in_dims, xc.clone()), &t(w_dims, th[..wl].to_vec()), &th[wl..]).unwrap();
        dot(y.data(), &rc)
    });
    w.copy_from_slice(&theta[..wl]);
    b.copy_from_slice(&theta[wl..]);
    let ipicks = pick(&mut rng, x.len(), input_picks);
    let (worst, beyond_rounding) = merge(first, fd_worst(&mut x, &ipicks, g.input.data(), |xv| {
        let y = conv2d_forward(&t(in_dims, xv.to_vec()), &t(w_dims, w.clone()), &b).unwrap();
        dot(y.data(), &r)
    }));
    LayerCheck { checked: picks.len() + ipicks.len(), worst, beyond_rounding, skipped: 0 }
}

pub fn check_dense(seed: u64, param_picks: usize, input_picks: usize) -> LayerCheck {
    let mut rng = stream_rng(seed, 2);
    let in_dims = [3, 4, 2, 2];
    let units = 5;
    let fan_in = 16;
    let mut x = uniform(&mut rng, 3 * fan_in, -1.0, 1.0);
    let w = uniform(&mut rng, units * fan_in, -1.0, 1.0);
    let b = uniform(&mut rng, units, -1.0, 1.0);
    let r = uniform(&mut rng, 3 * units, -1.0, 1.0);
    let g = dense_backward(&t([3, units, 1, 1], r.clone()), &t(in_dims, x.clone()), &w).unwrap();
    let wl = w.len();
    let mut theta: Vec<f64> = w.iter().chain(&b).copied().collect();
    let analytic: Vec<f64> = g.weights.iter().chain(&g.bias).copied().collect();
    let picks = pick(&mut rng, theta.len(), param_picks);
    let (xc, rc) = (x.clone(), r.clone());
    let first = fd_worst(&mut theta, &picks, &analytic, |th| {
        dot(dense_forward(&t(in_dims, xc.clone()), &th[..wl], &th[wl..]).unwrap().data(), &rc)
    });
    let ipicks = pick(&mut rng, x.len(), input_picks);
    let (worst, beyond_rounding) = merge(first, fd_worst(&mut x, &ipicks, g.input.data(), |xv| {
        dot(dense_forward(&t(in_dims, xv.to_vec()), &w, &b).unwrap().data(), &r)
    }));
    LayerCheck { checked: picks.len() + ipicks.len(), worst, beyond_rounding, skipped: 0 }
}

/// Distinct values spaced 0.01 apart, so no pooling window holds a near-tie.
pub fn check_pool(seed: u64, input_picks: usize) -> LayerCheck {
    let mut rng = stream_rng(seed, 3);
    let dims = [2, 2, 7, 7];
    let len: usize = dims.iter().product();
    let order = index::sample(&mut rng, len, len).into_vec();
    let mut x: Vec<f64> = order.iter().map(|&i| i as f64 * 0.01 - 1.0).collect();
    let (y, cache) = maxpool_forward(&t(dims, x.clone())).unwrap();
    let r = uniform(&mut rng, y.len(), -1.0, 1.0);
    let g = maxpool_backward(&t(y.dims(), r.clone()), &cache).unwrap();
    let picks = pick(&mut rng, len, input_picks);
    let (worst, beyond_rounding) = fd_worst(&mut x, &picks, g.data(), |xv| dot(maxpool_forward(&t(dims, xv.to_vec())).unwrap().0.data(), &r));
    LayerCheck { checked: picks.len(), worst, beyond_rounding, skipped: 0 }
}

/// Inputs kept at least 0.01 away from the kink.
pub fn check_relu(seed: u64, input_picks: usize) -> LayerCheck {
    let mut rng = stream_rng(seed, 4);
    let dims = [2, 3, 5, 5];
    let len: usize = dims.iter().product();
    let mut x: Vec<f64> = (0..len)
        .map(|_| {
            let v: f64 = rng.random_range(0.01..1.0);
            if rng.random::<bool>() { v } else { -v }
        })
        .collect();
    let y = relu_forward(&t(dims, x.clone()));
    let r = uniform(&mut rng, len, -1.0, 1.0);
    let g = relu_backward(&t(dims, r.clone()), &y).unwrap();
    let picks = pick(&mut rng, len, input_picks);
    let (worst, beyond_rounding) = fd_worst(&mut x, &picks, g.data(), |xv| dot(relu_forward(&t(dims, xv.to_vec())).data(), &r));
    LayerCheck { checked: picks.len(), worst, beyond_rounding, skipped: 0 }
}

pub fn check_softmax(seed: u64, batch: usize) -> LayerCheck {
    let mut rng = stream_rng(seed, 5);
    let dims = [batch, 2, 1, 1];
    let mut z = uniform(&mut rng, 2 * batch, -3.0, 3.0);
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..2)).collect();
    let (_, g) = softmax_xent(&t(dims, z.clone()), &labels).unwrap();
    let picks: Vec<usize> = (0..z.len()).collect();
    let (worst, beyond_rounding) = fd_worst(&mut z, &picks, g.data(), |zv| softmax_xent(&t(dims, zv.to_vec()), &labels).unwrap().0);
    LayerCheck { checked: picks.len(), worst, beyond_rounding, skipped: 0 }
}

/// Baseline at n=30 in 64-bit with random biases and a continuous input,
/// which keeps ReLU and pooling away from exact ties.
pub fn check_baseline(seed: u64, params: usize) -> LayerCheck {
    let mut rng = stream_rng(seed, 6);
    let mut net = Network::<f64>::new(&psvrt_baseline(30), &mut rng).unwrap();
    let mut values: Vec<Vec<f64>> = net.params().iter().map(|p| p.to_vec()).collect();
    for bias in values.iter_mut().skip(1).step_by(2) {
        for b in bias.iter_mut() {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    net.set_params(&values).unwrap();
    let input = t([2, 1, 30, 30], uniform(&mut rng, 2 * 900, 0.0, 1.0));
    let report = grad_check(&mut net, &input, &[0, 1], EPS, params, &mut rng).unwrap();
    LayerCheck { checked: report.checked, worst: report.max_rel_error, beyond_rounding: report.max_rel_error, skipped: report.skipped }
}

/// Expected `(input [c,h,w], output [c,h,w], params)` per layer, from a
/// description `(filters, kernel, pool_after)` of the conv stack and the
/// dense width. Same-padded convs keep the side, pooling halves it rounding up.
pub fn expected_shapes(input_side: usize, convs: &[(usize, usize, bool)], dense: usize) -> Vec<([usize; 3], [usize; 3], usize)> {
    let mut out = Vec::new();
    let (mut c, mut s) = (1usize, input_side);
    for &(f, k, pool) in convs {
        out.push(([c, s, s], [f, s, s], f * (c * k * k + 1)));
        out.push(([f, s, s], [f, s, s], 0));
        c = f;
        if pool {
            let half = s.div_ceil(2);
            out.push(([c, s, s], [c, half, half], 0));
            s = half;
        }
    }
    let mut fan_in = c * s * s;
    let mut shape = [c, s, s];
    for _ in 0..3 {
        out.push((shape, [dense, 1, 1], dense * (fan_in + 1)));
        out.push(([dense, 1, 1], [dense, 1, 1], 0));
        fan_in = dense;
        shape = [dense, 1, 1];
    }
    out.push((shape, [2, 1, 1], 2 * (fan_in + 1)));
    out
}

/// Conv stacks as described in prose for every named network.
pub fn described_convs(name: &str) -> (Vec<(usize, usize, bool)>, usize) {
    match name {
        "psvrt-baseline" => (vec![(8, 4, true), (16, 2, true), (32, 2, true), (64, 2, true)], 256),
        "psvrt-wide" => (vec![(16, 4, true), (32, 2, true), (64, 2, true), (128, 2, true)], 1024),
        "psvrt-deep" => (
            vec![
                (8, 4, false),
                (8, 2, true),
                (16, 2, false),
                (16, 2, true),
                (32, 2, false),
                (32, 2, true),
                (64, 2, false),
                (64, 2, true),
            ],
            256,
        ),
        grid => {
            let rest = grid.strip_prefix("svrt-d").unwrap();
            let (d, k) = rest.split_once("-k").unwrap();
            let (depth, kernel): (usize, usize) = (d.parse().unwrap(), k.parse().unwrap());
            let first = match kernel {
                2 => 6,
                4 => 12,
                6 => 18,
                _ => unreachable!(),
            };
            let mut convs = vec![(first, kernel, true)];
            for i in 1..depth {
                convs.push((first * (1 << i), 2, true));
            }
            (convs, 1024)
        }
    }
}
