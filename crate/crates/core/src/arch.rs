//! Builders for every network used in the experiments.
//!
//! All convolutional stacks are `conv → ReLU → pool` blocks on a single-channel
//! input, topped by three ReLU dense layers and a 2-way classifier.

use crate::error::{Error, Result};
use crate::nnkit::{LayerSpec, NetworkSpec};

pub const BASELINE: &str = "psvrt-baseline";
pub const WIDE: &str = "psvrt-wide";
pub const DEEP: &str = "psvrt-deep";

fn conv(out_channels: usize, kernel: usize) -> [LayerSpec; 2] {
    [LayerSpec::Conv { out_channels, kernel }, LayerSpec::Relu]
}

fn head(layers: &mut Vec<LayerSpec>, units: usize) {
    for _ in 0..3 {
        layers.extend([LayerSpec::Dense { units }, LayerSpec::Relu]);
    }
    layers.push(LayerSpec::Classifier { classes: 2 });
}

/// Plain stack: one pooled block per `(filters, kernel)` entry.
fn stack(name: &str, input_side: usize, convs: &[(usize, usize)], dense_units: usize) -> NetworkSpec {
    let mut layers = Vec::new();
    for &(f, k) in convs {
        layers.extend(conv(f, k));
        layers.push(LayerSpec::Pool);
    }
    head(&mut layers, dense_units);
    NetworkSpec::new(name, input_side, layers)
}

/// One of the nine depth × first-kernel networks: the first layer has
/// `3·first_kernel` filters (6, 12, 18), later layers are 2x2 with doubling
/// filter counts, and the head is three 1024-unit layers.
pub fn svrt_grid(depth: usize, first_kernel: usize, input_side: usize) -> Result<NetworkSpec> {
    if ![2, 4, 6].contains(&depth) || ![2, 4, 6].contains(&first_kernel) {
        return Err(Error::InvalidArch(format!(
            "grid coordinate (depth {depth}, first kernel {first_kernel}) not in {{2,4,6}}²"
        )));
    }
    let first = 3 * first_kernel;
    let convs: Vec<(usize, usize)> = (0..depth)
        .map(|i| (first << i, if i == 0 { first_kernel } else { 2 }))
        .collect();
    Ok(stack(&format!("svrt-d{depth}-k{first_kernel}"), input_side, &convs, 1024))
}

/// Four conv layers (8 filters 4x4, then 16/32/64 at 2x2), 256-unit head.
pub fn psvrt_baseline(input_side: usize) -> NetworkSpec {
    stack(BASELINE, input_side, &[(8, 4), (16, 2), (32, 2), (64, 2)], 256)
}

/// Baseline with doubled filters and a 4x wider head.
pub fn wide_control(input_side: usize) -> NetworkSpec {
    stack(WIDE, input_side, &[(16, 4), (32, 2), (64, 2), (128, 2)], 1024)
}

/// Baseline with an extra 2x2 conv (same filter count) after every conv.
/// Pooling stays at the four original positions, after each pair.
pub fn deep_control(input_side: usize) -> NetworkSpec {
    let mut layers = Vec::new();
    for (f, k) in [(8, 4), (16, 2), (32, 2), (64, 2)] {
        layers.extend(conv(f, k));
        layers.extend(conv(f, 2));
        layers.push(LayerSpec::Pool);
    }
    head(&mut layers, 256);
    NetworkSpec::new(DEEP, input_side, layers)
}

/// Exact number of trainable parameters.
pub fn param_count(spec: &NetworkSpec) -> Result<usize> {
    spec.param_count()
}

/// Looks a builder up by name: the three PSVRT networks or `svrt-d{D}-k{K}`.
pub fn by_name(name: &str, input_side: usize) -> Result<NetworkSpec> {
    match name {
        BASELINE => Ok(psvrt_baseline(input_side)),
        WIDE => Ok(wide_control(input_side)),
        DEEP => Ok(deep_control(input_side)),
        other => {
            let parse = || -> Option<(usize, usize)> {
                let rest = other.strip_prefix("svrt-d")?;
                let (d, k) = rest.split_once("-k")?;
                Some((d.parse().ok()?, k.parse().ok()?))
            };
            match parse() {
                Some((d, k)) => svrt_grid(d, k, input_side),
                None => Err(Error::InvalidArch(format!("unknown architecture {other:?}"))),
            }
        }
    }
}

/// Names accepted by [`by_name`].
pub fn all_names() -> Vec<String> {
    let mut names = vec![BASELINE.to_string(), WIDE.to_string(), DEEP.to_string()];
    for d in [2, 4, 6] {
        for k in [2, 4, 6] {
            names.push(format!("svrt-d{d}-k{k}"));
        }
    }
    names
}
