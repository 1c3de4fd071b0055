use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::pool::pool_output_side;

/// One entry of a declarative layer list. Convolutions are stride 1 with
/// same padding; pooling is fixed at 3x3 / stride 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { out_channels: usize, kernel: usize },
    Pool,
    Relu,
    Dense { units: usize },
    Classifier { classes: usize },
}

/// Shape bookkeeping for one compiled layer; shapes are `[C, H, W]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub layer: LayerSpec,
    pub input: [usize; 3],
    pub output: [usize; 3],
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input_side: usize,
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, input_side: usize, layers: Vec<LayerSpec>) -> Self {
        Self { name: name.into(), input_side, input_channels: 1, layers }
    }

    pub fn with_input_side(&self, input_side: usize) -> Self {
        Self { input_side, ..self.clone() }
    }

    /// Resolves every layer's input and output shape, rejecting layer
    /// orders the engine cannot run.
    pub fn shapes(&self) -> Result<Vec<LayerShape>> {
        if self.input_side == 0 || self.input_channels == 0 {
            return Err(Error::InvalidArch("empty input".into()));
        }
        let mut cur = [self.input_channels, self.input_side, self.input_side];
        let mut flat = false;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, &layer) in self.layers.iter().enumerate() {
            let input = cur;
            let fan_in = cur.iter().product::<usize>();
            let params = match layer {
                LayerSpec::Conv { out_channels, kernel } => {
                    if flat {
                        return Err(Error::InvalidArch(format!("layer {i}: conv after dense")));
                    }
                    if out_channels == 0 || kernel == 0 {
                        return Err(Error::InvalidArch(format!("layer {i}: empty conv")));
                    }
                    let p = out_channels * cur[0] * kernel * kernel + out_channels;
                    cur[0] = out_channels;
                    p
                }
                LayerSpec::Pool => {
                    if flat {
                        return Err(Error::InvalidArch(format!("layer {i}: pool after dense")));
                    }
                    cur = [cur[0], pool_output_side(cur[1]), pool_output_side(cur[2])];
                    0
                }
                LayerSpec::Relu => 0,
                LayerSpec::Dense { units: u } | LayerSpec::Classifier { classes: u } => {
                    if u == 0 {
                        return Err(Error::InvalidArch(format!("layer {i}: zero units")));
                    }
                    if matches!(layer, LayerSpec::Classifier { .. }) && i + 1 != self.layers.len() {
                        return Err(Error::InvalidArch("classifier must be the last layer".into()));
                    }
                    flat = true;
                    cur = [u, 1, 1];
                    u * fan_in + u
                }
            };
            out.push(LayerShape { layer, input, output: cur, params });
        }
        match self.layers.last() {
            Some(LayerSpec::Classifier { classes: 2 }) => Ok(out),
            _ => Err(Error::InvalidArch("network must end in a 2-way classifier".into())),
        }
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.shapes()?.iter().map(|s| s.params).sum())
    }

    pub fn output_classes(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Classifier { classes }) => *classes,
            _ => 0,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NetworkSpec {
        NetworkSpec::new(
            "tiny",
            6,
            vec![
                LayerSpec::Conv { out_channels: 2, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::Pool,
                LayerSpec::Dense { units: 4 },
                LayerSpec::Relu,
                LayerSpec::Classifier { classes: 2 },
            ],
        )
    }

    #[test]
    fn shape_chain() {
        let s = tiny().shapes().unwrap();
        assert_eq!(s[0].output, [2, 6, 6]);
        assert_eq!(s[0].params, 2 * 9 + 2);
        assert_eq!(s[2].output, [2, 3, 3]);
        assert_eq!(s[3].params, 18 * 4 + 4);
        assert_eq!(s[5].output, [2, 1, 1]);
        assert_eq!(tiny().param_count().unwrap(), 20 + 76 + 10);
    }

    #[test]
    fn rejects_bad_orders() {
        let mut s = tiny();
        s.layers.swap(2, 3);
        assert!(s.shapes().is_err());
        let mut s = tiny();
        s.layers.pop();
        assert!(s.shapes().is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = tiny();
        assert_eq!(NetworkSpec::from_text(&s.to_text()).unwrap(), s);
    }
}
