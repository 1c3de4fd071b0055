//! Binary checkpoints.
//!
//! Layout (little-endian): magic `PSVC`, version `u16`, seed `u64`, step
//! `u64`, descriptor length `u32` followed by the UTF-8 JSON network spec,
//! array count `u32`, then per array its length `u64` and that many `f32`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{Network, NetworkSpec, Real};

const MAGIC: &[u8; 4] = b"PSVC";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub step: u64,
    pub spec: NetworkSpec,
    pub arrays: Vec<Vec<f32>>,
}

impl Checkpoint {
    pub fn capture<T: Real>(net: &Network<T>, seed: u64, step: u64) -> Self {
        Self {
            seed,
            step,
            spec: net.spec().clone(),
            arrays: net
                .params()
                .iter()
                .map(|a| a.iter().map(|v| v.as_f64() as f32).collect())
                .collect(),
        }
    }

    pub fn restore<T: Real>(&self) -> Result<Network<T>> {
        let mut net = Network::zeroed(&self.spec)?;
        let values: Vec<Vec<T>> = self
            .arrays
            .iter()
            .map(|a| a.iter().map(|&v| T::lit(f64::from(v))).collect())
            .collect();
        net.set_params(&values)?;
        Ok(net)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let desc = serde_json::to_vec(&self.spec)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.step.to_le_bytes())?;
        w.write_all(&(desc.len() as u32).to_le_bytes())?;
        w.write_all(&desc)?;
        w.write_all(&(self.arrays.len() as u32).to_le_bytes())?;
        for a in &self.arrays {
            w.write_all(&(a.len() as u64).to_le_bytes())?;
            let mut buf = Vec::with_capacity(a.len() * 4);
            for v in a {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let seed = u64::from_le_bytes(read_array(&mut r)?);
        let step = u64::from_le_bytes(read_array(&mut r)?);
        let desc_len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut desc = vec![0u8; desc_len];
        r.read_exact(&mut desc)?;
        let spec: NetworkSpec = serde_json::from_slice(&desc)?;
        let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut arrays = Vec::with_capacity(count);
        for _ in 0..count {
            let len = u64::from_le_bytes(read_array(&mut r)?) as usize;
            let mut raw = vec![0u8; len * 4];
            r.read_exact(&mut raw)?;
            arrays.push(
                raw.chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            );
        }
        Ok(Self { seed, step, spec, arrays })
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::psvrt_baseline;
    use crate::rng::stream_rng;

    #[test]
    fn round_trip_restores_parameters() {
        let spec = psvrt_baseline(30);
        let net = Network::<f32>::new(&spec, &mut stream_rng(11, 0)).unwrap();
        let ck = Checkpoint::capture(&net, 11, 42);
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"PSVC");
        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        let restored: Network<f32> = back.restore().unwrap();
        assert_eq!(restored.params(), net.params());
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(Checkpoint::read_from(&b"NOPE\x01\x00"[..]), Err(Error::Format(_))));
    }
}
