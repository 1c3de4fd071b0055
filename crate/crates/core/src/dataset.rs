//! Binary dataset files and PBM export.
//!
//! Layout, all integers little-endian: `"PSVR"`, version `u16`, `m`, `n`, `k`
//! as `u16`, sample count `u64`; then per sample the image rows (bit-packed,
//! MSB first, each row padded to a whole byte), one label byte (bit 0 =
//! Same, bit 1 = Vertical), `k` placements as `(row u16, col u16)` and the
//! `k` items packed like image rows.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::generator::{render, BinaryImage, BitPattern, ImageParams, Placement, Sample, SdLabel, SrLabel};

pub const MAGIC: &[u8; 4] = b"PSVR";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub count: u64,
}

/// Packs a `side x side` bit grid row by row, MSB first.
pub fn pack_rows(side: usize, bits: &[u8]) -> Vec<u8> {
    let row_bytes = side.div_ceil(8);
    let mut out = vec![0u8; row_bytes * side];
    for r in 0..side {
        for c in 0..side {
            if bits[r * side + c] != 0 {
                out[r * row_bytes + c / 8] |= 0x80 >> (c % 8);
            }
        }
    }
    out
}

pub fn unpack_rows(side: usize, packed: &[u8]) -> Vec<u8> {
    let row_bytes = side.div_ceil(8);
    let mut out = vec![0u8; side * side];
    for r in 0..side {
        for c in 0..side {
            out[r * side + c] = (packed[r * row_bytes + c / 8] >> (7 - c % 8)) & 1;
        }
    }
    out
}

fn u16_field(v: usize, what: &str) -> Result<[u8; 2]> {
    u16::try_from(v)
        .map(u16::to_le_bytes)
        .map_err(|_| Error::Format(format!("{what} {v} does not fit in u16")))
}

fn label_byte(s: &Sample) -> u8 {
    u8::from(s.sd_label == SdLabel::Same) | (u8::from(s.sr_label == SrLabel::Vertical) << 1)
}

pub fn write_dataset<W: Write>(mut w: W, params: &ImageParams, samples: &[Sample]) -> Result<()> {
    let (m, n, k) = (params.m(), params.n(), params.k());
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (v, what) in [(m, "m"), (n, "n"), (k, "k")] {
        w.write_all(&u16_field(v, what)?)?;
    }
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for (i, s) in samples.iter().enumerate() {
        if s.image.side() != n || s.items.len() != k || s.placements.len() != k || s.items.iter().any(|p| p.side() != m) {
            return Err(Error::Format(format!("sample {i} does not match m={m} n={n} k={k}")));
        }
        w.write_all(&pack_rows(n, s.image.pixels()))?;
        w.write_all(&[label_byte(s)])?;
        for p in &s.placements {
            w.write_all(&u16_field(p.row, "row")?)?;
            w.write_all(&u16_field(p.col, "col")?)?;
        }
        for item in &s.items {
            w.write_all(&pack_rows(m, item.bits()))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated dataset".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|_| Error::Format("truncated dataset".into()))?;
    Ok(buf)
}

pub fn read_header<R: Read>(r: &mut R) -> Result<DatasetHeader> {
    if &read_exact::<_, 4>(r)? != MAGIC {
        return Err(Error::Format("not a PSVR dataset".into()));
    }
    let version = u16::from_le_bytes(read_exact(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let m = u16::from_le_bytes(read_exact(r)?) as usize;
    let n = u16::from_le_bytes(read_exact(r)?) as usize;
    let k = u16::from_le_bytes(read_exact(r)?) as usize;
    let count = u64::from_le_bytes(read_exact(r)?);
    Ok(DatasetHeader { m, n, k, count })
}

/// Reads a whole dataset. Every image is checked against the rendering of
/// its stored items and placements.
pub fn read_dataset<R: Read>(mut r: R) -> Result<(DatasetHeader, Vec<Sample>)> {
    let header = read_header(&mut r)?;
    let DatasetHeader { m, n, k, count } = header;
    if m == 0 || m > n || k == 0 {
        return Err(Error::Format(format!("bad header m={m} n={n} k={k}")));
    }
    let mut samples = Vec::new();
    for i in 0..count {
        let image = BinaryImage::from_pixels(n, unpack_rows(n, &read_vec(&mut r, n.div_ceil(8) * n)?))?;
        let [label] = read_exact::<_, 1>(&mut r)?;
        if label > 3 {
            return Err(Error::Format(format!("sample {i}: bad label byte {label:#04x}")));
        }
        let mut placements = Vec::with_capacity(k);
        for _ in 0..k {
            let row = u16::from_le_bytes(read_exact(&mut r)?) as usize;
            let col = u16::from_le_bytes(read_exact(&mut r)?) as usize;
            placements.push(Placement::new(row, col));
        }
        let mut items = Vec::with_capacity(k);
        for _ in 0..k {
            items.push(BitPattern::new(m, unpack_rows(m, &read_vec(&mut r, m.div_ceil(8) * m)?))?);
        }
        if render(&items, &placements, n)? != image {
            return Err(Error::Format(format!("sample {i}: image disagrees with its items")));
        }
        samples.push(Sample {
            image,
            items,
            placements,
            sd_label: if label & 1 == 1 { SdLabel::Same } else { SdLabel::Different },
            sr_label: if label & 2 == 2 { SrLabel::Vertical } else { SrLabel::Horizontal },
        });
    }
    Ok((header, samples))
}

/// Binary PBM (P4); ink is black.
pub fn write_pbm<W: Write>(mut w: W, image: &BinaryImage) -> Result<()> {
    let side = image.side();
    write!(w, "P4\n{side} {side}\n")?;
    w.write_all(&pack_rows(side, image.pixels()))?;
    w.flush()?;
    Ok(())
}
