//! PSVRT image generation.
//!
//! An image holds `k` random `m x m` binary bit patterns at non-overlapping,
//! in-bounds positions of an `n x n` zero background. Every sample carries
//! both labels: same-different (is some pair of items bit-identical?) and
//! spatial relation (is the mean pairwise centre-displacement angle at least
//! 45°?). The non-task label is drawn by a fair coin with the same
//! constructive / rejection machinery, so the image distribution does not
//! depend on which task a sample was generated for.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ITEM_REDRAW_CAP: usize = 10_000;
pub const DEFAULT_PLACEMENT_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Sd,
    Sr,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sd => "sd",
            Task::Sr => "sr",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" => Ok(Task::Sd),
            "sr" => Ok(Task::Sr),
            _ => Err(Error::InvalidConfig(format!("unknown task {s:?} (expected sd or sr)"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SdLabel {
    Same,
    Different,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SrLabel {
    Horizontal,
    Vertical,
}

/// Generator parameters: item side `m`, image side `n`, item count `k`, seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ImageParams {
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct RawParams {
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
}

impl TryFrom<RawParams> for ImageParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ImageParams::new(r.m, r.n, r.k, r.seed)
    }
}

impl ImageParams {
    /// Validates that `k` disjoint `m x m` squares fit in `n x n`. The most
    /// that fit is `⌊n/m⌋²`: every square covers exactly one point of the
    /// lattice `{m-1, 2m-1, …}²`.
    pub fn new(m: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Infeasible(format!("m={m}, n={n}: sides must be positive")));
        }
        if m > n {
            return Err(Error::Infeasible(format!("item side {m} exceeds image side {n}")));
        }
        if k < 2 {
            return Err(Error::Infeasible(format!("k={k}: at least two items are required")));
        }
        let fit = (n / m) * (n / m);
        if k > fit {
            return Err(Error::Infeasible(format!(
                "{k} disjoint {m}x{m} items cannot fit in {n}x{n} (at most {fit})"
            )));
        }
        Ok(Self { m, n, k, seed })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    /// Number of valid (not all-zero) item patterns, saturating.
    pub fn pattern_count(&self) -> u128 {
        valid_pattern_count(self.m)
    }
}

pub fn valid_pattern_count(m: usize) -> u128 {
    let bits = m * m;
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

/// An `m x m` binary pattern with at least one set bit, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitPattern {
    side: usize,
    bits: Vec<u8>,
}

impl BitPattern {
    pub fn new(side: usize, bits: Vec<u8>) -> Result<Self> {
        if side == 0 || bits.len() != side * side || bits.iter().any(|&b| b > 1) {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {side}x{side} binary pattern",
                bits.len()
            )));
        }
        if bits.iter().all(|&b| b == 0) {
            return Err(Error::Format("all-zero bit pattern".into()));
        }
        Ok(Self { side, bits })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.bits[r * self.side + c]
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}

/// Top-left pixel offset of an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub row: usize,
    pub col: usize,
}

impl Placement {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Centre of the `m x m` square.
    pub fn center(&self, m: usize) -> [f64; 2] {
        let h = (m as f64 - 1.0) / 2.0;
        [self.row as f64 + h, self.col as f64 + h]
    }

    pub fn overlaps(&self, other: &Placement, m: usize) -> bool {
        self.row.abs_diff(other.row) < m && self.col.abs_diff(other.col) < m
    }
}

/// Square binary image, row-major, pixel values 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryImage {
    side: usize,
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn blank(side: usize) -> Self {
        Self { side, pixels: vec![0; side * side] }
    }

    pub fn from_pixels(side: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != side * side || pixels.iter().any(|&p| p > 1) {
            return Err(Error::ShapeMismatch(format!("{} pixels for a {side}x{side} image", pixels.len())));
        }
        Ok(Self { side, pixels })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.pixels[r * self.side + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.pixels[r * self.side + c] = v;
    }

    pub fn ink(&self) -> usize {
        self.pixels.iter().map(|&p| p as usize).sum()
    }

    /// The `m x m` window with top-left corner `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, m: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(m * m);
        for r in row..row + m {
            out.extend_from_slice(&self.pixels[r * self.side + col..r * self.side + col + m]);
        }
        out
    }

    /// Same content shifted by `(dr, dc)`, or `None` if ink would leave the frame.
    pub fn translated(&self, dr: isize, dc: isize) -> Option<Self> {
        let mut out = Self::blank(self.side);
        let s = self.side as isize;
        for r in 0..self.side {
            for c in 0..self.side {
                if self.get(r, c) == 1 {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr >= s || nc >= s {
                        return None;
                    }
                    out.set(nr as usize, nc as usize, 1);
                }
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub image: BinaryImage,
    pub items: Vec<BitPattern>,
    pub placements: Vec<Placement>,
    pub sd_label: SdLabel,
    pub sr_label: SrLabel,
}

impl Sample {
    /// Class index for `task`: 1 for Same / Vertical, 0 otherwise.
    pub fn class(&self, task: Task) -> usize {
        match task {
            Task::Sd => usize::from(self.sd_label == SdLabel::Same),
            Task::Sr => usize::from(self.sr_label == SrLabel::Vertical),
        }
    }

    pub fn item_side(&self) -> usize {
        self.items.first().map_or(0, BitPattern::side)
    }
}

/// Uniform random pattern conditioned on at least one set bit.
pub fn sample_item<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<BitPattern> {
    let len = m * m;
    let mut bits = vec![0u8; len];
    for _ in 0..ITEM_REDRAW_CAP {
        let mut any = false;
        for chunk in bits.chunks_mut(64) {
            let word: u64 = rng.random();
            for (i, b) in chunk.iter_mut().enumerate() {
                *b = ((word >> i) & 1) as u8;
                any |= *b == 1;
            }
        }
        if any {
            return Ok(BitPattern { side: m, bits });
        }
    }
    Err(Error::GeneratorDegenerate(m))
}

/// `k` pairwise-distinct patterns, each marginally uniform over valid patterns.
pub fn sample_distinct_items<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> Result<Vec<BitPattern>> {
    let available = valid_pattern_count(m);
    if available < k as u128 {
        return Err(Error::InfeasibleDistinctSet { m, k, available });
    }
    let mut items: Vec<BitPattern> = Vec::with_capacity(k);
    let mut redraws = 0;
    while items.len() < k {
        let p = sample_item(rng, m)?;
        if items.contains(&p) {
            redraws += 1;
            if redraws > ITEM_REDRAW_CAP {
                return Err(Error::GeneratorDegenerate(m));
            }
            continue;
        }
        items.push(p);
    }
    Ok(items)
}

/// Orientation of a displacement in degrees, in `[0, 90]`. Symmetric cases
/// are exact: equal components give 45, and swapping components gives the
/// complement.
fn pair_angle(dr: f64, dc: f64) -> f64 {
    let (dr, dc) = (dr.abs(), dc.abs());
    if dr == dc {
        45.0
    } else if dr < dc {
        (dr / dc).atan().to_degrees()
    } else {
        90.0 - (dc / dr).atan().to_degrees()
    }
}

/// Vertical iff the mean pairwise orientation is at least 45°.
pub fn sr_rule(centers: &[[f64; 2]]) -> Result<SrLabel> {
    if centers.len() < 2 {
        return Err(Error::TooFewItems { needed: 2, got: centers.len() });
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (i, a) in centers.iter().enumerate() {
        for b in &centers[i + 1..] {
            sum += pair_angle(a[0] - b[0], a[1] - b[1]);
            pairs += 1;
        }
    }
    // Tolerance absorbs rounding in sums of complementary angles.
    let vertical = sum >= 45.0 * pairs as f64 - 1e-9 * pairs as f64;
    Ok(if vertical { SrLabel::Vertical } else { SrLabel::Horizontal })
}

/// Same iff some pair of items is bit-identical.
pub fn sd_rule(items: &[BitPattern]) -> Result<SdLabel> {
    if items.len() < 2 {
        return Err(Error::TooFewItems { needed: 2, got: items.len() });
    }
    let m = items[0].side;
    if items.iter().any(|it| it.side != m) {
        return Err(Error::MixedItemSizes);
    }
    for (i, a) in items.iter().enumerate() {
        if items[i + 1..].contains(a) {
            return Ok(SdLabel::Same);
        }
    }
    Ok(SdLabel::Different)
}

fn centers(placements: &[Placement], m: usize) -> Vec<[f64; 2]> {
    placements.iter().map(|p| p.center(m)).collect()
}

/// Uniform non-overlapping placements by whole-configuration redraw,
/// optionally conditioned on the spatial-relation label.
pub fn place_items<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ImageParams,
    target_sr: Option<SrLabel>,
    redraw_cap: usize,
) -> Result<Vec<Placement>> {
    let (m, n, k) = (params.m, params.n, params.k);
    let span = n - m;
    let mut out: Vec<Placement> = Vec::with_capacity(k);
    for _ in 0..redraw_cap.max(1) {
        out.clear();
        let mut ok = true;
        for _ in 0..k {
            let p = Placement::new(rng.random_range(0..=span), rng.random_range(0..=span));
            if out.iter().any(|q| q.overlaps(&p, m)) {
                ok = false;
                break;
            }
            out.push(p);
        }
        if !ok {
            continue;
        }
        match target_sr {
            Some(want) if sr_rule(&centers(&out, m))? != want => continue,
            _ => return Ok(out),
        }
    }
    Err(Error::PlacementTimeout(redraw_cap))
}

/// Draws items onto a blank `n x n` image.
pub fn render(items: &[BitPattern], placements: &[Placement], n: usize) -> Result<BinaryImage> {
    if items.len() != placements.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} items, {} placements",
            items.len(),
            placements.len()
        )));
    }
    let mut img = BinaryImage::blank(n);
    for (item, p) in items.iter().zip(placements) {
        let m = item.side;
        if p.row + m > n || p.col + m > n {
            return Err(Error::OutOfBounds { row: p.row, col: p.col, m, n });
        }
        for r in 0..m {
            let dst = &mut img.pixels[(p.row + r) * n + p.col..(p.row + r) * n + p.col + m];
            dst.copy_from_slice(&item.bits[r * m..(r + 1) * m]);
        }
    }
    Ok(img)
}

/// One sample whose `task` label is Same/Vertical when `positive`, otherwise
/// Different/Horizontal. The other label is a fair coin.
pub fn generate_sample<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ImageParams,
    task: Task,
    positive: bool,
) -> Result<Sample> {
    let same = if task == Task::Sd { positive } else { rng.random::<bool>() };
    let vertical = if task == Task::Sr { positive } else { rng.random::<bool>() };
    let (m, k) = (params.m, params.k);

    let items = if same {
        let mut items = sample_distinct_items(rng, m, k - 1)?;
        items.insert(0, items[0].clone());
        items.shuffle(rng);
        items
    } else {
        sample_distinct_items(rng, m, k)?
    };
    let target = if vertical { SrLabel::Vertical } else { SrLabel::Horizontal };
    let placements = place_items(rng, params, Some(target), DEFAULT_PLACEMENT_CAP)?;
    let image = render(&items, &placements, params.n)?;
    let sd_label = sd_rule(&items)?;
    let sr_label = sr_rule(&centers(&placements, m))?;
    debug_assert_eq!(sd_label == SdLabel::Same, same);
    debug_assert_eq!(sr_label, target);
    Ok(Sample { image, items, placements, sd_label, sr_label })
}

/// `size / 2` samples of each class of `task`, in shuffled order.
pub fn generate_batch<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ImageParams,
    task: Task,
    size: usize,
) -> Result<Vec<Sample>> {
    if size % 2 != 0 {
        return Err(Error::OddBatch(size));
    }
    let mut classes: Vec<bool> = (0..size).map(|i| i < size / 2).collect();
    classes.shuffle(rng);
    classes.into_iter().map(|positive| generate_sample(rng, params, task, positive)).collect()
}

/// Recomputes both labels from a sample's stored items and placements.
pub fn recompute_labels(sample: &Sample) -> Result<(SdLabel, SrLabel)> {
    let m = sample.item_side();
    Ok((sd_rule(&sample.items)?, sr_rule(&centers(&sample.placements, m))?))
}
