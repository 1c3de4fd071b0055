//! Idealized subtraction-template probe and the arrangement counts that
//! size the template bank it would need.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{generate_batch, valid_pattern_count, BinaryImage, ImageParams, SdLabel, Task};
use crate::rng::{derive_seed, stream_rng};
use crate::trainer::{ConditionSummary, Sweep};

/// A filter with a positive `m x m` region at the origin and a negative one
/// at `(dr, dc)`. It fires where both regions hold the same non-blank content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubtractionTemplate {
    dr: isize,
    dc: isize,
    m: usize,
}

impl SubtractionTemplate {
    pub fn new(dr: isize, dc: isize, m: usize) -> Result<Self> {
        if m == 0 || (dr.unsigned_abs() < m && dc.unsigned_abs() < m) {
            return Err(Error::InvalidConfig(format!("template regions overlap at offset ({dr}, {dc}) for m={m}")));
        }
        Ok(Self { dr, dc, m })
    }

    pub fn offset(&self) -> (isize, isize) {
        (self.dr, self.dc)
    }

    pub fn fires(&self, image: &BinaryImage, row: usize, col: usize) -> bool {
        let n = image.side() as isize;
        let (r2, c2) = (row as isize + self.dr, col as isize + self.dc);
        let m = self.m as isize;
        if row as isize + m > n || col as isize + m > n || r2 < 0 || c2 < 0 || r2 + m > n || c2 + m > n {
            return false;
        }
        let a = image.crop(row, col, self.m);
        a.contains(&1) && a == image.crop(r2 as usize, c2 as usize, self.m)
    }
}

fn check_window(image: &BinaryImage, m: usize) -> Result<()> {
    if m == 0 || m > image.side() {
        return Err(Error::Infeasible(format!("window side {m} does not fit a {}x{} image", image.side(), image.side())));
    }
    Ok(())
}

/// Exhaustive scan over every pair of disjoint in-bounds windows: true if
/// any two hold identical non-blank content. Partial windows (a corner of an
/// item on blank background) count, so this fires on most generated images.
pub fn has_matching_window_pair(image: &BinaryImage, m: usize) -> Result<bool> {
    check_window(image, m)?;
    let span = image.side() - m;
    let mut groups: HashMap<Vec<u8>, Vec<(usize, usize)>> = HashMap::new();
    for r in 0..=span {
        for c in 0..=span {
            let w = image.crop(r, c, m);
            if w.contains(&1) {
                groups.entry(w).or_default().push((r, c));
            }
        }
    }
    Ok(groups.values().any(|pos| {
        pos.iter().enumerate().any(|(i, a)| {
            pos[i + 1..].iter().any(|b| a.0.abs_diff(b.0) >= m || a.1.abs_diff(b.1) >= m)
        })
    }))
}

struct Parser<'a> {
    image: &'a BinaryImage,
    m: usize,
    ink: Vec<(usize, usize)>,
    occupied: Vec<bool>,
    windows: Vec<Vec<u8>>,
}

impl Parser<'_> {
    fn free(&self, r0: usize, c0: usize) -> bool {
        let n = self.image.side();
        (r0..r0 + self.m).all(|r| (c0..c0 + self.m).all(|c| !self.occupied[r * n + c]))
    }

    fn mark(&mut self, r0: usize, c0: usize, v: bool) {
        let n = self.image.side();
        for r in r0..r0 + self.m {
            self.occupied[r * n + c0..r * n + c0 + self.m].fill(v);
        }
    }

    fn search(&mut self, remaining: usize) -> bool {
        let n = self.image.side();
        let Some(&(pr, pc)) = self.ink.iter().find(|&&(r, c)| !self.occupied[r * n + c]) else {
            return remaining == 0
                && self.windows.iter().enumerate().any(|(i, a)| self.windows[i + 1..].contains(a));
        };
        if remaining == 0 {
            return false;
        }
        let m = self.m;
        for r0 in pr.saturating_sub(m - 1)..=pr.min(n - m) {
            for c0 in pc.saturating_sub(m - 1)..=pc.min(n - m) {
                if !self.free(r0, c0) {
                    continue;
                }
                self.mark(r0, c0, true);
                self.windows.push(self.image.crop(r0, c0, m));
                let found = self.search(remaining - 1);
                self.windows.pop();
                self.mark(r0, c0, false);
                if found {
                    return true;
                }
            }
        }
        false
    }
}

/// Same iff the ink parses into exactly `k` disjoint in-bounds `m x m`
/// windows, each holding ink, two of which are identical.
///
/// The first uncovered ink pixel in raster order must open a new window, so
/// each step tries at most `m^2` windows. Restricting matches to windows of a
/// full parse is what keeps partial-window coincidences out.
pub fn probe_classify(image: &BinaryImage, m: usize, k: usize) -> Result<SdLabel> {
    check_window(image, m)?;
    if k < 2 {
        return Err(Error::TooFewItems { needed: 2, got: k });
    }
    let n = image.side();
    let ink: Vec<(usize, usize)> = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .filter(|&(r, c)| image.get(r, c) == 1)
        .collect();
    if ink.len() > k * m * m {
        return Ok(SdLabel::Different);
    }
    let mut parser = Parser { image, m, ink, occupied: vec![false; n * n], windows: Vec::with_capacity(k) };
    Ok(if parser.search(k) { SdLabel::Same } else { SdLabel::Different })
}

/// Probe performance on generated SD data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub samples: usize,
    pub same: usize,
    pub true_positive: usize,
    pub false_positive: usize,
    /// Positives from the literal window-pair scan on Different images.
    pub pair_scan_false_positive: usize,
    pub pair_scan_checked: usize,
}

impl ProbeStats {
    pub fn recall(&self) -> f64 {
        self.true_positive as f64 / self.same.max(1) as f64
    }

    pub fn accuracy(&self) -> f64 {
        let correct = self.true_positive + (self.samples - self.same - self.false_positive);
        correct as f64 / self.samples.max(1) as f64
    }

    pub fn false_positive_rate(&self) -> f64 {
        self.false_positive as f64 / (self.samples - self.same).max(1) as f64
    }

    pub fn pair_scan_false_positive_rate(&self) -> f64 {
        self.pair_scan_false_positive as f64 / self.pair_scan_checked.max(1) as f64
    }
}

/// Runs the probe over `count` balanced SD samples drawn from `params.seed()`
/// in batches of `batch`. The literal pair scan runs on the first
/// `pair_scan_limit` Different images only; it is slow and uninformative.
pub fn evaluate_probe(params: &ImageParams, count: usize, batch: usize, pair_scan_limit: usize) -> Result<ProbeStats> {
    if batch == 0 || batch % 2 != 0 || count % batch != 0 {
        return Err(Error::InvalidConfig(format!("count {count} must be a multiple of an even batch size {batch}")));
    }
    let seed = derive_seed(params.seed(), "probe", 0);
    let mut stats = ProbeStats { samples: 0, same: 0, true_positive: 0, false_positive: 0, pair_scan_false_positive: 0, pair_scan_checked: 0 };
    for b in 0..count / batch {
        for s in generate_batch(&mut stream_rng(seed, b as u64), params, Task::Sd, batch)? {
            let guess = probe_classify(&s.image, params.m(), params.k())?;
            stats.samples += 1;
            if s.sd_label == SdLabel::Same {
                stats.same += 1;
                stats.true_positive += usize::from(guess == SdLabel::Same);
            } else {
                stats.false_positive += usize::from(guess == SdLabel::Same);
                if stats.pair_scan_checked < pair_scan_limit {
                    stats.pair_scan_checked += 1;
                    stats.pair_scan_false_positive += usize::from(has_matching_window_pair(&s.image, params.m())?);
                }
            }
        }
    }
    Ok(stats)
}

fn feasible_count_args(n: usize, m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || m > n {
        return Err(Error::Infeasible(format!("no arrangements defined for n={n} m={m} k={k}")));
    }
    Ok(())
}

/// Unordered placements of `k` non-overlapping `m x m` squares inside an
/// `n x n` frame. Zero when they cannot all fit.
///
/// `k = 2` uses a closed form. Larger `k` uses inclusion–exclusion over the
/// overlap graph: for an edge set `E`, tuples whose `E`-pairs all overlap
/// factor into a row count times an identical column count, and the 1-D
/// count factors over connected components.
pub fn count_arrangements(n: usize, m: usize, k: usize) -> Result<u128> {
    feasible_count_args(n, m, k)?;
    let l = (n - m + 1) as i128;
    if k == 1 {
        return Ok((l * l) as u128);
    }
    if k == 2 {
        let close = l + 2 * (1..=((m - 1) as i128).min(l - 1)).map(|d| l - d).sum::<i128>();
        return Ok(((l.pow(4) - close * close) / 2) as u128);
    }
    if k > 8 {
        return Err(Error::InvalidConfig(format!("k={k} is beyond the inclusion-exclusion limit of 8")));
    }
    let edges: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let mut memo: HashMap<Vec<u8>, i128> = HashMap::new();
    let mut ordered = 0i128;
    for subset in 0u64..(1u64 << edges.len()) {
        let chosen: Vec<(usize, usize)> =
            edges.iter().enumerate().filter(|(i, _)| subset >> i & 1 == 1).map(|(_, &e)| e).collect();
        let mut per_axis = 1i128;
        for comp in components(k, &chosen) {
            per_axis *= component_count(&comp, &chosen, m as i64, l as i64, &mut memo);
            if per_axis == 0 {
                break;
            }
        }
        let term = per_axis * per_axis;
        if chosen.len() % 2 == 0 {
            ordered += term;
        } else {
            ordered -= term;
        }
    }
    let fact: i128 = (1..=k as i128).product();
    Ok((ordered / fact) as u128)
}

fn components(k: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in 0..k {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

/// Adjacency matrix of `comp`, relabelled to the lexicographically smallest
/// form over all vertex orders.
fn canonical(comp: &[usize], edges: &[(usize, usize)]) -> Vec<u8> {
    let c = comp.len();
    let idx = |v: usize| comp.iter().position(|&x| x == v);
    let adj: Vec<(usize, usize)> =
        edges.iter().filter_map(|&(a, b)| Some((idx(a)?, idx(b)?))).collect();
    let mut perm: Vec<usize> = (0..c).collect();
    let mut best: Option<Vec<u8>> = None;
    loop {
        let mut mat = vec![0u8; c * c];
        for &(a, b) in &adj {
            mat[perm[a] * c + perm[b]] = 1;
            mat[perm[b] * c + perm[a]] = 1;
        }
        if best.as_ref().map_or(true, |b| mat < *b) {
            best = Some(mat);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best.unwrap_or_default()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap_or(i);
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// 1-D tuples for one connected component: positions in `[0, l)` with every
/// edge pair closer than `m`.
fn component_count(
    comp: &[usize],
    edges: &[(usize, usize)],
    m: i64,
    l: i64,
    memo: &mut HashMap<Vec<u8>, i128>,
) -> i128 {
    if comp.len() == 1 {
        return l as i128;
    }
    let key = canonical(comp, edges);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let c = comp.len();
    let adj: Vec<Vec<bool>> = (0..c)
        .map(|i| (0..c).map(|j| key[i * c + j] == 1).collect())
        .collect();
    // Visit in BFS order so every later vertex has an earlier neighbour.
    let mut order = vec![0usize];
    let mut seen = vec![false; c];
    seen[0] = true;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for u in 0..c {
            if adj[v][u] && !seen[u] {
                seen[u] = true;
                order.push(u);
            }
        }
    }
    let mut offsets = vec![0i64; c];
    let total = enumerate_offsets(&order, 1, &adj, &mut offsets, m, l);
    memo.insert(key, total);
    total
}

fn enumerate_offsets(order: &[usize], depth: usize, adj: &[Vec<bool>], offsets: &mut [i64], m: i64, l: i64) -> i128 {
    if depth == order.len() {
        let lo = order.iter().map(|&v| offsets[v]).min().unwrap_or(0);
        let hi = order.iter().map(|&v| offsets[v]).max().unwrap_or(0);
        return (l - (hi - lo)).max(0) as i128;
    }
    let v = order[depth];
    let placed = &order[..depth];
    let anchor = placed.iter().copied().find(|&u| adj[v][u]).expect("BFS order has an earlier neighbour");
    let mut total = 0;
    for d in offsets[anchor] - (m - 1)..=offsets[anchor] + (m - 1) {
        if placed.iter().all(|&u| !adj[v][u] || (d - offsets[u]).abs() < m) {
            offsets[v] = d;
            total += enumerate_offsets(order, depth + 1, adj, offsets, m, l);
        }
    }
    total
}

/// One line of the straining table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrainingRow {
    pub sweep: Sweep,
    pub param_value: usize,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub model: String,
    pub task: Task,
    pub mean_alc: Option<f64>,
    pub non_learned: usize,
    pub trials: usize,
    pub arrangements: u128,
    pub patterns: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Rising,
    Falling,
    Flat,
    Mixed,
}

/// Direction of `values` with changes under `tol` counted as flat. `None`
/// entries (no learned trial) count as the lowest possible value.
pub fn trend(values: &[Option<f64>], tol: f64) -> Trend {
    let v: Vec<f64> = values.iter().map(|x| x.unwrap_or(0.0)).collect();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if v.len() < 2 || hi - lo < tol {
        return Trend::Flat;
    }
    let steps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    if steps.iter().all(|&s| s > -tol) {
        Trend::Rising
    } else if steps.iter().all(|&s| s < tol) {
        Trend::Falling
    } else {
        Trend::Mixed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrainingReport {
    pub sweep: Sweep,
    pub rows: Vec<StrainingRow>,
    /// `(model, task, value)` combinations with no stored summary.
    pub missing: Vec<(String, Task, usize)>,
    /// ALC direction per `(model, task)` across the present values.
    pub trends: Vec<(String, Task, Trend)>,
}

pub const STRAINING_HEADER: &str = "sweep,param_value,m,n,k,model,task,mean_alc,non_learned,trials,arrangements,patterns";

/// Joins stored ALCs on one sweep with arrangement and pattern counts.
/// Missing conditions are listed, never filled in.
pub fn straining_report(summaries: &[ConditionSummary], sweep: Sweep) -> Result<StrainingReport> {
    let mut rows = Vec::new();
    for s in summaries {
        let Some(v) = sweep.value_of(&s.params) else { continue };
        let (m, n, k) = (s.params.m(), s.params.n(), s.params.k());
        rows.push(StrainingRow {
            sweep,
            param_value: v,
            m,
            n,
            k,
            model: s.arch.clone(),
            task: s.task,
            mean_alc: s.mean_alc,
            non_learned: s.non_learned,
            trials: s.trials,
            arrangements: count_arrangements(n, m, k)?,
            patterns: valid_pattern_count(m).saturating_add(1),
        });
    }
    rows.sort_by(|a, b| (&a.model, a.task, a.param_value).cmp(&(&b.model, b.task, b.param_value)));
    let mut models: Vec<(String, Task)> = rows.iter().map(|r| (r.model.clone(), r.task)).collect();
    models.dedup();
    let mut missing = Vec::new();
    let mut trends = Vec::new();
    for (model, task) in models {
        let mine: Vec<&StrainingRow> = rows.iter().filter(|r| r.model == model && r.task == task).collect();
        for v in sweep.values() {
            if !mine.iter().any(|r| r.param_value == v) {
                missing.push((model.clone(), task, v));
            }
        }
        let alcs: Vec<Option<f64>> = mine.iter().map(|r| r.mean_alc).collect();
        trends.push((model, task, trend(&alcs, 0.02)));
    }
    Ok(StrainingReport { sweep, rows, missing, trends })
}

impl StrainingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(STRAINING_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.sweep.name(),
                r.param_value,
                r.m,
                r.n,
                r.k,
                r.model,
                r.task,
                r.mean_alc.map(|x| x.to_string()).unwrap_or_default(),
                r.non_learned,
                r.trials,
                r.arrangements,
                r.patterns
            ));
        }
        out
    }
}
