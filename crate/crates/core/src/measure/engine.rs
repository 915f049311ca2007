//! Row-by-row coverage of a region by a collection of slab unions.
//!
//! Rows run along axis 0; the remaining axes are fixed at cell centres. Each
//! row yields integer counts (sample rules) or exact interval lengths (the
//! row-exact rule), and rows are reduced in a fixed order so the result does
//! not depend on how rayon splits the work.

use rayon::prelude::*;

use super::slab::{int_lt_float, SlabSet};
use super::{GridSpec, SampleRule};
use crate::strips::Region;

/// Grid estimates of `|U|`, `∫N` and `∫N²` over a region, where `N(x)` counts
/// the sets containing `x` and `U` is their union.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Coverage {
    pub covered: f64,
    pub first_moment: f64,
    pub second_moment: f64,
    /// Grid estimate of the region's own volume.
    pub region: f64,
}

#[derive(Clone, Copy, Default)]
struct CountRow {
    covered: u64,
    first: u64,
    second: u128,
    cells: u64,
}

#[derive(Clone, Copy, Default)]
struct LengthRow {
    covered: f64,
    first: f64,
    second: f64,
    chord: f64,
}

/// Index ranges of rows: for each axis `1..n` the cells whose centres can lie
/// in the region.
fn row_axes(region: &Region, cells: i64) -> Vec<(i64, i64)> {
    (1..region.dim())
        .map(|axis| {
            let (lo, hi) = region.axis_bounds(axis);
            let a = ((lo * cells as f64).floor() as i64 - 1).max(0);
            let b = ((hi * cells as f64).ceil() as i64 + 1).min(cells);
            (a, b)
        })
        .collect()
}

fn decode(mut id: u64, axes: &[(i64, i64)], out: &mut [i64]) {
    for (slot, &(a, b)) in out.iter_mut().zip(axes) {
        let span = (b - a) as u64;
        *slot = a + (id % span) as i64;
        id /= span;
    }
}

fn row_count(axes: &[(i64, i64)]) -> u64 {
    axes.iter().map(|&(a, b)| (b - a).max(0) as u64).product()
}

/// Pairwise sum in a fixed tree shape.
pub(crate) fn tree_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => tree_sum(&v[..n / 2]) + tree_sum(&v[n / 2..]),
    }
}

pub(crate) fn coverage(sets: &[SlabSet], region: &Region, grid: &GridSpec) -> Coverage {
    match grid.sample {
        SampleRule::CellCenter => sampled(sets, region, grid.resolution as i64),
        SampleRule::Subsample(k) => sampled(sets, region, grid.resolution as i64 * k as i64),
        SampleRule::RowExact => row_exact(sets, region, grid.resolution as i64),
    }
}

/// First and last sample index `m` (centre `(m + ½)/cells`) inside the region
/// along the row.
fn sample_span(
    region: &Region,
    rest: &[f64],
    cells: i64,
    point: &mut Vec<f64>,
) -> Option<(i64, i64)> {
    let (lo, hi) = region.chord(rest)?;
    point.clear();
    point.push(0.0);
    point.extend_from_slice(rest);
    let mut inside = |m: i64| {
        point[0] = (2 * m + 1) as f64 / (2 * cells) as f64;
        (0..cells).contains(&m) && region.contains(point)
    };
    let mut a = ((lo * cells as f64 - 0.5).ceil() as i64).clamp(0, cells - 1);
    while a > 0 && inside(a - 1) {
        a -= 1;
    }
    while a < cells && !inside(a) {
        a += 1;
    }
    let mut b = ((hi * cells as f64 - 0.5).floor() as i64).clamp(0, cells - 1);
    while b + 1 < cells && inside(b + 1) {
        b += 1;
    }
    while b >= a && !inside(b) {
        b -= 1;
    }
    (a <= b).then_some((a, b))
}

/// Exact index interval of samples `m` with `|2 w0 m − k| < wd`.
fn exact_span(w0: i128, k: i128, wd: f64) -> (i64, i64) {
    let left = |m: i64| int_lt_float(k - 2 * w0 * m as i128, wd);
    let right = |m: i64| int_lt_float(2 * w0 * m as i128 - k, wd);
    let two = 2.0 * w0 as f64;
    let mut first = ((k as f64 - wd) / two).floor() as i64;
    while left(first - 1) {
        first -= 1;
    }
    while !left(first) {
        first += 1;
    }
    let mut last = ((k as f64 + wd) / two).ceil() as i64;
    while right(last + 1) {
        last += 1;
    }
    while !right(last) {
        last -= 1;
    }
    (first, last)
}

fn bump(counts: &mut [u32], span: (i64, i64)) {
    for c in &mut counts[span.0 as usize..=span.1 as usize] {
        *c += 1;
    }
}

fn sampled(sets: &[SlabSet], region: &Region, cells: i64) -> Coverage {
    let n = region.dim();
    let axes = row_axes(region, cells);
    let rows = row_count(&axes);
    let den = 2 * cells as i128;
    let per_row: Vec<CountRow> = (0..rows)
        .into_par_iter()
        .map_init(
            || (vec![0u32; cells as usize], vec![0i64; n - 1], Vec::new(), Vec::new()),
            |(counts, idx, rest, point), id| {
                decode(id, &axes, idx);
                rest.clear();
                rest.extend(idx.iter().map(|&m| (2 * m + 1) as f64 / den as f64));
                let Some((ma, mb)) = sample_span(region, rest, cells, point) else {
                    return CountRow::default();
                };
                for set in sets {
                    let w = set.weights();
                    let s: i128 = w[1..].iter().zip(idx.iter()).map(|(&wj, &m)| wj * (2 * m as i128 + 1)).sum();
                    let w0 = w[0];
                    if w0 == 0 {
                        if set.contains_ratio(s, den) {
                            counts[ma as usize..=mb as usize].iter_mut().for_each(|c| *c += 1);
                        }
                        continue;
                    }
                    let t_lo = (s + w0 * (2 * ma as i128 + 1)) as f64 / den as f64;
                    let t_hi = (s + w0 * (2 * mb as i128 + 1)) as f64 / den as f64;
                    let wd = set.half_width() * den as f64;
                    // consecutive slabs may overlap; merge so each set counts once
                    let mut open: Option<(i64, i64)> = None;
                    for c in set.candidates(t_lo, t_hi) {
                        let k = (c as i128) * (c as i128) * den - s - w0;
                        let (f, l) = exact_span(w0, k, wd);
                        let (f, l) = (f.max(ma), l.min(mb));
                        if f > l {
                            continue;
                        }
                        open = match open {
                            Some((of, ol)) if f <= ol + 1 => Some((of, ol.max(l))),
                            Some(done) => {
                                bump(counts, done);
                                Some((f, l))
                            }
                            None => Some((f, l)),
                        };
                    }
                    if let Some(done) = open {
                        bump(counts, done);
                    }
                }
                let mut row = CountRow {
                    cells: (mb - ma + 1) as u64,
                    ..Default::default()
                };
                for c in &mut counts[ma as usize..=mb as usize] {
                    let v = *c as u64;
                    row.covered += (v > 0) as u64;
                    row.first += v;
                    row.second += (v * v) as u128;
                    *c = 0;
                }
                row
            },
        )
        .collect();
    let mut total = CountRow::default();
    for r in &per_row {
        total.covered += r.covered;
        total.first += r.first;
        total.second += r.second;
        total.cells += r.cells;
    }
    let vol = (cells as f64).powi(-(n as i32));
    Coverage {
        covered: total.covered as f64 * vol,
        first_moment: total.first as f64 * vol,
        second_moment: total.second as f64 * vol,
        region: total.cells as f64 * vol,
    }
}

/// Open intervals of axis-0 coordinates where `x` lies in `set`, clipped to
/// `(lo, hi)`, merged, in increasing order. `s` is `Σ_{j≥1} w_j x_j`.
pub(crate) fn row_intervals(set: &SlabSet, s: f64, lo: f64, hi: f64, out: &mut Vec<(f64, f64)>) {
    let w0 = set.weights()[0] as f64;
    let hw = set.half_width();
    if w0 == 0.0 {
        if set.candidates(s, s).any(|c| ((c * c) as f64 - s).abs() < hw) {
            out.push((lo, hi));
        }
        return;
    }
    let start = out.len();
    for c in set.candidates(s + w0 * lo, s + w0 * hi) {
        let c2 = (c as f64) * (c as f64);
        let a = ((c2 - hw - s) / w0).max(lo);
        let b = ((c2 + hw - s) / w0).min(hi);
        if a >= b {
            continue;
        }
        match out[start..].last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
}

/// Scratch buffers for [`sweep`].
#[derive(Default)]
struct SweepBuffers {
    keys: Vec<u64>,
    sorted: Vec<u64>,
    starts: Vec<usize>,
}

/// Lengths of `{N ≥ 1}`, `∫N` and `∫N²` along one row from a list of
/// intervals inside `[lo, hi] ⊂ [0, ∞)`, each set contributing disjoint pieces.
///
/// Endpoints are keyed by the bits of the (non-negative) coordinate with the
/// event kind in the low bit, closing before opening, and sorted by a bucket
/// pass followed by small in-bucket sorts.
fn sweep(intervals: &[(f64, f64)], lo: f64, hi: f64, buf: &mut SweepBuffers) -> (f64, f64, f64) {
    let m = 2 * intervals.len();
    if m == 0 {
        return (0.0, 0.0, 0.0);
    }
    let buckets = (m / 8).max(1);
    let scale = buckets as f64 / (hi - lo).max(f64::MIN_POSITIVE);
    let bucket = |k: u64| {
        let x = f64::from_bits(k >> 1);
        (((x - lo) * scale) as usize).min(buckets - 1)
    };
    buf.keys.clear();
    for &(a, b) in intervals {
        buf.keys.push(a.to_bits() << 1 | 1);
        buf.keys.push(b.to_bits() << 1);
    }
    buf.starts.clear();
    buf.starts.resize(buckets + 1, 0);
    for &k in &buf.keys {
        buf.starts[bucket(k) + 1] += 1;
    }
    for i in 0..buckets {
        buf.starts[i + 1] += buf.starts[i];
    }
    buf.sorted.clear();
    buf.sorted.resize(m, 0);
    let mut fill = buf.starts.clone();
    for &k in &buf.keys {
        let b = bucket(k);
        buf.sorted[fill[b]] = k;
        fill[b] += 1;
    }
    for w in buf.starts.windows(2) {
        buf.sorted[w[0]..w[1]].sort_unstable();
    }
    let (mut covered, mut first, mut second) = (0.0, 0.0, 0.0);
    let mut depth = 0i64;
    let mut x = 0.0;
    for &k in &buf.sorted {
        let pos = f64::from_bits(k >> 1);
        if depth > 0 {
            let len = pos - x;
            covered += len;
            first += len * depth as f64;
            second += len * (depth * depth) as f64;
        }
        depth += if k & 1 == 1 { 1 } else { -1 };
        x = pos;
    }
    (covered, first, second)
}

fn row_exact(sets: &[SlabSet], region: &Region, cells: i64) -> Coverage {
    let n = region.dim();
    let axes = row_axes(region, cells);
    let rows = row_count(&axes);
    let per_row: Vec<LengthRow> = (0..rows)
        .into_par_iter()
        .map_init(
            || (vec![0i64; n - 1], Vec::new(), Vec::new(), SweepBuffers::default()),
            |(idx, rest, intervals, buf), id| {
                decode(id, &axes, idx);
                rest.clear();
                rest.extend(idx.iter().map(|&m| (2 * m + 1) as f64 / (2 * cells) as f64));
                let Some((lo, hi)) = region.chord(rest) else {
                    return LengthRow::default();
                };
                intervals.clear();
                for set in sets {
                    let s: f64 = set.weights()[1..]
                        .iter()
                        .zip(rest.iter())
                        .map(|(&w, &y)| w as f64 * y)
                        .sum();
                    row_intervals(set, s, lo, hi, intervals);
                }
                let (covered, first, second) = sweep(intervals, lo, hi, buf);
                LengthRow {
                    covered,
                    first,
                    second,
                    chord: hi - lo,
                }
            },
        )
        .collect();
    let weight = (cells as f64).powi(-(n as i32 - 1));
    let pick = |f: fn(&LengthRow) -> f64| {
        let v: Vec<f64> = per_row.iter().map(f).collect();
        tree_sum(&v) * weight
    };
    Coverage {
        covered: pick(|r| r.covered),
        first_moment: pick(|r| r.first),
        second_moment: pick(|r| r.second),
        region: pick(|r| r.chord),
    }
}
