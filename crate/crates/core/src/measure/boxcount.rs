//! Box-counting estimates of the dimension of finite strip unions.
//!
//! Box counting of a finite union at resolutions finer than the thinnest
//! strip only sees the union's top dimension, so the report marks which
//! resolutions respect the thickness condition and fits those.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::slab::{int_lt_float, SlabSet};
use super::{window_sets, MeasureError, Result};
use crate::strips::ApproxFunction;

/// Largest number of boxes held in the finest occupancy map.
pub const MAX_BOXES: u64 = 1 << 30;
/// A resolution enters the fit when fewer than this fraction of the sets are
/// at least half a box wide.
pub const THICK_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountPoint {
    pub resolution: u32,
    pub rho: f64,
    pub boxes: u64,
    /// Fraction of sets whose width is at least half the box side.
    pub thick_fraction: f64,
    pub used_in_fit: bool,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountReport {
    pub n: usize,
    pub sets: usize,
    /// Least-squares slope of `log N` against `log(1/ρ)`.
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<BoxCountPoint>,
    /// No two resolutions passed the thickness condition, so every point was
    /// fitted.
    pub fitted_all: bool,
}

fn check_ladder(resolutions: &[u32]) -> Result<()> {
    if resolutions.len() < 3 {
        return Err(MeasureError::InvalidLadder(format!(
            "need at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    if resolutions.iter().any(|&r| r < 2 || !r.is_power_of_two()) {
        return Err(MeasureError::InvalidLadder("resolutions must be powers of two >= 2".into()));
    }
    let step = resolutions[1] / resolutions[0];
    let geometric = resolutions
        .windows(2)
        .all(|w| w[1] > w[0] && w[1] / w[0] == step);
    if !geometric {
        return Err(MeasureError::InvalidLadder(
            "resolutions must increase by a constant factor".into(),
        ));
    }
    Ok(())
}

/// Exact run of box indices `i` along a row hit by one slab, where the box
/// spans `[(s + w0 i)/R, (s + w0 i + span)/R]` in `a²·x` and the slab is
/// `|R·t − c²R| < wd`.
fn box_span(w0: i128, s: i128, span: i128, c2r: i128, wd: f64) -> (i64, i64) {
    // c²R − wd < s + w0 i + span   and   c²R + wd > s + w0 i
    let low_ok = |i: i64| int_lt_float(c2r - s - span - w0 * i as i128, wd);
    let high_ok = |i: i64| int_lt_float(s + w0 * i as i128 - c2r, wd);
    let w = w0 as f64;
    let mut first = ((c2r - s - span) as f64 / w - wd / w).floor() as i64;
    while low_ok(first - 1) {
        first -= 1;
    }
    while !low_ok(first) {
        first += 1;
    }
    let mut last = ((c2r - s) as f64 / w + wd / w).ceil() as i64;
    while high_ok(last + 1) {
        last += 1;
    }
    while !high_ok(last) {
        last -= 1;
    }
    (first, last)
}

/// Occupancy of one row of boxes at resolution `r` (axis 0 varies).
fn occupy_row(sets: &[&SlabSet], idx: &[i64], r: i64, row: &mut [bool]) {
    let den = r as i128;
    row.iter_mut().for_each(|b| *b = false);
    let mut open = row.len();
    let tail = (row.len() / 64).max(1);
    for (k, set) in sets.iter().enumerate() {
        if open == 0 {
            return;
        }
        if open <= tail {
            // few holes left: test each one against the remaining sets
            for i in 0..row.len() {
                if row[i] {
                    continue;
                }
                row[i] = sets[k..].iter().any(|t| {
                    let w = t.weights();
                    let span: i128 = w.iter().sum();
                    let s: i128 = w[1..].iter().zip(idx).map(|(&wj, &m)| wj * m as i128).sum();
                    let lo = s + w[0] * i as i128;
                    t.meets_closed(lo, lo + span, den)
                });
            }
            return;
        }
        let w = set.weights();
        let span: i128 = w.iter().sum();
        let s: i128 = w[1..].iter().zip(idx).map(|(&wj, &m)| wj * m as i128).sum();
        let w0 = w[0];
        if w0 == 0 {
            if set.meets_closed(s, s + span, den) {
                row.iter_mut().for_each(|b| *b = true);
                open = 0;
            }
            continue;
        }
        let t_lo = s as f64 / r as f64;
        let t_hi = (s + w0 * r as i128 + span) as f64 / r as f64;
        let wd = set.half_width() * r as f64;
        for c in set.candidates(t_lo, t_hi) {
            let c2r = (c as i128) * (c as i128) * den;
            let (f, l) = box_span(w0, s, span, c2r, wd);
            let (f, l) = (f.max(0), l.min(r - 1));
            if f > l {
                continue;
            }
            for b in &mut row[f as usize..=l as usize] {
                if !*b {
                    *b = true;
                    open -= 1;
                }
            }
        }
    }
}

/// Box counts of the union of `sets` on a geometric ladder of resolutions.
pub fn box_count_sets(sets: &[SlabSet], n: usize, resolutions: &[u32]) -> Result<BoxCountReport> {
    check_ladder(resolutions)?;
    if let Some(s) = sets.iter().find(|s| s.dim() != n) {
        return Err(MeasureError::DimensionMismatch {
            expected: n,
            got: s.dim(),
        });
    }
    let finest = *resolutions.last().unwrap() as i64;
    let total = (finest as u128).pow(n as u32);
    if total > MAX_BOXES as u128 {
        return Err(MeasureError::GridTooLarge {
            cells: total,
            cap: MAX_BOXES as u128,
        });
    }
    // widest sets first: they hit the most boxes
    let mut order: Vec<&SlabSet> = sets.iter().collect();
    order.sort_by(|a, b| {
        let ka: i128 = a.weights().iter().sum();
        let kb: i128 = b.weights().iter().sum();
        kb.cmp(&ka)
    });
    let rows = (finest as u64).pow(n as u32 - 1);
    let mut grid: Vec<bool> = (0..rows)
        .into_par_iter()
        .map_init(
            || (vec![0i64; n - 1], vec![false; finest as usize]),
            |(idx, row), id| {
                let mut rest = id;
                for slot in idx.iter_mut() {
                    *slot = (rest % finest as u64) as i64;
                    rest /= finest as u64;
                }
                occupy_row(&order, idx, finest, row);
                row.clone()
            },
        )
        .flatten_iter()
        .collect();
    let mut counts = vec![(finest as u32, grid.iter().filter(|&&b| b).count() as u64)];
    let mut side = finest as usize;
    while side > resolutions[0] as usize {
        grid = pool(&grid, side, n);
        side /= 2;
        counts.push((side as u32, grid.iter().filter(|&&b| b).count() as u64));
    }
    let mut points: Vec<BoxCountPoint> = resolutions
        .iter()
        .map(|&r| {
            let boxes = counts.iter().find(|c| c.0 == r).map(|c| c.1).unwrap_or(0);
            let cell = 1.0 / r as f64;
            let thick = sets.iter().filter(|s| 2.0 * s.thickness() >= cell).count();
            BoxCountPoint {
                resolution: r,
                rho: cell,
                boxes,
                thick_fraction: if sets.is_empty() { 0.0 } else { thick as f64 / sets.len() as f64 },
                used_in_fit: false,
                residual: None,
            }
        })
        .collect();
    let mut fitted_all = false;
    let mut chosen: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].thick_fraction < THICK_FRACTION && points[i].boxes > 0)
        .collect();
    if chosen.len() < 2 {
        fitted_all = true;
        chosen = (0..points.len()).filter(|&i| points[i].boxes > 0).collect();
    }
    let xy: Vec<(f64, f64)> = chosen
        .iter()
        .map(|&i| ((points[i].resolution as f64).ln(), (points[i].boxes as f64).ln()))
        .collect();
    let (slope, intercept) = least_squares(&xy);
    for (&i, &(x, y)) in chosen.iter().zip(&xy) {
        points[i].used_in_fit = true;
        points[i].residual = Some(y - (intercept + slope * x));
    }
    Ok(BoxCountReport {
        n,
        sets: sets.len(),
        slope,
        intercept,
        points,
        fitted_all,
    })
}

/// Halve the side of an occupancy grid stored with axis 0 fastest.
fn pool(grid: &[bool], side: usize, n: usize) -> Vec<bool> {
    let half = side / 2;
    let mut out = vec![false; half.pow(n as u32)];
    for (i, &b) in grid.iter().enumerate() {
        if !b {
            continue;
        }
        let (mut rest, mut j, mut stride) = (i, 0usize, 1usize);
        for _ in 0..n {
            j += (rest % side) / 2 * stride;
            rest /= side;
            stride *= half;
        }
        out[j] = true;
    }
    out
}

fn least_squares(xy: &[(f64, f64)]) -> (f64, f64) {
    let m = xy.len() as f64;
    if xy.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Box counting for `E = ∪_{H_lo ≤ h_a ≤ H_hi} σ_a` in `[0,1]^n`.
pub fn box_counting_dimension(
    f: &ApproxFunction,
    n: usize,
    window: (u64, u64),
    resolutions: &[u32],
) -> Result<BoxCountReport> {
    if window.0 < 2 {
        return Err(MeasureError::InvalidHeight(format!("need H_lo >= 2, got {}", window.0)));
    }
    check_ladder(resolutions)?;
    let sets = window_sets(f, n, window.0, window.1)?;
    box_count_sets(&sets, n, resolutions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCountPoint {
    pub k: u32,
    pub rho: f64,
    pub count: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCountReport {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<CoverCountPoint>,
}

/// Length of the line `p x + q y = t` inside `[0,1]²`.
fn segment_length(p: f64, q: f64, t: f64) -> f64 {
    if p == 0.0 {
        return if (0.0..=q).contains(&t) { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if (0.0..=p).contains(&t) { 1.0 } else { 0.0 };
    }
    let x0 = ((t - q) / p).max(0.0);
    let x1 = (t / p).min(1.0);
    if x1 <= x0 {
        return 0.0;
    }
    (x1 - x0) * (1.0 + (p / q).powi(2)).sqrt()
}

/// Scale-matched cover count in the plane.
///
/// For each dyadic block `2^k ≤ h_a < 2^{k+1}` the strips are covered by
/// boxes of side `ρ_k = ψ(2^k)/4^k`, the natural width of the block's
/// strips, which needs about `Σ ⌈L(a,c)/ρ_k⌉` boxes with `L` the length of
/// the line `a²·x = c²` in the unit square. The slope of `log M_k` against
/// `log(1/ρ_k)` tracks the dimension of the limsup set rather than that of a
/// finite union.
pub fn cover_count_dimension(f: &ApproxFunction, k_lo: u32, k_hi: u32) -> Result<CoverCountReport> {
    if k_lo < 1 || k_hi < k_lo + 2 || k_hi > 20 {
        return Err(MeasureError::InvalidLadder(format!(
            "need 1 <= k_lo and k_lo + 2 <= k_hi <= 20, got {k_lo}..{k_hi}"
        )));
    }
    let points: Vec<CoverCountPoint> = (k_lo..=k_hi)
        .map(|k| {
            let lo = 1u64 << k;
            let hi = (1u64 << (k + 1)) - 1;
            let rho = f.at(lo) / (lo as f64 * lo as f64);
            let count: f64 = (0..=hi)
                .into_par_iter()
                .map(|a1| {
                    let mut acc = 0.0;
                    for a2 in 0..=hi {
                        if a1.max(a2) < lo {
                            continue;
                        }
                        let (p, q) = ((a1 * a1) as f64, (a2 * a2) as f64);
                        let top = ((p + q).sqrt().floor()) as u64;
                        for c in 0..=top {
                            let len = segment_length(p, q, (c * c) as f64);
                            if len > 0.0 {
                                acc += (len / rho).ceil();
                            }
                        }
                    }
                    acc
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            CoverCountPoint { k, rho, count }
        })
        .collect();
    let xy: Vec<(f64, f64)> = points.iter().map(|p| ((1.0 / p.rho).ln(), p.count.ln())).collect();
    let (slope, intercept) = least_squares(&xy);
    Ok(CoverCountReport {
        slope,
        intercept,
        points,
    })
}

/// Occupancy of one box by direct test against every set.
#[cfg(test)]
fn box_occupied(sets: &[SlabSet], idx: &[i64], r: i64) -> bool {
    sets.iter().any(|s| {
        let w = s.weights();
        let lo: i128 = w.iter().zip(idx).map(|(&wj, &m)| wj * m as i128).sum();
        let span: i128 = w.iter().sum();
        s.meets_closed(lo, lo + span, r as i128)
    })
}
