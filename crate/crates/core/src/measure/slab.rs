//! Slab unions `σ_a(c)` in the form the grid engines consume.

use crate::lattice::CoeffVector;
use crate::strips::Strip;

/// `i < f` for an integer and a finite float, decided exactly.
pub(crate) fn int_lt_float(i: i128, f: f64) -> bool {
    const LIMIT: f64 = 1.7e38;
    if f >= LIMIT {
        return true;
    }
    if f <= -LIMIT {
        return false;
    }
    let fl = f.floor();
    let fi = fl as i128;
    match i.cmp(&fi) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => f > fl,
    }
}

/// Either one slab `|a²·x − c²| < w` or the union of those slabs over all
/// `c ≥ 0`.
#[derive(Clone, Debug)]
pub struct SlabSet {
    weights: Vec<i128>,
    norm: f64,
    half_width: f64,
    c: Option<u64>,
}

impl SlabSet {
    /// Union over every `c ≥ 0` of the slabs of half-width `half_width`.
    pub fn family(a: &CoeffVector, half_width: f64) -> Self {
        Self {
            weights: a.squares().into_iter().map(|w| w as i128).collect(),
            norm: a.squares_norm(),
            half_width,
            c: None,
        }
    }

    pub fn single(strip: &Strip) -> Self {
        let a = strip.a();
        Self {
            weights: a.squares().into_iter().map(|w| w as i128).collect(),
            norm: a.squares_norm(),
            half_width: strip.half_width(),
            c: Some(strip.c()),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[i128] {
        &self.weights
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Euclidean width of one slab.
    pub fn thickness(&self) -> f64 {
        2.0 * self.half_width / self.norm
    }

    /// Labels `c` whose slab may meet the closed value range `[t_lo, t_hi]`
    /// of `a²·x`. Conservative by one on each side.
    pub(crate) fn candidates(&self, t_lo: f64, t_hi: f64) -> std::ops::RangeInclusive<u64> {
        match self.c {
            Some(c) => c..=c,
            None => {
                let lo = (t_lo - self.half_width).max(0.0).sqrt().floor() as u64;
                let hi = (t_hi + self.half_width).max(0.0).sqrt().ceil() as u64;
                lo.saturating_sub(1)..=hi + 1
            }
        }
    }

    /// Is `t = num / den` inside some slab? `den` must be a power of two so
    /// that `w·den` is exact.
    pub(crate) fn contains_ratio(&self, num: i128, den: i128) -> bool {
        let t = num as f64 / den as f64;
        let wd = self.half_width * den as f64;
        self.candidates(t, t).any(|c| {
            let c2d = (c as i128) * (c as i128) * den;
            int_lt_float((num - c2d).abs(), wd)
        })
    }

    /// Does some open slab meet the closed value range `[lo/den, hi/den]`?
    pub(crate) fn meets_closed(&self, lo: i128, hi: i128, den: i128) -> bool {
        let wd = self.half_width * den as f64;
        // c² den > lo − w den   and   c² den < hi + w den
        let above_lo = |c: u64| int_lt_float(lo - (c as i128) * (c as i128) * den, wd);
        let below_hi = |c: u64| int_lt_float((c as i128) * (c as i128) * den - hi, wd);
        match self.c {
            Some(c) => above_lo(c) && below_hi(c),
            None => {
                let t = lo as f64 / den as f64;
                let mut c = (t - self.half_width).max(0.0).sqrt().floor() as u64;
                while c > 0 && above_lo(c - 1) {
                    c -= 1;
                }
                while !above_lo(c) {
                    c += 1;
                }
                below_hi(c)
            }
        }
    }
}
