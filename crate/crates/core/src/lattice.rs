//! Exact integer machinery for coefficient vectors.
//!
//! Everything here works on non-negative integer vectors `a = (a_1, ..., a_n)`
//! and their squares `a² = (a_1², ..., a_n²)`. All arithmetic that feeds an
//! identity (gcd, ratio tests, 2×2 minors) is done in checked integer
//! arithmetic; a value that would not fit is reported as
//! [`LatticeError::Overflow`] instead of wrapping.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest height accepted anywhere in this module. Keeps `h⁴·2` inside `i128`.
pub const MAX_HEIGHT: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("coefficient vectors need at least 2 coordinates, got {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("the zero vector is not allowed here")]
    ZeroVector,
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
    #[error("invalid height range [{h_min}, {h_max}]")]
    InvalidRange { h_min: u64, h_max: u64 },
    #[error("invalid ratio bounds: need 0 < lo <= 1 <= hi, got lo = {lo}, hi = {hi}")]
    InvalidRatioBounds { lo: Ratio<u64>, hi: Ratio<u64> },
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// A non-negative integer coefficient vector with its cached height.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct CoeffVector {
    coords: Vec<u64>,
    height: u64,
}

impl CoeffVector {
    pub fn new(coords: Vec<u64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(LatticeError::DimensionTooSmall(coords.len()));
        }
        let height = coords.iter().copied().max().unwrap_or(0);
        if height > MAX_HEIGHT {
            return Err(LatticeError::Overflow("height"));
        }
        Ok(Self { coords, height })
    }

    /// The largest coordinate, `h_a = max |a_i|`.
    #[inline]
    pub fn height(&self) -> u64 {
        self.height
    }

    #[inline]
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.height == 0
    }

    /// The squared vector `a²`.
    pub fn squares(&self) -> Vec<u128> {
        self.coords.iter().map(|&x| (x as u128) * (x as u128)).collect()
    }

    /// Euclidean norm of `a²`, i.e. `sqrt(Σ a_i⁴)`.
    pub fn squares_norm(&self) -> f64 {
        self.coords
            .iter()
            .map(|&x| {
                let s = (x as f64) * (x as f64);
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `a²·x` in floating point.
    pub fn dot_squares(&self, x: &[f64]) -> f64 {
        self.coords
            .iter()
            .zip(x)
            .map(|(&a, &xi)| (a as f64) * (a as f64) * xi)
            .sum()
    }

    pub fn gcd(&self) -> u64 {
        self.coords.iter().fold(0u64, |g, &x| g.gcd(&x))
    }
}

impl TryFrom<Vec<u64>> for CoeffVector {
    type Error = LatticeError;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CoeffVector> for Vec<u64> {
    fn from(v: CoeffVector) -> Self {
        v.coords
    }
}

impl fmt::Debug for CoeffVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CoeffVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// The gcd and `a_1/a_2` ratio conditions used to thin out the vector family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveConfig {
    pub require_coprime: bool,
    ratio_lo: Ratio<u64>,
    ratio_hi: Ratio<u64>,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            require_coprime: true,
            ratio_lo: Ratio::new(1, 2),
            ratio_hi: Ratio::new(2, 1),
        }
    }
}

impl SieveConfig {
    pub fn new(require_coprime: bool, lo: Ratio<u64>, hi: Ratio<u64>) -> Result<Self> {
        let one = Ratio::from_integer(1);
        if *lo.numer() == 0 || lo > one || hi < one {
            return Err(LatticeError::InvalidRatioBounds { lo, hi });
        }
        Ok(Self {
            require_coprime,
            ratio_lo: lo,
            ratio_hi: hi,
        })
    }

    pub fn ratio_bounds(&self) -> (Ratio<u64>, Ratio<u64>) {
        (self.ratio_lo, self.ratio_hi)
    }

    /// `lo ≤ a1/a2 ≤ hi`, compared by cross multiplication. `a2 = 0` fails.
    fn ratio_ok(&self, a1: u64, a2: u64) -> bool {
        if a2 == 0 {
            return false;
        }
        let (a1, a2) = (a1 as u128, a2 as u128);
        let (lo_n, lo_d) = (*self.ratio_lo.numer() as u128, *self.ratio_lo.denom() as u128);
        let (hi_n, hi_d) = (*self.ratio_hi.numer() as u128, *self.ratio_hi.denom() as u128);
        lo_n * a2 <= a1 * lo_d && a1 * hi_d <= hi_n * a2
    }

    /// Range of `a2` values compatible with the ratio test for a given `a1`.
    fn second_coord_range(&self, a1: u64) -> (u64, u64) {
        // a2 >= a1 / hi  and  a2 <= a1 / lo
        let (lo_n, lo_d) = (*self.ratio_lo.numer() as u128, *self.ratio_lo.denom() as u128);
        let (hi_n, hi_d) = (*self.ratio_hi.numer() as u128, *self.ratio_hi.denom() as u128);
        let a1 = a1 as u128;
        let min = (a1 * hi_d).div_ceil(hi_n).max(1);
        let max = (a1 * lo_d) / lo_n;
        (
            min.min(u64::MAX as u128) as u64,
            max.min(u64::MAX as u128) as u64,
        )
    }
}

pub fn passes_sieve(v: &CoeffVector, cfg: &SieveConfig) -> Result<bool> {
    if v.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    if cfg.require_coprime && v.gcd() != 1 {
        return Ok(false);
    }
    Ok(cfg.ratio_ok(v.coords[0], v.coords[1]))
}

fn check_height_budget(h_max: u64, n: usize) -> Result<()> {
    if h_max > MAX_HEIGHT {
        return Err(LatticeError::Overflow("h_max exceeds the supported height"));
    }
    h_max
        .checked_mul(h_max)
        .and_then(|s| s.checked_mul(n as u64))
        .map(|_| ())
        .ok_or(LatticeError::Overflow("h_max² · n"))
}

/// Lexicographic stream of sieved vectors with `h_min ≤ h_a ≤ h_max`.
///
/// The second coordinate is only scanned over the range the ratio test
/// allows, so the stream costs roughly the number of candidates it could
/// yield rather than `(h_max + 1)^n`.
pub fn enumerate_sieved(
    h_min: u64,
    h_max: u64,
    cfg: &SieveConfig,
    n: usize,
) -> Result<SievedVectors> {
    if n < 2 {
        return Err(LatticeError::DimensionTooSmall(n));
    }
    if h_min < 1 || h_min > h_max {
        return Err(LatticeError::InvalidRange { h_min, h_max });
    }
    check_height_budget(h_max, n)?;
    Ok(SievedVectors {
        cfg: cfg.clone(),
        h_min,
        h_max,
        current: None,
        n,
        finished: false,
    })
}

#[derive(Clone, Debug)]
pub struct SievedVectors {
    cfg: SieveConfig,
    h_min: u64,
    h_max: u64,
    n: usize,
    current: Option<Vec<u64>>,
    finished: bool,
}

impl SievedVectors {
    fn bounds(&self, i: usize, coords: &[u64]) -> (u64, u64) {
        match i {
            0 => (1, self.h_max),
            1 => {
                let (lo, hi) = self.cfg.second_coord_range(coords[0]);
                (lo, hi.min(self.h_max))
            }
            _ => (0, self.h_max),
        }
    }

    /// Fill positions `from..n` with their lower bounds. Returns false if some
    /// position has an empty range.
    fn reset_tail(&self, coords: &mut [u64], from: usize) -> bool {
        for i in from..self.n {
            let (lo, hi) = self.bounds(i, coords);
            if lo > hi {
                return false;
            }
            coords[i] = lo;
        }
        true
    }

    /// Advance the odometer to the next candidate in lexicographic order.
    fn step(&self, coords: &mut [u64]) -> bool {
        let mut i = self.n;
        while i > 0 {
            i -= 1;
            let (_, hi) = self.bounds(i, coords);
            if coords[i] < hi {
                coords[i] += 1;
                if self.reset_tail(coords, i + 1) {
                    return true;
                }
                // Empty range further right: keep bumping this position.
                i += 1;
                continue;
            }
        }
        false
    }

    fn accept(&self, coords: &[u64]) -> bool {
        let h = coords.iter().copied().max().unwrap_or(0);
        if h < self.h_min || h > self.h_max {
            return false;
        }
        if self.cfg.require_coprime && coords.iter().fold(0u64, |g, &x| g.gcd(&x)) != 1 {
            return false;
        }
        self.cfg.ratio_ok(coords[0], coords[1])
    }
}

impl Iterator for SievedVectors {
    type Item = CoeffVector;

    fn next(&mut self) -> Option<CoeffVector> {
        if self.finished {
            return None;
        }
        let mut coords = match self.current.take() {
            None => {
                let mut c = vec![0; self.n];
                if !self.reset_tail(&mut c, 0) && !self.step(&mut c) {
                    self.finished = true;
                    return None;
                }
                c
            }
            Some(mut c) => {
                if !self.step(&mut c) {
                    self.finished = true;
                    return None;
                }
                c
            }
        };
        loop {
            if self.accept(&coords) {
                self.current = Some(coords.clone());
                return Some(CoeffVector::new(coords).expect("n >= 2 checked on construction"));
            }
            if !self.step(&mut coords) {
                self.finished = true;
                return None;
            }
        }
    }
}

/// `N_k`: number of sieved vectors with `2^k ≤ h_a < 2^{k+1}`, by enumeration.
pub fn count_sieved_dyadic(k: u32, n: usize) -> Result<u64> {
    if k >= 31 {
        return Err(LatticeError::Overflow("2^(k+1)"));
    }
    let lo = 1u64 << k;
    let hi = (1u64 << (k + 1)) - 1;
    Ok(enumerate_sieved(lo, hi, &SieveConfig::default(), n)?.count() as u64)
}

/// Euler's totient for `0..=q_max` by the classical prime sieve.
pub fn totient_table(q_max: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=q_max as u64).collect();
    for p in 2..=q_max {
        if phi[p] == p as u64 {
            for m in (p..=q_max).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    phi
}

/// `Σ_{1≤q≤Q} φ(q)`, exact.
pub fn totient_summatory(q: u64) -> Result<u128> {
    if q == 0 {
        return Ok(0);
    }
    let q = usize::try_from(q).map_err(|_| LatticeError::Overflow("Q"))?;
    totient_table(q)[1..]
        .iter()
        .try_fold(0u128, |acc, &p| acc.checked_add(p as u128))
        .ok_or(LatticeError::Overflow("totient sum"))
}

fn dyadic_table(k: u32) -> Result<Vec<u64>> {
    if k >= 31 {
        return Err(LatticeError::Overflow("2^(k+1)"));
    }
    Ok(totient_table(1usize << (k + 1)))
}

/// Exact totient form of `N_k` for `n = 2`.
///
/// For `a ≥ 3` the admissible partners `a/2 ≤ b < a` coprime to `a` are
/// exactly half the reduced residues mod `a`, so each such `a` contributes
/// `φ(a)` once both orientations are counted. The two small exceptions are
/// the diagonal vector `(1,1)` (k = 0, already `φ(1) = 1`) and `a = 2`, where
/// `b = 1 = a/2` gives two vectors instead of `φ(2) = 1`.
pub fn dyadic_totient_count(k: u32) -> Result<u64> {
    let phi = dyadic_table(k)?;
    let lo = 1usize << k;
    let hi = 1usize << (k + 1);
    let s: u64 = phi[lo..hi].iter().sum();
    Ok(if k == 1 { s + 1 } else { s })
}

/// `2·Σ_{2^k ≤ a < 2^{k+1}} (φ(a) − φ(⌊a/2⌋))`.
///
/// Agrees with `N_k` to leading order `9/π²·4^k` but not term by term.
pub fn totient_difference_count(k: u32) -> Result<i64> {
    let phi = dyadic_table(k)?;
    let lo = 1usize << k;
    let hi = 1usize << (k + 1);
    let s: i64 = (lo..hi).map(|a| phi[a] as i64 - phi[a / 2] as i64).sum();
    Ok(2 * s)
}

/// Angle data between the squared vectors of two coefficient vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub first: CoeffVector,
    pub second: CoeffVector,
    /// Sine of the smaller angle between `first²` and `second²`.
    pub sin_alpha: f64,
    /// The 2×2 minor of the squared vectors with the largest absolute value.
    pub det_squares: i128,
    /// Coordinates `(i, j)` of that minor.
    pub minor: (usize, usize),
}

impl AnglePair {
    /// `(h, h')` with `h ≥ h'`.
    pub fn ordered_heights(&self) -> (u64, u64) {
        let (a, b) = (self.first.height(), self.second.height());
        (a.max(b), a.min(b))
    }

    /// The two factors of `det_squares`:
    /// `det((a_i,a_j),(b_i,b_j))` and `det((a_i,-a_j),(b_i,b_j))`.
    pub fn det_factors(&self) -> (i128, i128) {
        let (i, j) = self.minor;
        let (a, b) = (self.first.coords(), self.second.coords());
        let (ai, aj, bi, bj) = (a[i] as i128, a[j] as i128, b[i] as i128, b[j] as i128);
        (ai * bj - aj * bi, ai * bj + aj * bi)
    }
}

/// `det((a, b), (c, d)) = a·d − b·c` with overflow reported.
pub fn det2(a: i128, b: i128, c: i128, d: i128) -> Result<i128> {
    let ad = a.checked_mul(d).ok_or(LatticeError::Overflow("2x2 determinant"))?;
    let bc = b.checked_mul(c).ok_or(LatticeError::Overflow("2x2 determinant"))?;
    ad.checked_sub(bc).ok_or(LatticeError::Overflow("2x2 determinant"))
}

pub fn angle_between(v: &CoeffVector, w: &CoeffVector) -> Result<AnglePair> {
    if v.dim() != w.dim() {
        return Err(LatticeError::DimensionMismatch {
            left: v.dim(),
            right: w.dim(),
        });
    }
    if v.is_zero() || w.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    let vs = v.squares();
    let ws = w.squares();
    let n = v.dim();
    let mut best: Option<(i128, (usize, usize))> = None;
    let mut wedge_sq = 0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let m = det2(vs[i] as i128, vs[j] as i128, ws[i] as i128, ws[j] as i128)?;
            let mf = m as f64;
            wedge_sq += mf * mf;
            if best.is_none_or(|(b, _)| m.unsigned_abs() > b.unsigned_abs()) {
                best = Some((m, (i, j)));
            }
        }
    }
    let best = best.expect("n >= 2");
    let sin = (wedge_sq.sqrt() / (v.squares_norm() * w.squares_norm())).clamp(0.0, 1.0);
    Ok(AnglePair {
        first: v.clone(),
        second: w.clone(),
        sin_alpha: if best.0 == 0 { 0.0 } else { sin },
        det_squares: best.0,
        minor: best.1,
    })
}

/// Frozen lower bound for `h·h′·sin α` over distinct sieved pairs in the
/// plane, set from an exhaustive scan of all heights up to 128 (observed
/// minimum 0.944).
pub const ANGLE_FLOOR: f64 = 0.9;

/// Size class of the angle between two strip families relative to a ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AngleClass {
    Big,
    ModeratelySmall,
    UltraSmall,
}

/// Classify against a ball of radius `r`: `Big` iff `sin α ≥ 1/(r h)`,
/// otherwise `UltraSmall` iff `sin α < 1/(r² h h')`, else `ModeratelySmall`.
pub fn classify_angle(pair: &AnglePair, r: f64) -> AngleClass {
    let (h, h_prime) = pair.ordered_heights();
    classify_sin(pair.sin_alpha, r, h, h_prime)
}

pub fn classify_sin(sin_alpha: f64, r: f64, h: u64, h_prime: u64) -> AngleClass {
    let (h, hp) = (h.max(h_prime) as f64, h.min(h_prime) as f64);
    if sin_alpha >= 1.0 / (r * h) {
        AngleClass::Big
    } else if sin_alpha < 1.0 / (r * r * h * hp) {
        AngleClass::UltraSmall
    } else {
        AngleClass::ModeratelySmall
    }
}
