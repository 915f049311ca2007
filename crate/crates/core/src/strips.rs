//! Approximating functions, strips `σ_a(c)` and the regions they are measured in.
//!
//! A strip is the open slab `{x ∈ [0,1]^n : |a²·x − c²| < ψ(h_a)}` around the
//! hyperplane `a²·x = c²`. The set `σ_a` is the union of these slabs over all
//! `c ≥ 0`.

use std::io::Read;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CoeffVector, LatticeError};

#[derive(Debug, Error)]
pub enum StripError {
    #[error("ψ is only defined for heights h >= 1")]
    ZeroHeight,
    #[error("invalid approximating function: {0}")]
    InvalidFunction(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("point {0:?} is outside the unit cube")]
    PointOutsideCube(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the zero vector does not define a strip")]
    ZeroVector,
    #[error("lower order needs 4 <= r_max <= 62, got {0}")]
    InvalidOrderWindow(u32),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("failed to read ψ table: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, StripError>;

/// Tabulated ψ with right-continuous step interpolation.
///
/// Beyond the last row the table continues as a power law through the last
/// two rows, so a finite table still describes a function tending to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiTable {
    rows: Vec<(u64, f64)>,
    tail_exponent: f64,
}

impl PsiTable {
    pub fn new(rows: Vec<(u64, f64)>) -> Result<Self> {
        let bad = |m: &str| Err(StripError::InvalidFunction(m.to_string()));
        if rows.len() < 2 {
            return bad("a ψ table needs at least two rows");
        }
        if rows[0].0 == 0 {
            return bad("table heights start at 1");
        }
        for w in rows.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("table heights must be strictly increasing");
            }
            if w[1].1 > w[0].1 {
                return bad("ψ must be non-increasing");
            }
        }
        if rows.iter().any(|&(_, p)| !(p.is_finite() && p > 0.0)) {
            return bad("ψ values must be positive and finite");
        }
        let (h1, p1) = rows[rows.len() - 2];
        let (h2, p2) = rows[rows.len() - 1];
        if p2 >= p1 {
            return bad("the last two rows must strictly decrease so that ψ(h) → 0");
        }
        let tail_exponent = (p1 / p2).ln() / (h2 as f64 / h1 as f64).ln();
        Ok(Self {
            rows,
            tail_exponent,
        })
    }

    pub fn rows(&self) -> &[(u64, f64)] {
        &self.rows
    }

    fn at(&self, h: u64) -> f64 {
        let (h_last, p_last) = *self.rows.last().expect("validated non-empty");
        if h > h_last {
            return p_last * (h as f64 / h_last as f64).powf(-self.tail_exponent);
        }
        match self.rows.partition_point(|&(hi, _)| hi <= h) {
            0 => self.rows[0].1,
            i => self.rows[i - 1].1,
        }
    }
}

/// The approximating function ψ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxFunction {
    /// `ψ(h) = h^{-v}`.
    PowerLaw { v: f64 },
    Table(PsiTable),
}

impl ApproxFunction {
    pub fn power_law(v: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(StripError::InvalidFunction(format!(
                "power-law exponent must be positive, got {v}"
            )));
        }
        Ok(Self::PowerLaw { v })
    }

    pub fn table(rows: Vec<(u64, f64)>) -> Result<Self> {
        Ok(Self::Table(PsiTable::new(rows)?))
    }

    /// Load a two-column `h,psi` CSV. A header row is optional.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(StripError::InvalidFunction(format!(
                    "row {} has {} columns, expected 2",
                    i + 1,
                    rec.len()
                )));
            }
            match (rec[0].parse::<u64>(), rec[1].parse::<f64>()) {
                (Ok(h), Ok(p)) => rows.push((h, p)),
                _ if i == 0 => continue,
                _ => {
                    return Err(StripError::InvalidFunction(format!(
                        "row {} is not numeric: {:?}",
                        i + 1,
                        rec
                    )))
                }
            }
        }
        Self::table(rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn eval(&self, h: u64) -> Result<f64> {
        if h == 0 {
            return Err(StripError::ZeroHeight);
        }
        Ok(self.at(h))
    }

    /// ψ(h) for `h ≥ 1`; callers guarantee the height is positive.
    pub(crate) fn at(&self, h: u64) -> f64 {
        debug_assert!(h >= 1);
        match self {
            Self::PowerLaw { v } => (h as f64).powf(-v),
            Self::Table(t) => t.at(h),
        }
    }

    /// Finite-window proxy for the lower order `λ_ψ`; exact for power laws.
    pub fn lower_order(&self, r_max: u32) -> Result<f64> {
        match self {
            Self::PowerLaw { v } => {
                check_order_window(r_max)?;
                Ok(*v)
            }
            Self::Table(t) => lower_order_of(|h| t.at(h), r_max),
        }
    }
}

fn check_order_window(r_max: u32) -> Result<()> {
    if !(4..=62).contains(&r_max) {
        return Err(StripError::InvalidOrderWindow(r_max));
    }
    Ok(())
}

/// `min_{r ∈ [⌈r_max/2⌉, r_max]} −log ψ(2^r) / (r log 2)` for any positive ψ.
pub fn lower_order_of(psi: impl Fn(u64) -> f64, r_max: u32) -> Result<f64> {
    check_order_window(r_max)?;
    Ok((r_max.div_ceil(2)..=r_max)
        .map(|r| -psi(1u64 << r).log2() / r as f64)
        .fold(f64::INFINITY, f64::min))
}

/// A single slab `|a²·x − c²| < half_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    a: CoeffVector,
    c: u64,
    half_width: f64,
}

impl Strip {
    pub fn new(a: CoeffVector, c: u64, psi: &ApproxFunction) -> Result<Self> {
        if a.is_zero() {
            return Err(StripError::ZeroVector);
        }
        let hw = psi.at(a.height());
        Self::with_half_width(a, c, hw)
    }

    pub fn with_half_width(a: CoeffVector, c: u64, half_width: f64) -> Result<Self> {
        if a.is_zero() {
            return Err(StripError::ZeroVector);
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(StripError::InvalidFunction(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        Ok(Self { a, c, half_width })
    }

    pub fn a(&self) -> &CoeffVector {
        &self.a
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Euclidean distance between the two bounding hyperplanes.
    pub fn thickness(&self) -> f64 {
        2.0 * self.half_width / self.a.squares_norm()
    }

    /// Strict membership `|a²·x − c²| < ψ`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let c2 = (self.c as f64) * (self.c as f64);
        (self.a.dot_squares(x) - c2).abs() < self.half_width
    }

    /// Membership decided in exact rational arithmetic.
    pub fn contains_rational(&self, x: &[BigRational]) -> bool {
        let t: BigRational = self
            .a
            .coords()
            .iter()
            .zip(x)
            .map(|(&a, xi)| xi * BigInt::from(a) * BigInt::from(a))
            .fold(BigRational::zero(), |acc, v| acc + v);
        let c2 = BigRational::from_integer(BigInt::from(self.c) * BigInt::from(self.c));
        let hw = BigRational::from_float(self.half_width).expect("finite half width");
        (t - c2).abs() < hw
    }
}

/// A ball inside the shaved cube `[ε, 1]^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
    eps: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64, eps: f64) -> Result<Self> {
        let bad = |m: String| Err(StripError::InvalidRegion(m));
        if center.len() < 2 {
            return bad(format!("ball dimension must be >= 2, got {}", center.len()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return bad(format!("need 0 < ε < 1, got {eps}"));
        }
        if !(radius > 0.0 && radius < 1.0) {
            return bad(format!("need 0 < r < 1, got {radius}"));
        }
        if center.iter().any(|&c| c - radius < eps || c + radius > 1.0) {
            return bad(format!(
                "ball (center {center:?}, r = {radius}) is not inside [{eps}, 1]^n"
            ));
        }
        Ok(Self {
            center,
            radius,
            eps,
        })
    }

    /// Center `(1/2, ..., 1/2)`, radius `0.2`, `ε = 0.25`.
    pub fn standard(n: usize) -> Self {
        Self::new(vec![0.5; n], 0.2, 0.25).expect("standard ball is valid")
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    // V_0 = 1, V_1 = 2, V_n = V_{n-2} · 2π / n
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    UnitCube { n: usize },
    ShavedCube { eps: f64, n: usize },
    Ball(Ball),
}

impl Region {
    pub fn shaved(eps: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(StripError::InvalidRegion(format!("need 0 < ε < 1, got {eps}")));
        }
        if n < 2 {
            return Err(StripError::InvalidRegion(format!("dimension must be >= 2, got {n}")));
        }
        Ok(Self::ShavedCube { eps, n })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UnitCube { n } | Self::ShavedCube { n, .. } => *n,
            Self::Ball(b) => b.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Self::UnitCube { .. } => 1.0,
            Self::ShavedCube { eps, n } => (1.0 - eps).powi(*n as i32),
            Self::Ball(b) => b.volume(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::UnitCube { .. } => x.iter().all(|&v| (0.0..=1.0).contains(&v)),
            Self::ShavedCube { eps, .. } => x.iter().all(|&v| (*eps..=1.0).contains(&v)),
            Self::Ball(b) => {
                let d2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 < b.radius * b.radius
            }
        }
    }

    /// Axis-aligned bounding box of the region along one axis.
    pub fn axis_bounds(&self, axis: usize) -> (f64, f64) {
        match self {
            Self::UnitCube { .. } => (0.0, 1.0),
            Self::ShavedCube { eps, .. } => (*eps, 1.0),
            Self::Ball(b) => (b.center[axis] - b.radius, b.center[axis] + b.radius),
        }
    }

    /// Cross-section along axis 0 at fixed remaining coordinates `rest`.
    pub fn chord(&self, rest: &[f64]) -> Option<(f64, f64)> {
        match self {
            Self::UnitCube { .. } => rest
                .iter()
                .all(|&v| (0.0..=1.0).contains(&v))
                .then_some((0.0, 1.0)),
            Self::ShavedCube { eps, .. } => rest
                .iter()
                .all(|&v| (*eps..=1.0).contains(&v))
                .then_some((*eps, 1.0)),
            Self::Ball(b) => {
                let d2: f64 = rest
                    .iter()
                    .zip(&b.center[1..])
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum();
                let r2 = b.radius * b.radius;
                (d2 < r2).then(|| {
                    let half = (r2 - d2).sqrt();
                    (b.center[0] - half, b.center[0] + half)
                })
            }
        }
    }
}

/// Closed interval of `c` for which the hyperplane `a²·x = c²` meets the ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CInterval {
    pub lo: f64,
    pub hi: f64,
    /// Length `ξ = hi − lo`.
    pub xi: f64,
}

impl CInterval {
    /// Integers `c` that can label a strip meeting the ball, allowing the two
    /// extra values next to the line-hitting range.
    pub fn widened(&self) -> std::ops::RangeInclusive<u64> {
        let lo = (self.lo.floor() as i64 - 2).max(0) as u64;
        let hi = self.hi.ceil() as u64 + 2;
        lo..=hi
    }
}

/// `[√(a²·x₀ − r‖a²‖), √(a²·x₀ + r‖a²‖)]`.
///
/// The range of `a²·x` over a ball is the same in every dimension (project
/// onto the normal `a²`), so one formula serves all `n ≥ 2`.
pub fn admissible_c_interval(a: &CoeffVector, ball: &Ball) -> Result<CInterval> {
    if a.dim() != ball.dim() {
        return Err(StripError::DimensionMismatch {
            expected: ball.dim(),
            got: a.dim(),
        });
    }
    if a.is_zero() {
        return Err(StripError::ZeroVector);
    }
    let t0 = a.dot_squares(ball.center());
    let spread = ball.radius() * a.squares_norm();
    if t0 - spread < 0.0 {
        return Err(StripError::InvalidRegion(
            "a²·x goes negative on the ball; the ball must lie in [ε, 1]^n".into(),
        ));
    }
    let lo = (t0 - spread).sqrt();
    let hi = (t0 + spread).sqrt();
    Ok(CInterval { lo, hi, xi: hi - lo })
}

/// Integers `c ≥ 0` whose square could lie in `(t − ψ, t + ψ)`. May include a
/// value or two on each side that fail the strict test.
pub fn squares_near(t: f64, psi: f64) -> std::ops::RangeInclusive<u64> {
    let lo = (t - psi).max(0.0).sqrt().floor() as u64;
    let hi = (t + psi).max(0.0).sqrt().ceil() as u64;
    lo.saturating_sub(1)..=hi + 1
}

/// A pair `(a, c)` with `|a²·x − c²| < ψ(h_a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub a: CoeffVector,
    pub c: u64,
    /// `|a²·x − c²|`.
    pub error: f64,
}

/// All `(a, c)` with `0 < h_a ≤ h_max` and `|a²·x − c²| < ψ(h_a)`, ordered by
/// height, then `a` lexicographically, then `c`.
pub fn solutions_at_point(x: &[f64], psi: &ApproxFunction, h_max: u64) -> Result<Vec<Solution>> {
    let n = x.len();
    if n < 2 {
        return Err(StripError::DimensionMismatch { expected: 2, got: n });
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(StripError::PointOutsideCube(x.to_vec()));
    }
    if h_max == 0 || h_max > crate::lattice::MAX_HEIGHT {
        return Err(StripError::Lattice(LatticeError::InvalidRange { h_min: 1, h_max }));
    }
    let psi_by_h: Vec<f64> = (0..=h_max).map(|h| if h == 0 { 0.0 } else { psi.at(h) }).collect();
    let mut out = Vec::new();
    let mut coords = vec![0u64; n];
    loop {
        // odometer over [0, h_max]^n
        let mut i = n;
        loop {
            if i == 0 {
                out.sort_by(|a: &Solution, b: &Solution| {
                    (a.a.height(), &a.a, a.c).cmp(&(b.a.height(), &b.a, b.c))
                });
                return Ok(out);
            }
            i -= 1;
            if coords[i] < h_max {
                coords[i] += 1;
                coords[i + 1..].iter_mut().for_each(|c| *c = 0);
                break;
            }
        }
        let a = CoeffVector::new(coords.clone())?;
        let hw = psi_by_h[a.height() as usize];
        let t = a.dot_squares(x);
        for c in squares_near(t, hw) {
            let err = (t - (c as f64) * (c as f64)).abs();
            if err < hw {
                out.push(Solution {
                    a: a.clone(),
                    c,
                    error: err,
                });
            }
        }
    }
}
