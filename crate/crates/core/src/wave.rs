//! Fourier treatment of the periodic wave equation `u_tt − Δu = f`.
//!
//! With `u = Σ u_{a,b} e^{2πi(Σ a_i x_i/α_i + b t/β)}` the operator acts on a
//! mode by the factor `(4π²/β²)·D(a,b)` where `D = Σ a_i² δ_i − b²` and
//! `δ_i = β²/α_i²`. Periods are kept as exact rationals (a float input is
//! taken at its exact binary value), so `D` is always evaluated exactly and
//! rounded once.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resonant mode a = {a:?}, b = {b}: D = 0")]
    ResonantMode { a: Vec<i64>, b: i64 },
    #[error("near resonance at a = {a:?}, b = {b}: |D| = {d:e} is below the threshold")]
    NearResonance { a: Vec<i64>, b: i64, d: f64 },
    #[error("the (0,0) mode of the source must vanish")]
    NonZeroMeanSource,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WaveError>;

/// A positive real given either as a float or as an exact fraction.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Float(f64),
    Exact(BigRational),
}

impl Quantity {
    pub fn ratio(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(WaveError::InvalidParameter("zero denominator".into()));
        }
        Ok(Self::Exact(BigRational::new(p.into(), q.into())))
    }

    /// The exact value; a float is taken at its binary value.
    pub fn exact(&self) -> Result<BigRational> {
        match self {
            Self::Exact(r) => Ok(r.clone()),
            Self::Float(x) => BigRational::from_float(*x)
                .ok_or_else(|| WaveError::InvalidParameter(format!("{x} is not finite"))),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Float(x) => *x,
            Self::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl FromStr for Quantity {
    type Err = WaveError;

    /// `p/q` and plain integers are exact; anything else parses as a float.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || WaveError::InvalidParameter(format!("cannot parse {s:?} as a number"));
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Self::Exact(BigRational::new(p, q)));
        }
        if let Ok(i) = s.parse::<BigInt>() {
            return Ok(Self::Exact(BigRational::from_integer(i)));
        }
        s.parse::<f64>().map(Self::Float).map_err(|_| bad())
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Float(x) => write!(f, "{x:?}"),
            Self::Exact(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QuantityRepr {
    Exact { num: i64, den: i64 },
    Float(f64),
}

impl Serialize for Quantity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Float(x) => QuantityRepr::Float(*x).serialize(s),
            Self::Exact(r) => match (r.numer().to_i64(), r.denom().to_i64()) {
                (Some(num), Some(den)) => QuantityRepr::Exact { num, den }.serialize(s),
                _ => s.serialize_str(&r.to_string()),
            },
        }
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match QuantityRepr::deserialize(d)? {
            QuantityRepr::Float(x) => Ok(Self::Float(x)),
            QuantityRepr::Exact { num, den } => {
                Self::ratio(num, den).map_err(serde::de::Error::custom)
            }
        }
    }
}

fn positive(q: &Quantity, what: &str) -> Result<BigRational> {
    let v = q.exact()?;
    if !v.is_positive() {
        return Err(WaveError::InvalidParameter(format!("{what} must be positive, got {q}")));
    }
    Ok(v)
}

/// Spatial periods `α_i` and temporal period `β`, held through their exact
/// squares.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveParams {
    alpha_sq: Vec<BigRational>,
    beta_sq: BigRational,
    exact: bool,
}

impl WaveParams {
    pub fn from_periods(alphas: &[Quantity], beta: &Quantity) -> Result<Self> {
        if alphas.is_empty() {
            return Err(WaveError::InvalidParameter("need at least one spatial period".into()));
        }
        let alpha_sq = alphas
            .iter()
            .map(|a| positive(a, "α").map(|v| &v * &v))
            .collect::<Result<Vec<_>>>()?;
        let b = positive(beta, "β")?;
        Ok(Self {
            alpha_sq,
            beta_sq: &b * &b,
            exact: beta.is_exact() && alphas.iter().all(Quantity::is_exact),
        })
    }

    /// Parameters with the given `δ_i` and `β`, i.e. `α_i² = β²/δ_i`.
    pub fn from_deltas(deltas: &[Quantity], beta: &Quantity) -> Result<Self> {
        if deltas.is_empty() {
            return Err(WaveError::InvalidParameter("need at least one δ".into()));
        }
        let b = positive(beta, "β")?;
        let beta_sq = &b * &b;
        let alpha_sq = deltas
            .iter()
            .map(|d| positive(d, "δ").map(|v| &beta_sq / v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            alpha_sq,
            beta_sq,
            exact: beta.is_exact() && deltas.iter().all(Quantity::is_exact),
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha_sq.len()
    }

    /// All inputs were exact fractions.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `δ_i = β²/α_i²`, computed on each call.
    pub fn deltas(&self) -> Vec<BigRational> {
        self.alpha_sq.iter().map(|a| &self.beta_sq / a).collect()
    }

    pub fn deltas_f64(&self) -> Vec<f64> {
        self.deltas().iter().map(|d| d.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn alpha_sq_f64(&self) -> Vec<f64> {
        self.alpha_sq.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn beta_sq_f64(&self) -> f64 {
        self.beta_sq.to_f64().unwrap_or(f64::NAN)
    }

    /// Same `δ`, all periods multiplied by `λ`.
    pub fn scaled(&self, lambda: &Quantity) -> Result<Self> {
        let l = positive(lambda, "λ")?;
        let l2 = &l * &l;
        Ok(Self {
            alpha_sq: self.alpha_sq.iter().map(|a| a * &l2).collect(),
            beta_sq: &self.beta_sq * &l2,
            exact: self.exact && lambda.is_exact(),
        })
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(WaveError::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

/// JSON form of [`WaveParams`]: either periods or `δ` values, plus `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<Quantity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<Quantity>>,
    pub beta: Quantity,
}

impl WaveParamsConfig {
    pub fn build(&self) -> Result<WaveParams> {
        match (&self.alphas, &self.deltas) {
            (Some(a), None) => WaveParams::from_periods(a, &self.beta),
            (None, Some(d)) => WaveParams::from_deltas(d, &self.beta),
            _ => Err(WaveError::InvalidParameter(
                "give exactly one of alphas and deltas".into(),
            )),
        }
    }
}

fn square(x: i64) -> BigInt {
    let x = BigInt::from(x);
    &x * &x
}

fn sum_squares(a: &[i64], deltas: &[BigRational]) -> BigRational {
    a.iter()
        .zip(deltas)
        .fold(BigRational::zero(), |acc, (&ai, d)| acc + d * square(ai))
}

/// `D(a,b) = Σ a_i² δ_i − b²` exactly.
pub fn denominator_exact(params: &WaveParams, a: &[i64], b: i64) -> Result<BigRational> {
    params.check(a.len())?;
    Ok(sum_squares(a, &params.deltas()) - BigRational::from_integer(square(b)))
}

/// `D(a,b)` rounded once from its exact value.
pub fn denominator(params: &WaveParams, a: &[i64], b: i64) -> Result<f64> {
    Ok(to_f64(&denominator_exact(params, a, b)?))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Mode label `(a, b)`, ordered by height, then `a` lexicographically, then `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mode {
    pub a: Vec<i64>,
    pub b: i64,
}

impl Mode {
    pub fn new(a: Vec<i64>, b: i64) -> Self {
        Self { a, b }
    }

    pub fn height(&self) -> u64 {
        self.a.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn negated(&self) -> Self {
        Self {
            a: self.a.iter().map(|x| -x).collect(),
            b: -self.b,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.b == 0 && self.a.iter().all(|&x| x == 0)
    }
}

impl Ord for Mode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.height(), &self.a, self.b).cmp(&(other.height(), &other.a, other.b))
    }
}

impl PartialOrd for Mode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse Fourier coefficients on `Z^n × Z`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FourierField {
    n: usize,
    modes: BTreeMap<Mode, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct ModeLine {
    a: Vec<i64>,
    b: i64,
    re: f64,
    im: f64,
}

impl FourierField {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            modes: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Set the coefficient of `(a, b)`, replacing any previous value.
    pub fn insert(&mut self, a: Vec<i64>, b: i64, value: Complex64) -> Result<()> {
        if a.len() != self.n {
            return Err(WaveError::DimensionMismatch {
                expected: self.n,
                got: a.len(),
            });
        }
        self.modes.insert(Mode { a, b }, value);
        Ok(())
    }

    pub fn get(&self, a: &[i64], b: i64) -> Option<Complex64> {
        self.modes
            .get(&Mode {
                a: a.to_vec(),
                b,
            })
            .copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mode, &Complex64)> {
        self.modes.iter()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest height among stored modes.
    pub fn band_limit(&self) -> u64 {
        self.modes.keys().map(Mode::height).max().unwrap_or(0)
    }

    /// Every coefficient at `(−a,−b)` is the exact conjugate of the one at
    /// `(a,b)`, compared bit for bit.
    pub fn is_hermitian(&self) -> bool {
        self.modes.iter().all(|(m, v)| match self.modes.get(&m.negated()) {
            Some(w) => w.re.to_bits() == v.re.to_bits() && w.im.to_bits() == (-v.im).to_bits(),
            None => false,
        })
    }

    /// `Σ |c|` over the coefficients, a bound on the field's magnitude.
    pub fn l1_norm(&self) -> f64 {
        self.modes.values().map(|c| c.norm()).sum()
    }

    fn map_modes(&self, mut f: impl FnMut(&Mode, Complex64) -> Result<Complex64>) -> Result<Self> {
        let mut out = Self::new(self.n);
        for (m, &v) in &self.modes {
            out.modes.insert(m.clone(), f(m, v)?);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.n != self.n {
            return Err(WaveError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = self.clone();
        for (m, v) in &other.modes {
            *out.modes.entry(m.clone()).or_insert(Complex64::zero()) += v;
        }
        Ok(out)
    }

    /// One JSON object per line: `{"a":[..],"b":..,"re":..,"im":..}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (m, v) in &self.modes {
            let line = ModeLine {
                a: m.a.clone(),
                b: m.b,
                re: v.re,
                im: v.im,
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the JSON-lines form; blank lines and lines starting with `#`
    /// are skipped. The dimension comes from the first mode unless given.
    pub fn read_jsonl<R: BufRead>(r: R, n: Option<usize>) -> Result<Self> {
        let mut field: Option<Self> = n.map(Self::new);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let m: ModeLine = serde_json::from_str(t).map_err(|e| WaveError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let f = field.get_or_insert_with(|| Self::new(m.a.len()));
            f.insert(m.a, m.b, Complex64::new(m.re, m.im))
                .map_err(|e| WaveError::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
        }
        field.ok_or_else(|| WaveError::Parse {
            line: 0,
            msg: "empty field and no dimension given".into(),
        })
    }
}

/// Default `min_denominator` for [`solve_wave`].
pub const DEFAULT_MIN_DENOMINATOR: f64 = 1e-8;

fn four_pi_sq() -> f64 {
    4.0 * std::f64::consts::PI * std::f64::consts::PI
}

/// `u_{a,b} = (β²/4π²)·f_{a,b}/D(a,b)`, with `u_{0,0} = 0`.
pub fn solve_wave(f: &FourierField, params: &WaveParams, min_denominator: f64) -> Result<FourierField> {
    params.check(f.dim())?;
    if !(min_denominator >= 0.0) {
        return Err(WaveError::InvalidParameter("min_denominator must be >= 0".into()));
    }
    let deltas = params.deltas();
    let prefactor = params.beta_sq_f64() / four_pi_sq();
    f.map_modes(|m, v| {
        if m.is_zero() {
            if v != Complex64::zero() {
                return Err(WaveError::NonZeroMeanSource);
            }
            return Ok(Complex64::zero());
        }
        let d = sum_squares(&m.a, &deltas) - BigRational::from_integer(square(m.b));
        if v == Complex64::zero() {
            return Ok(Complex64::zero());
        }
        if d.is_zero() {
            return Err(WaveError::ResonantMode {
                a: m.a.clone(),
                b: m.b,
            });
        }
        let d = to_f64(&d);
        if d.abs() < min_denominator {
            return Err(WaveError::NearResonance {
                a: m.a.clone(),
                b: m.b,
                d,
            });
        }
        // one real factor per mode keeps conjugate pairs exactly conjugate
        Ok(v * (prefactor / d))
    })
}

/// The forward operator `u_tt − Δu`: mode-wise multiplication by
/// `(4π²/β²)·D(a,b)`.
pub fn apply_operator(u: &FourierField, params: &WaveParams) -> Result<FourierField> {
    params.check(u.dim())?;
    let deltas = params.deltas();
    let prefactor = four_pi_sq() / params.beta_sq_f64();
    u.map_modes(|m, v| {
        let d = to_f64(&(sum_squares(&m.a, &deltas) - BigRational::from_integer(square(m.b))));
        Ok(v * (prefactor * d))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max |u_tt − Δu − f|` over the sample points.
    pub max_abs: f64,
    /// `Σ |f_{a,b}|`, the scale residuals are measured against.
    pub source_l1: f64,
    pub points: u64,
}

impl ResidualReport {
    pub fn relative(&self) -> f64 {
        if self.source_l1 == 0.0 {
            self.max_abs
        } else {
            self.max_abs / self.source_l1
        }
    }
}

/// Evaluates `u_tt − Δu − f` on the grid `x_i = α_i k_i/m`, `t = β k/m` by
/// direct summation of differentiated exponentials.
pub fn residual_check(
    u: &FourierField,
    f: &FourierField,
    params: &WaveParams,
    samples_per_axis: u32,
) -> Result<ResidualReport> {
    params.check(u.dim())?;
    params.check(f.dim())?;
    let m = samples_per_axis as i64;
    if m < 1 {
        return Err(WaveError::InvalidParameter("need at least one sample per axis".into()));
    }
    let n = params.dim();
    let tau = 2.0 * std::f64::consts::PI;
    let alpha_sq = params.alpha_sq_f64();
    let beta_sq = params.beta_sq_f64();
    // u_tt − Δu on e^{iθ}: (−(2πb)²/β² + Σ (2π a_i)²/α_i²) e^{iθ}
    let lu: Vec<(&Mode, Complex64)> = u
        .iter()
        .map(|(md, &v)| {
            let space: f64 = md
                .a
                .iter()
                .zip(&alpha_sq)
                .map(|(&ai, &a2)| (tau * ai as f64).powi(2) / a2)
                .sum();
            let time = (tau * md.b as f64).powi(2) / beta_sq;
            (md, v * (space - time))
        })
        .collect();
    let terms: Vec<(&Mode, Complex64)> = lu
        .into_iter()
        .chain(f.iter().map(|(md, &v)| (md, -v)))
        .collect();
    let points = (m as u64).pow(n as u32 + 1);
    let mut max_abs: f64 = 0.0;
    let mut k = vec![0i64; n + 1];
    for _ in 0..points {
        let mut acc = Complex64::zero();
        for (md, c) in &terms {
            let phase: i64 = md.a.iter().zip(&k).map(|(&ai, &ki)| ai * ki).sum::<i64>() + md.b * k[n];
            let r = phase.rem_euclid(m);
            acc += c * Complex64::from_polar(1.0, tau * r as f64 / m as f64);
        }
        max_abs = max_abs.max(acc.norm());
        for slot in k.iter_mut() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    Ok(ResidualReport {
        max_abs,
        source_l1: f.l1_norm(),
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScanConfig {
    pub c: f64,
    pub w: f64,
    pub h_max: u64,
}

impl ResonanceScanConfig {
    pub fn new(c: f64, w: f64, h_max: u64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(WaveError::InvalidParameter(format!("need C >= 0, got {c}")));
        }
        if !(w > 1.0 && w.is_finite()) {
            return Err(WaveError::InvalidParameter(format!("need w > 1, got {w}")));
        }
        if h_max < 1 {
            return Err(WaveError::InvalidParameter("need h_max >= 1".into()));
        }
        Ok(Self { c, w, h_max })
    }

    /// `C·h^{−w}` as a float.
    pub fn threshold(&self, h: u64) -> f64 {
        self.c * (h as f64).powf(-self.w)
    }

    /// Largest `b` inspected for height `h`: `2h·max(1, √max δ)`.
    pub fn b_window(h: u64, max_delta: f64) -> i64 {
        (2.0 * h as f64 * max_delta.sqrt().max(1.0)).floor() as i64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub a: Vec<i64>,
    pub b: i64,
    pub d: f64,
    /// Exact `D = 0`.
    pub exact_zero: bool,
    /// `C·h_a^{−w} − |D|`.
    pub margin: f64,
}

fn isqrt_floor(x: &BigInt) -> BigInt {
    if x.is_positive() {
        x.sqrt()
    } else {
        BigInt::zero()
    }
}

/// All `a ∈ Z≥0^n` with `0 < h_a ≤ h_max` and `b ≥ 0` inside the window with
/// `|D(a,b)| < C·h_a^{−w}`, decided exactly. Sign changes of `a_i` or `b`
/// leave `D` unchanged, so only these representatives are listed. Sorted by
/// margin, largest first, ties by `(h_a, a, b)`.
pub fn resonance_scan(params: &WaveParams, cfg: &ResonanceScanConfig) -> Result<Vec<Resonance>> {
    let n = params.dim();
    let deltas = params.deltas();
    let max_delta = deltas.iter().map(to_f64).fold(0.0, f64::max);
    let mut out = Vec::new();
    if cfg.c == 0.0 {
        return Ok(out);
    }
    let mut a = vec![0i64; n];
    loop {
        // odometer over [0, h_max]^n
        let mut i = n;
        loop {
            if i == 0 {
                out.sort_by(|p: &Resonance, q: &Resonance| {
                    q.margin
                        .total_cmp(&p.margin)
                        .then_with(|| Mode::new(p.a.clone(), p.b).cmp(&Mode::new(q.a.clone(), q.b)))
                });
                return Ok(out);
            }
            i -= 1;
            if a[i] < cfg.h_max as i64 {
                a[i] += 1;
                break;
            }
            a[i] = 0;
        }
        let h = a.iter().copied().max().unwrap_or(0) as u64;
        let thr_f = cfg.threshold(h);
        let Some(thr) = BigRational::from_float(thr_f) else {
            continue;
        };
        let s = sum_squares(&a, &deltas);
        // b² ∈ (S − thr, S + thr)
        let lo = &s - &thr;
        let hi = &s + &thr;
        let b_min = isqrt_floor(&lo.floor().to_integer());
        let b_max = isqrt_floor(&hi.ceil().to_integer()) + BigInt::one();
        let window = ResonanceScanConfig::b_window(h, max_delta);
        let (Some(b_min), Some(b_max)) = (b_min.to_i64(), b_max.to_i64()) else {
            return Err(WaveError::InvalidParameter("b range overflows i64".into()));
        };
        for b in b_min.max(0)..=b_max.min(window) {
            let d = &s - BigRational::from_integer(square(b));
            if d.abs() < thr {
                let df = to_f64(&d);
                out.push(Resonance {
                    a: a.clone(),
                    b,
                    d: df,
                    exact_zero: d.is_zero(),
                    margin: thr_f - df.abs(),
                });
            }
        }
    }
}
