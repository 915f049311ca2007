//! Plane-geometry oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use sqapprox::lattice::CoeffVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sqapprox::wave::{FourierField, Quantity};
use sqapprox::strips::{admissible_c_interval, Ball};

pub type P = (f64, f64);

fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn dot(a: P, b: P) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(v: &[P]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>().abs() / 2.0
}

/// Clip a convex polygon to `p·x ≤ t` (Sutherland–Hodgman, one edge).
pub fn clip(v: &[P], p: P, t: f64) -> Vec<P> {
    let mut out = Vec::new();
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (fa, fb) = (dot(p, a) - t, dot(p, b) - t);
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let s = fa / (fa - fb);
            out.push((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)));
        }
    }
    out
}

/// Area of `{x ∈ [0,1]² : |p·x − t| < w}`.
pub fn band_in_square(p: P, t: f64, w: f64) -> f64 {
    let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    let v = clip(&sq, p, t + w);
    let v = clip(&v, (-p.0, -p.1), -(t - w));
    if v.len() < 3 {
        0.0
    } else {
        polygon_area(&v)
    }
}

/// Signed area of the disk of radius `r` about the origin inside the
/// triangle `(0, a, b)`.
fn disk_triangle(a: P, b: P, r: f64) -> f64 {
    let d = (b.0 - a.0, b.1 - a.1);
    let (qa, qb, qc) = (dot(d, d), 2.0 * dot(a, d), dot(a, a) - r * r);
    let mut ts = vec![0.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if disc > 0.0 && qa > 0.0 {
        let s = disc.sqrt();
        for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    ts.sort_by(f64::total_cmp);
    let at = |t: f64| (a.0 + t * d.0, a.1 + t * d.1);
    ts.windows(2)
        .map(|w| {
            let (p, q) = (at(w[0]), at(w[1]));
            let m = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
            if dot(m, m) <= r * r {
                cross(p, q) / 2.0
            } else {
                r * r * cross(p, q).atan2(dot(p, q)) / 2.0
            }
        })
        .sum()
}

/// Area of a convex polygon inside the disk `|x − c| < r`.
pub fn polygon_in_disk(v: &[P], c: P, r: f64) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            disk_triangle((a.0 - c.0, a.1 - c.1), (b.0 - c.0, b.1 - c.1), r)
        })
        .sum::<f64>()
        .abs()
}

/// The family's `t`-intervals `(c² − w, c² + w)` that can reach the ball,
/// merged where they overlap.
fn family_intervals(a: &CoeffVector, w: f64, ball: &Ball) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for c in admissible_c_interval(a, ball).unwrap().widened() {
        let t = (c * c) as f64;
        match out.last_mut() {
            Some(last) if t - w < last.1 => last.1 = t + w,
            _ => out.push((t - w, t + w)),
        }
    }
    out
}

/// `|σ_a ∩ σ_b ∩ B|` for two planar strip families with half-widths `wa`,
/// `wb`: each pair of merged bands meets in a parallelogram, clipped to the
/// disk exactly.
pub fn pair_intersection_exact(a: &CoeffVector, b: &CoeffVector, wa: f64, wb: f64, ball: &Ball) -> f64 {
    let (s, t) = (a.squares(), b.squares());
    let (a1, a2, b1, b2) = (s[0] as f64, s[1] as f64, t[0] as f64, t[1] as f64);
    let det = a1 * b2 - a2 * b1;
    assert!(det != 0.0, "parallel families");
    let cen = (ball.center()[0], ball.center()[1]);
    let r = ball.radius();
    let ia = family_intervals(a, wa, ball);
    let ib = family_intervals(b, wb, ball);
    let solve = |p: f64, q: f64| ((p * b2 - a2 * q) / det, (a1 * q - p * b1) / det);
    let mut total = 0.0;
    for &(l1, u1) in &ia {
        for &(l2, u2) in &ib {
            let v = [solve(l1, l2), solve(u1, l2), solve(u1, u2), solve(l1, u2)];
            let m = solve((l1 + u1) / 2.0, (l2 + u2) / 2.0);
            let reach = v
                .iter()
                .map(|p| ((p.0 - m.0).powi(2) + (p.1 - m.1).powi(2)).sqrt())
                .fold(0.0, f64::max);
            let dist = ((m.0 - cen.0).powi(2) + (m.1 - cen.1).powi(2)).sqrt();
            if dist >= r + reach {
                continue;
            }
            total += if dist + reach <= r {
                (u1 - l1) * (u2 - l2) / det.abs()
            } else {
                polygon_in_disk(&v, cen, r)
            };
        }
    }
    total
}

/// `|D| < C h^{−w}` over the whole rectangle `|a_i| ≤ h_max`, `|b| ≤ B`,
/// folded onto non-negative representatives.
pub fn brute_scan(deltas: &[Quantity], c: f64, w: f64, h_max: i64, b_max: i64) -> BTreeSet<(Vec<i64>, i64)> {
    let exact: Vec<BigRational> = deltas.iter().map(|d| d.exact().unwrap()).collect();
    let approx: Vec<f64> = deltas.iter().map(Quantity::to_f64).collect();
    let mut out = BTreeSet::new();
    let n = deltas.len();
    let side = (2 * h_max + 1) as usize;
    for idx in 0..side.pow(n as u32) {
        let mut k = idx;
        let a: Vec<i64> = (0..n)
            .map(|_| {
                let x = (k % side) as i64 - h_max;
                k /= side;
                x
            })
            .collect();
        let h = a.iter().map(|x| x.abs()).max().unwrap();
        if h == 0 {
            continue;
        }
        let thr = c * (h as f64).powf(-w);
        let s_f: f64 = a.iter().zip(&approx).map(|(&x, d)| (x * x) as f64 * d).sum();
        for b in -b_max..=b_max {
            let d_f = s_f - (b * b) as f64;
            if d_f.abs() > thr + 1e-6 {
                continue;
            }
            let s: BigRational = a
                .iter()
                .zip(&exact)
                .map(|(&x, d)| d * BigInt::from(x * x))
                .fold(BigRational::zero(), |p, q| p + q);
            let d = s - BigRational::from_integer(BigInt::from(b * b));
            if d.abs() < BigRational::from_float(thr).unwrap() {
                out.insert((a.iter().map(|x| x.abs()).collect(), b.abs()));
            }
        }
    }
    out
}


/// Real field: every mode comes with its conjugate partner, avoiding `|D| < 0.1`.
pub fn random_real_field(rng: &mut ChaCha8Rng, deltas: &[f64], modes: usize) -> FourierField {
    let n = deltas.len();
    let mut f = FourierField::new(n);
    while f.len() < 2 * modes {
        let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
        let b: i64 = rng.gen_range(-10..=10);
        let d: f64 = a.iter().zip(deltas).map(|(&x, &dl)| (x * x) as f64 * dl).sum::<f64>() - (b * b) as f64;
        if d.abs() < 0.1 || (b == 0 && a.iter().all(|&x| x == 0)) {
            continue;
        }
        let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let neg: Vec<i64> = a.iter().map(|x| -x).collect();
        f.insert(a, b, v).unwrap();
        f.insert(neg, -b, v.conj()).unwrap();
    }
    f
}

pub fn random_deltas(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.25..4.0)).collect()
}

