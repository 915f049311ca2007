mod common;

use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqapprox::wave::{
    apply_operator, denominator, resonance_scan, residual_check, solve_wave, FourierField,
    Quantity, ResonanceScanConfig, WaveError, WaveParams,
};

fn params(deltas: &[Quantity]) -> WaveParams {
    WaveParams::from_deltas(deltas, &Quantity::ratio(1, 1).unwrap()).unwrap()
}

#[test]
fn solve_inverts_apply() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let n = rng.gen_range(2..=3);
        let ds = common::random_deltas(&mut rng, n);
        let p = params(&ds.iter().map(|&d| Quantity::Float(d)).collect::<Vec<_>>());
        let u = common::random_real_field(&mut rng, &ds, 6);
        let f = apply_operator(&u, &p).unwrap();
        let back = solve_wave(&f, &p, 1e-8).unwrap();
        for ((m, x), (m2, y)) in u.iter().zip(back.iter()) {
            assert_eq!(m, m2);
            assert!((x - y).norm() <= 1e-13 * x.norm(), "{m:?}: {x} vs {y}");
        }
    }
}

#[test]
fn hermitian_symmetry_survives_the_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let ds = common::random_deltas(&mut rng, 2);
        let p = params(&[Quantity::Float(ds[0]), Quantity::Float(ds[1])]);
        let f = common::random_real_field(&mut rng, &ds, 8);
        assert!(f.is_hermitian());
        let u = solve_wave(&f, &p, 1e-8).unwrap();
        assert!(u.is_hermitian());
        assert!(apply_operator(&u, &p).unwrap().is_hermitian());
    }
}

#[test]
fn manufactured_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..5 {
        let alphas: Vec<Quantity> = (0..2).map(|_| Quantity::Float(rng.gen_range(0.5..2.0))).collect();
        let p = WaveParams::from_periods(&alphas, &Quantity::Float(rng.gen_range(0.5..2.0))).unwrap();
        let ds = p.deltas_f64();
        let u = common::random_real_field(&mut rng, &ds, 5);
        let f = apply_operator(&u, &p).unwrap();
        let r = residual_check(&u, &f, &p, 16).unwrap();
        assert!(r.relative() <= 1e-9, "{r:?}");
        // a wrong source is caught
        let mut g = f.clone();
        let (m, v) = g.iter().next().map(|(m, v)| (m.clone(), *v)).unwrap();
        g.insert(m.a, m.b, v * 1.01).unwrap();
        assert!(residual_check(&u, &g, &p, 16).unwrap().relative() > 1e-6);
    }
}

#[test]
fn scaling_periods_scales_u_by_lambda_squared() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ds = common::random_deltas(&mut rng, 2);
    let p = params(&[Quantity::Float(ds[0]), Quantity::Float(ds[1])]);
    let lam = Quantity::ratio(2, 1).unwrap();
    let q = p.scaled(&lam).unwrap();
    assert_eq!(p.deltas(), q.deltas());
    let f = common::random_real_field(&mut rng, &ds, 10);
    let (u, v) = (solve_wave(&f, &p, 1e-8).unwrap(), solve_wave(&f, &q, 1e-8).unwrap());
    for ((_, x), (_, y)) in u.iter().zip(v.iter()) {
        assert!((x * 4.0 - y).norm() <= 1e-15 * y.norm());
    }
    let cfg = ResonanceScanConfig::new(2.0, 1.5, 12).unwrap();
    assert_eq!(resonance_scan(&p, &cfg).unwrap(), resonance_scan(&q, &cfg).unwrap());
}

#[test]
fn exact_rationals_decide_resonance() {
    let half = Quantity::ratio(1, 2).unwrap();
    let p = params(&[half.clone(), half]);
    assert_eq!(denominator(&p, &[1, 1], 1).unwrap(), 0.0);
    let mut f = FourierField::new(2);
    f.insert(vec![1, 1], 1, Complex64::new(1.0, 0.0)).unwrap();
    assert!(matches!(solve_wave(&f, &p, 0.0), Err(WaveError::ResonantMode { .. })));
    // 0.1 is not a dyadic rational, so 10·0.1 − 1 is tiny but not zero
    let tenth = params(&[Quantity::Float(0.1), Quantity::Float(0.1)]);
    let d = denominator(&tenth, &[3, 1], 1).unwrap();
    assert!(d != 0.0 && d.abs() < 1e-15);
}

fn scan_set(deltas: &[Quantity], c: f64, w: f64, h_max: u64) -> BTreeSet<(Vec<i64>, i64)> {
    let cfg = ResonanceScanConfig::new(c, w, h_max).unwrap();
    let hits = resonance_scan(&params(deltas), &cfg).unwrap();
    let set: BTreeSet<_> = hits.iter().map(|r| (r.a.clone(), r.b)).collect();
    assert_eq!(set.len(), hits.len(), "duplicates in scan output");
    set
}

#[test]
fn scan_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let q = |p, r| Quantity::ratio(p, r).unwrap();
    let choices = vec![
        vec![q(1, 1), q(1, 1)],
        vec![q(2, 1), q(3, 4)],
        vec![Quantity::Float(2f64.sqrt()), Quantity::Float(3f64.sqrt())],
        vec![Quantity::Float(rng.gen_range(0.25..4.0)), Quantity::Float(rng.gen_range(0.25..4.0))],
        vec![q(rng.gen_range(1..16), rng.gen_range(1..16)), q(rng.gen_range(1..16), rng.gen_range(1..16))],
    ];
    for ds in &choices {
        for (c, w) in [(1.0, 2.0), (0.5, 1.1)] {
            let got = scan_set(ds, c, w, 32);
            // 2h·max(1, √δ) < 4·32 for every δ here
            let want = common::brute_scan(ds, c, w, 32, 130);
            assert_eq!(got, want, "δ = {ds:?}, C = {c}, w = {w}");
        }
    }
}

#[test]
fn badly_approximable_scan_to_64() {
    let ds = [Quantity::Float(2f64.sqrt()), Quantity::Float(3f64.sqrt())];
    assert_eq!(scan_set(&ds, 1.0, 1.5, 64), common::brute_scan(&ds, 1.0, 1.5, 64, 270));
}

proptest! {
    #[test]
    fn b_window_never_excludes_a_violator(a in prop::collection::vec(-200i64..200, 2..4),
                                          ds in prop::collection::vec(0.25f64..4.0, 3)) {
        let h = a.iter().map(|x| x.unsigned_abs()).max().unwrap();
        prop_assume!(h > 0);
        let s: f64 = a.iter().zip(&ds).map(|(&x, d)| (x * x) as f64 * d).sum();
        let max_delta = ds[..a.len()].iter().cloned().fold(0.0, f64::max);
        let window = ResonanceScanConfig::b_window(h, max_delta);
        let r = s.sqrt().floor() as i64;
        for b in [r - 1, r, r + 1, r + 2] {
            if b >= 0 && (s - (b * b) as f64).abs() < 1.0 {
                prop_assert!(b <= window, "b = {} window = {}", b, window);
            }
        }
    }
}
