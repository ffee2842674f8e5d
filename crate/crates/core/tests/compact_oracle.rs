mod common;

use std::time::Instant;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use slsr1_core::oracle::{compact_general_hessvec, dense_accept, dense_sr1_oracle};
use slsr1_core::sr1::{accept_pairs, build_gram, compact_hessvec, compact_spectrum, sketch_yy, CompactHessian};
use slsr1_core::Matrix;

struct Instance {
    s: Matrix<f64>,
    y: Matrix<f64>,
}

/// Mix of exact-Hessian pairs (full rank, low rank, indefinite) and
/// unstructured `Y`.
fn instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let d = r.random_range(2..=20);
    let m = r.random_range(1..=5);
    let s = gaussian(&mut r, d, m);
    let y = match seed % 4 {
        0 => random_hessian(&mut r, d, d, false).matmul(&s).unwrap(),
        1 => random_hessian(&mut r, d, d, true).matmul(&s).unwrap(),
        2 => {
            let rank = r.random_range(1..=d.min(3));
            random_hessian(&mut r, d, rank, true).matmul(&s).unwrap()
        }
        _ => gaussian(&mut r, d, m),
    };
    Instance { s, y }
}

#[test]
fn compact_product_matches_dense_recursion_on_200_instances() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let Instance { s, y } = instance(seed);
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        let b = dense_sr1_oracle(&s, &y, &out.accepted, 0.0).unwrap();
        let h = CompactHessian::new(&y, &g, out.ladder).unwrap();
        let mut r = rng(10_000 + seed);
        for _ in 0..3 {
            let v = gaussian_vec(&mut r, s.nrows());
            let got = compact_hessvec(&h, &v).unwrap();
            let want = b.mul_vec(&v).unwrap();
            if want.iter().all(|&x| x == 0.0) {
                assert!(got.iter().all(|&x| x.abs() < 1e-12), "seed {seed}");
                continue;
            }
            let e = rel_err(&got, &want);
            worst = worst.max(e);
            assert!(e <= 1e-9, "seed {seed}: relative error {e:e}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn gram_acceptance_matches_dense_acceptance() {
    for seed in 0..200 {
        let Instance { s, y } = instance(seed);
        let g = build_gram(&s, &y).unwrap();
        let got = accept_pairs(&g, 1e-8).unwrap().accepted;
        let want = dense_accept(&s, &y, 1e-8).unwrap();
        assert_eq!(got, want, "seed {seed}");
    }
}

#[test]
fn compact_matches_general_form_at_zero_gamma() {
    for seed in 0..50 {
        let Instance { s, y } = instance(seed);
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        if out.accepted.is_empty() {
            continue;
        }
        let v = gaussian_vec(&mut rng(seed + 77), s.nrows());
        let general = compact_general_hessvec(&s, &y, &out.accepted, 0.0, &v).unwrap();
        let h = CompactHessian::new(&y, &g, out.ladder).unwrap();
        let e = rel_err(&h.hessvec(&v).unwrap(), &general);
        assert!(e < 1e-9, "seed {seed}: {e:e}");
    }
}

#[test]
fn general_compact_form_matches_recursion_with_identity_start() {
    // independent check of the general oracle itself
    for seed in 0..50 {
        let mut r = rng(seed);
        let (d, m) = (8, 3);
        let s = gaussian(&mut r, d, m);
        let y = random_hessian(&mut r, d, d, true).matmul(&s).unwrap();
        let all: Vec<usize> = (0..m).collect();
        let Ok(b) = dense_sr1_oracle(&s, &y, &all, 1.0) else {
            continue;
        };
        let v = gaussian_vec(&mut r, d);
        let got = compact_general_hessvec(&s, &y, &all, 1.0, &v).unwrap();
        assert!(rel_err(&got, &b.mul_vec(&v).unwrap()) < 1e-8, "seed {seed}");
    }
}

#[test]
fn exact_hessian_pairs_reproduce_curvature_on_span() {
    // with y_i = H s_i and every pair accepted, B s_i = y_i (secant condition)
    for seed in 0..50 {
        let mut r = rng(seed);
        let (d, m) = (12, 4);
        let s = gaussian(&mut r, d, m);
        let y = random_hessian(&mut r, d, d, seed % 2 == 0).matmul(&s).unwrap();
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        let h = CompactHessian::new(&y, &g, out.ladder.clone()).unwrap();
        for &i in &out.accepted {
            let e = rel_err(&h.hessvec(s.col(i)).unwrap(), y.col(i));
            assert!(e < 1e-9, "seed {seed} pair {i}: {e:e}");
        }
    }
}

#[test]
fn spectrum_matches_dense_eigenvalues() {
    for seed in 0..40 {
        let Instance { s, y } = instance(seed);
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        if out.accepted.is_empty() {
            continue;
        }
        let b = dense_sr1_oracle(&s, &y, &out.accepted, 0.0).unwrap();
        let h = CompactHessian::new(&y, &g, out.ladder).unwrap();
        // rank B ≤ min(j, d): compare the leading min(j, d) magnitudes
        let by_magnitude = |mut v: Vec<f64>, k: usize| {
            v.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
            v.truncate(k);
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            v
        };
        let k = h.j().min(s.nrows());
        let got = by_magnitude(compact_spectrum(&h).unwrap(), k);
        let want = by_magnitude(to_na(&b).symmetric_eigenvalues().iter().copied().collect(), k);
        let scale = want.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for (x, w) in got.iter().zip(&want) {
            assert!((x - w).abs() < 1e-8 * scale, "seed {seed}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn sketch_equals_explicit_triple_product() {
    let mut r = rng(5);
    let (d, m) = (30, 6);
    let s = gaussian(&mut r, d, m);
    let y = gaussian(&mut r, d, m);
    let g = build_gram(&s, &y).unwrap();
    let sk = sketch_yy(&g.sy, &g.ss).unwrap();
    let explicit = y
        .transpose()
        .matmul(&s)
        .unwrap()
        .matmul(&s.transpose())
        .unwrap()
        .matmul(&y)
        .unwrap();
    assert!(sk.sub(&explicit).unwrap().max_abs() < 1e-10 * explicit.max_abs());
}

#[test]
fn single_precision_tracks_double_precision() {
    let mut r = rng(3);
    let (d, m) = (16, 4);
    let s = gaussian(&mut r, d, m);
    let y = random_hessian(&mut r, d, d, false).matmul(&s).unwrap();
    let g = build_gram(&s, &y).unwrap();
    let out = accept_pairs(&g, 1e-8).unwrap();
    let h = CompactHessian::new(&y, &g, out.ladder).unwrap();
    let (s32, y32) = (s.cast::<f32>(), y.cast::<f32>());
    let g32 = build_gram(&s32, &y32).unwrap();
    let out32 = accept_pairs(&g32, 1e-6f32).unwrap();
    assert_eq!(out32.accepted, (0..m).collect::<Vec<_>>());
    let h32 = CompactHessian::new(&y32, &g32, out32.ladder).unwrap();
    let v = gaussian_vec(&mut r, d);
    let v32: Vec<f32> = v.iter().map(|&x| x as f32).collect();
    let got: Vec<f64> = h32.hessvec(&v32).unwrap().iter().map(|&x| x as f64).collect();
    assert!(rel_err(&got, &h.hessvec(&v).unwrap()) < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5000))]

    #[test]
    fn acceptance_and_operator_are_invariant_to_pair_scaling(seed in 0u64..10_000, alpha in 0.01f64..100.0) {
        let Instance { s, y } = instance(seed);
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        let (s2, y2) = (s.scaled(alpha), y.scaled(alpha));
        let g2 = build_gram(&s2, &y2).unwrap();
        let out2 = accept_pairs(&g2, 1e-8).unwrap();
        prop_assert_eq!(&out.accepted, &out2.accepted);
        if !out.accepted.is_empty() {
            let v = gaussian_vec(&mut rng(seed ^ 1), s.nrows());
            let b1 = CompactHessian::new(&y, &g, out.ladder).unwrap().hessvec(&v).unwrap();
            let b2 = CompactHessian::new(&y2, &g2, out2.ladder).unwrap().hessvec(&v).unwrap();
            prop_assert!(rel_err(&b2, &b1) < 1e-8);
        }
    }

    #[test]
    fn compact_operator_is_symmetric(seed in 0u64..10_000) {
        let Instance { s, y } = instance(seed);
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        let ya = y.select_columns(&out.accepted);
        let inv = out.ladder.inv.clone();
        let h = CompactHessian::new(&y, &g, out.ladder).unwrap();
        let mut r = rng(seed + 1);
        let u = gaussian_vec(&mut r, s.nrows());
        let v = gaussian_vec(&mut r, s.nrows());
        let ubv: f64 = u.iter().zip(h.hessvec(&v).unwrap()).map(|(a, b)| a * b).sum();
        let vbu: f64 = v.iter().zip(h.hessvec(&u).unwrap()).map(|(a, b)| a * b).sum();
        // forward-error scale of uᵀ Y M⁻¹ Yᵀ v
        let (yu, yv) = (ya.transpose().mul_vec(&u).unwrap(), ya.transpose().mul_vec(&v).unwrap());
        let scale: f64 = (0..yu.len())
            .flat_map(|p| (0..yv.len()).map(move |q| (p, q)))
            .map(|(p, q)| (yu[p] * inv.get(p, q) * yv[q]).abs())
            .sum();
        prop_assert!((ubv - vbu).abs() <= 1e-12 * (1.0 + scale), "{ubv} vs {vbu}, scale {scale}");
    }
}

#[test]
fn pairs_with_roundoff_level_residual_are_rejected_at_every_scale() {
    let mut r = rng(77);
    let d = 9;
    let u = gaussian_vec(&mut r, d);
    let a = Matrix::from_fn(d, d, |i, j| u[i] * u[j]);
    for trial in 0..50u64 {
        let mut r = rng(1000 + trial);
        let s = gaussian(&mut r, d, 3);
        let y = a.matmul(&s).unwrap();
        for alpha in [1e-3, 1.0, 1e3] {
            let (s2, y2) = (s.scaled(alpha), y.scaled(alpha));
            let out = accept_pairs(&build_gram(&s2, &y2).unwrap(), 1e-8).unwrap();
            assert_eq!(out.accepted, vec![0], "trial {trial}, alpha {alpha}");
            assert!(out.ladder.inv.max_abs().is_finite());
        }
    }
}
