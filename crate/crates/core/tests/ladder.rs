mod common;

use common::*;
use rand::Rng;
use slsr1_core::sr1::{accept_pairs, build_gram, minverse_append, MInverseLadder};
use slsr1_core::Error;

fn rel_frobenius(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn recursive_inverse_matches_direct_inversion_on_200_ladders() {
    let mut built = 0;
    for seed in 0..200 {
        let mut r = rng(seed);
        let j = r.random_range(1..=8);
        let d = j + r.random_range(0..8);
        let s = gaussian(&mut r, d, j);
        let y = random_hessian(&mut r, d, d, seed % 2 == 1).matmul(&s).unwrap();
        let g = build_gram(&s, &y).unwrap();
        let mut ladder = MInverseLadder::empty();
        for i in 0..j {
            let v: Vec<f64> = ladder.accepted.iter().map(|&a| g.sy.get(i, a)).collect();
            match minverse_append(&ladder, i, &v, g.sy.get(i, i)) {
                Ok(next) => ladder = next,
                Err(Error::SingularUpdate { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
        if ladder.j() == 0 {
            continue;
        }
        built += 1;
        let m = to_na(&ladder.rebuild_m(&g.sy));
        let direct = m.clone().try_inverse().expect("invertible");
        let inv = to_na(&ladder.inv);
        let e = rel_frobenius(&inv, &direct);
        assert!(e <= 1e-8, "seed {seed}: relative Frobenius {e:e}");
        let id = nalgebra::DMatrix::<f64>::identity(ladder.j(), ladder.j());
        let r = (&inv * &m - &id).norm() / id.norm();
        assert!(r <= 1e-8, "seed {seed}: inv*M residual {r:e}");
    }
    assert!(built >= 190);
}

#[test]
fn ladder_from_acceptance_inverts_m() {
    for seed in 0..100 {
        let mut r = rng(seed + 500);
        let (d, m) = (20, 8);
        let s = gaussian(&mut r, d, m);
        let y = random_hessian(&mut r, d, d, true).matmul(&s).unwrap();
        let g = build_gram(&s, &y).unwrap();
        let out = accept_pairs(&g, 1e-8).unwrap();
        let mm = to_na(&out.ladder.rebuild_m(&g.sy));
        let direct = mm.try_inverse().unwrap();
        assert!(rel_frobenius(&to_na(&out.ladder.inv), &direct) < 1e-8, "seed {seed}");
    }
}

#[test]
fn bordering_leaves_prefix_of_m_unchanged() {
    let mut r = rng(9);
    let s = gaussian(&mut r, 10, 5);
    let y = random_hessian(&mut r, 10, 10, true).matmul(&s).unwrap();
    let g = build_gram(&s, &y).unwrap();
    let out = accept_pairs(&g, 1e-8).unwrap();
    let full = to_na(&out.ladder.rebuild_m(&g.sy));
    for k in 1..out.ladder.j() {
        let prefix = MInverseLadder::<f64> {
            inv: slsr1_core::Matrix::zeros(0, 0),
            accepted: out.ladder.accepted[..k].to_vec(),
        };
        let mk = to_na(&prefix.rebuild_m(&g.sy));
        assert_eq!(mk, full.view((0, 0), (k, k)).clone_owned());
    }
}
