//! Decomposition and contraction checks against independent oracles:
//! nalgebra's SVD for singular values and explicit index loops for
//! contractions.

use mpsim::tensor::matmul;
use mpsim::{contract, svd, DenseTensor, Truncation, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(rng: &mut impl Rng, shape: Vec<usize>) -> DenseTensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    DenseTensor::new(shape, data).unwrap()
}

fn oracle_singular_values(m: &DenseTensor) -> Vec<f64> {
    let (r, c) = m.matrix_dims().unwrap();
    let dm = DMatrix::from_row_slice(r, c, m.data());
    let mut s: Vec<f64> = dm.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn frob_sq(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn isometry_error(u: &DenseTensor) -> f64 {
    let g = matmul(&u.adjoint().unwrap(), u).unwrap();
    g.max_abs_diff(&DenseTensor::identity(g.shape()[0]).unwrap())
}

#[test]
fn untruncated_reconstruction_and_isometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &(r, c) in &[(1, 1), (1, 7), (7, 1), (8, 6), (6, 8), (16, 16), (64, 32), (33, 64)] {
        let m = random_tensor(&mut rng, vec![r, c]);
        let res = svd(&m, Truncation::NONE).unwrap();
        let rel = frob_sq(&res.reconstruct(), &m).sqrt() / m.norm();
        assert!(rel <= 1e-12, "{r}x{c}: reconstruction {rel}");
        assert!(isometry_error(&res.u) <= 1e-12, "{r}x{c}: U not isometric");
        assert!(isometry_error(&res.vdag.adjoint().unwrap()) <= 1e-12, "{r}x{c}: V not isometric");
        assert!(res.s.windows(2).all(|w| w[0] >= w[1]) && res.s.iter().all(|&x| x >= 0.0));
        let oracle = oracle_singular_values(&m);
        for (a, b) in res.s.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * oracle[0]);
        }
    }
}

#[test]
fn truncated_error_matches_discarded_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let m = random_tensor(&mut rng, vec![8, 6]);
        let res = svd(&m, Truncation { max_rank: Some(3), cutoff: 0.0 }).unwrap();
        assert_eq!(res.rank(), 3);
        let total = m.norm().powi(2);
        let measured = frob_sq(&res.reconstruct(), &m) / total;
        let oracle: f64 = oracle_singular_values(&m)[3..].iter().map(|s| s * s).sum::<f64>() / total;
        assert!((measured - res.discarded_weight).abs() <= 1e-12);
        assert!((oracle - res.discarded_weight).abs() <= 1e-12);
    }
}

#[test]
fn eckart_young_optimality() {
    // no random rank-k matrix beats the truncated SVD
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..120 {
        let (r, c) = (rng.random_range(2..6), rng.random_range(2..6));
        let k = rng.random_range(1..r.min(c));
        let m = random_tensor(&mut rng, vec![r, c]);
        let best = svd(&m, Truncation { max_rank: Some(k), cutoff: 0.0 }).unwrap();
        let best_err = frob_sq(&best.reconstruct(), &m);
        let a = random_tensor(&mut rng, vec![r, k]);
        let b = random_tensor(&mut rng, vec![k, c]);
        let cand = matmul(&a, &b).unwrap();
        // also try the truncated factors perturbed slightly
        let mut near = best.reconstruct();
        near.data_mut().iter_mut().for_each(|x| *x *= 1.0 + 1e-3);
        assert!(frob_sq(&cand, &m) >= best_err, "trial {trial}");
        assert!(frob_sq(&near, &m) >= best_err, "trial {trial}");
    }
}

#[test]
fn cutoff_drops_small_tail() {
    // diag(4, 2, 1e-4): tail weight ~ 5e-10
    let m = DenseTensor::real_matrix(3, 3, &[4.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1e-4]).unwrap();
    let res = svd(&m, Truncation { max_rank: None, cutoff: 1e-9 }).unwrap();
    assert_eq!(res.rank(), 2);
    assert!((res.discarded_weight - 1e-8 / 20.00000001).abs() < 1e-20);
}

#[test]
fn rank3_triple_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_tensor(&mut rng, vec![3, 5, 4]);
    let b = random_tensor(&mut rng, vec![4, 2, 3]);
    let out = contract(&a, &b, &[(2, 0)]).unwrap();
    let mut max = 0.0f64;
    for i in 0..3 {
        for j in 0..5 {
            for k in 0..2 {
                for l in 0..3 {
                    let mut acc = C64::new(0.0, 0.0);
                    for s in 0..4 {
                        acc += a.get(&[i, j, s]) * b.get(&[s, k, l]);
                    }
                    max = max.max((acc - out.get(&[i, j, k, l])).norm());
                }
            }
        }
    }
    assert!(max <= 1e-13);
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permute_round_trip_is_exact(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, shape.clone());
        let mut order: Vec<usize> = (0..shape.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut inverse = vec![0; order.len()];
        for (i, &o) in order.iter().enumerate() {
            inverse[o] = i;
        }
        let back = t.permute(&order).unwrap().permute(&inverse).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn reshape_round_trip(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, shape.clone());
        let flat = t.reshape(&[t.len()]).unwrap();
        prop_assert_eq!(flat.reshape(&shape).unwrap(), t);
    }

    #[test]
    fn contraction_is_bilinear(seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_tensor(&mut rng, vec![2, 3, 4]);
        let b = random_tensor(&mut rng, vec![4, 3]);
        let alpha = C64::new(re, im);
        let lhs = contract(&a.scaled(alpha), &b, &[(2, 0), (1, 1)]).unwrap();
        let rhs = contract(&a, &b, &[(2, 0), (1, 1)]).unwrap().scaled(alpha);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-13);
    }

    #[test]
    fn identity_contraction_is_identity(seed in any::<u64>(), axis in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, vec![2, 3, 4]);
        let id = DenseTensor::identity(t.shape()[axis]).unwrap();
        // id contracted on its column leaves the axis first; move it back
        let out = contract(&id, &t, &[(1, axis)]).unwrap();
        let mut order: Vec<usize> = (1..3).collect();
        order.insert(axis, 0);
        prop_assert!(out.permute(&order).unwrap().max_abs_diff(&t) <= 1e-13);
    }

    #[test]
    fn svd_factors_are_isometric(r in 1usize..12, c in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_tensor(&mut rng, vec![r, c]);
        let res = svd(&m, Truncation::NONE).unwrap();
        prop_assert!(isometry_error(&res.u) <= 1e-12);
        prop_assert!(isometry_error(&res.vdag.adjoint().unwrap()) <= 1e-12);
    }
}
