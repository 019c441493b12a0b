use proptest::prelude::*;
use ramcmc::analysis::{lyapunov_value, suboptimality_b};
use ramcmc::linalg::{
    cholesky_factorize, directional_radius, dot, norm, rank_one_update, rank_one_update_or_refactor,
    symmetric_eigenvalues, LowerTriangularFactor, Matrix, SymmetricMatrix,
};
use ramcmc::proposals::RngStream;
use ramcmc::samplers::ram_adapt;
use ramcmc::targets::{acceptance_ratio, TargetModel, Univariate};

/// Well-conditioned lower-triangular factor with diagonal in [0.5, 2].
fn factor(dim: usize) -> impl Strategy<Value = LowerTriangularFactor> {
    (
        prop::collection::vec(0.5f64..2.0, dim),
        prop::collection::vec(-1.0f64..1.0, dim * dim),
    )
        .prop_map(move |(diag, off)| {
            let rows: Vec<Vec<f64>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| match j.cmp(&i) {
                            std::cmp::Ordering::Less => off[i * dim + j],
                            std::cmp::Ordering::Equal => diag[i],
                            std::cmp::Ordering::Greater => 0.0,
                        })
                        .collect()
                })
                .collect();
            LowerTriangularFactor::from_rows(&rows).unwrap()
        })
}

fn factor_and_vec() -> impl Strategy<Value = (LowerTriangularFactor, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|d| (factor(d), prop::collection::vec(-2.0f64..2.0, d)))
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 1e-6).then(|| v.iter().map(|x| x / n).collect())
}

fn rel_frobenius(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn update_matches_refactorization((l, v) in factor_and_vec(), a in 0.0f64..10.0) {
        let fast = rank_one_update(&l, &v, a).unwrap();
        let full = cholesky_factorize(&l.product().add(&SymmetricMatrix::outer(&v, a))).unwrap();
        prop_assert!(fast.to_matrix().frobenius_norm() > 0.0);
        let diff: f64 = fast
            .as_slice()
            .iter()
            .zip(full.as_slice())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        prop_assert!(diff < 1e-8 * full.frobenius_norm().max(1.0), "diff {diff}");
    }

    #[test]
    fn update_then_downdate_restores((l, v) in factor_and_vec(), a in 0.01f64..5.0) {
        let up = rank_one_update(&l, &v, a).unwrap();
        let back = rank_one_update_or_refactor(&up, &v, -a).unwrap();
        prop_assert!(rel_frobenius(&back.product(), &l.product()) < 1e-9);
        for (x, y) in back.as_slice().iter().zip(l.as_slice()) {
            prop_assert!((x - y).abs() < 1e-7 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn shape_update_stays_positive_definite(
        (l, u) in factor_and_vec(),
        a in -0.999f64..0.999,
    ) {
        let Some(dir) = unit(&u) else { return Ok(()) };
        let z = l.mul_vec(&dir);
        let next = rank_one_update_or_refactor(&l, &z, a).unwrap();
        prop_assert!(next.diagonal().iter().all(|&x| x > 0.0));
        let ev = symmetric_eigenvalues(&next.product()).unwrap();
        prop_assert!(ev[0] > 0.0);
    }

    #[test]
    fn squared_radius_is_quadratic_form((l, v) in factor_and_vec()) {
        let Some(dir) = unit(&v) else { return Ok(()) };
        let r = directional_radius(&l, &dir).unwrap();
        let q = l.product().quadratic_form(&dir);
        prop_assert!((r * r - q).abs() < 1e-12 * q.max(1.0));
    }

    #[test]
    fn ram_trace_identity(
        (s, u) in factor_and_vec(),
        alpha in 0.0f64..=1.0,
        eta in 0.0f64..=1.0,
    ) {
        let Some(_) = unit(&u) else { return Ok(()) };
        let next = ram_adapt(&s, &u, alpha, eta, 0.234).unwrap();
        let su = s.mul_vec(&u);
        let expected = s.product().trace() + eta * (alpha - 0.234) * dot(&su, &su) / dot(&u, &u);
        prop_assert!((next.product().trace() - expected).abs() < 1e-10 * expected.max(1.0));
    }

    #[test]
    fn lyapunov_invariant_under_congruence(
        (lr, ls) in (1usize..=5).prop_flat_map(|d| (factor(d), factor(d))),
        seed in any::<u64>(),
    ) {
        let d = lr.dim();
        let mut rng = RngStream::new(seed, 0);
        let a = Matrix::from_fn(d, |i, j| if i == j { 2.0 } else { 0.0 } + 0.5 * rng.standard_normal());
        let r = lr.product();
        let rs = ls.product();
        let Ok(w1) = lyapunov_value(&a.congruence(&r), &a.congruence(&rs)) else {
            // Badly conditioned A; nothing to compare.
            return Ok(());
        };
        let w0 = lyapunov_value(&r, &rs).unwrap();
        prop_assert!((w0 - w1).abs() < 1e-10 * w0.max(1.0), "{w0} vs {w1}");
        prop_assert!(lyapunov_value(&r, &r).unwrap() < 1e-12);
    }

    #[test]
    fn translated_gaussian_density(
        mean in prop::collection::vec(-5.0f64..5.0, 3),
        x in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let cov = SymmetricMatrix::from_rows(&[
            vec![2.0, 0.3, 0.0],
            vec![0.3, 1.0, -0.2],
            vec![0.0, -0.2, 0.5],
        ]).unwrap();
        let centered = TargetModel::gaussian(vec![0.0; 3], cov.clone()).unwrap();
        let shifted = TargetModel::gaussian(mean.clone(), cov).unwrap();
        let y: Vec<f64> = x.iter().zip(&mean).map(|(a, b)| a + b).collect();
        let (a, b) = (shifted.log_density(&y).unwrap(), centered.log_density(&x).unwrap());
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn detailed_balance_of_acceptance(
        x in prop::collection::vec(-8.0f64..8.0, 2),
        y in prop::collection::vec(-8.0f64..8.0, 2),
    ) {
        let t = ramcmc::targets::student2d_paper();
        let (px, py) = (t.log_density(&x).unwrap().exp(), t.log_density(&y).unwrap().exp());
        let lhs = acceptance_ratio(&t, &y, &x).unwrap() * px;
        let rhs = acceptance_ratio(&t, &x, &y).unwrap() * py;
        prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(rhs));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn suboptimality_at_least_one(
        (lr, ls) in (1usize..=6).prop_flat_map(|d| (factor(d), factor(d))),
    ) {
        let b = suboptimality_b(&lr.product(), &ls.product()).unwrap();
        prop_assert!(b >= 1.0 - 1e-12, "b = {b}");
    }
}

#[test]
fn single_component_mixture_is_gaussian() {
    let cov = SymmetricMatrix::from_rows(&[vec![1.5, 0.4], vec![0.4, 0.7]]).unwrap();
    let g = TargetModel::gaussian(vec![0.3, -1.0], cov.clone()).unwrap();
    let m = TargetModel::mixture(vec![1.0], vec![vec![0.3, -1.0]], cov).unwrap();
    let mut rng = RngStream::new(11, 0);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..2).map(|_| 3.0 * rng.standard_normal()).collect();
        let (a, b) = (g.log_density(&x).unwrap(), m.log_density(&x).unwrap());
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn one_dimensional_cauchy_agrees_with_student() {
    let cauchy = TargetModel::product(Univariate::StandardCauchy, 1).unwrap();
    let student = TargetModel::student(vec![0.0], SymmetricMatrix::identity(1), 1.0).unwrap();
    for k in -200..=200 {
        let x = [k as f64 * 0.37];
        let (a, b) = (cauchy.log_density(&x).unwrap(), student.log_density(&x).unwrap());
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "x = {}: {a} vs {b}", x[0]);
    }
}
