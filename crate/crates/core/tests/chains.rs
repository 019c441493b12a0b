use std::sync::Arc;

use ramcmc::analysis::estimate_mean_field;
use ramcmc::linalg::{symmetric_eigenvalues, LowerTriangularFactor, Matrix, SymmetricMatrix};
use ramcmc::prelude::*;
use ramcmc::proposals::IncrementSampler;
use ramcmc::targets::student2d_paper;

fn spherical(d: usize) -> TargetModel {
    TargetModel::gaussian(vec![0.0; d], SymmetricMatrix::identity(d)).unwrap()
}

#[test]
fn ram_factor_stays_positive_definite() {
    let target = student2d_paper();
    let config = SamplerConfig::new(Algorithm::Ram, vec![1.0, 2.0], LowerTriangularFactor::identity(2));
    let mut chain = Chain::new(&config, &target).unwrap();
    let mut rng = RngStream::new(21, 0);
    for _ in 0..20_000 {
        chain.step(&mut rng).unwrap();
        let s = &chain.state().factor;
        assert!(s.diagonal().iter().all(|&x| x > 0.0));
        assert!(symmetric_eigenvalues(&s.product()).unwrap()[0] > 0.0);
    }
}

#[test]
fn bounded_ram_respects_eigenvalue_bounds() {
    let target = student2d_paper();
    let mut config = SamplerConfig::new(Algorithm::Ram, vec![1.0, 2.0], LowerTriangularFactor::identity(2));
    let (lo, hi) = (0.5, 2.0);
    config.eigen_bounds = Some((lo, hi));
    let mut chain = Chain::new(&config, &target).unwrap();
    let mut rng = RngStream::new(22, 0);
    let mut moved = 0;
    let mut prev = chain.state().factor.clone();
    for _ in 0..20_000 {
        chain.step(&mut rng).unwrap();
        let s = &chain.state().factor;
        let ev = symmetric_eigenvalues(&s.product()).unwrap();
        assert!(ev[0] >= lo && ev[1] <= hi, "{ev:?}");
        if *s != prev {
            moved += 1;
        }
        prev = s.clone();
    }
    assert!(moved > 1000);
}

#[test]
fn scalar_adaptation_matches_ram_in_one_dimension() {
    let target = spherical(1);
    let s1 = LowerTriangularFactor::identity(1);
    let ram = SamplerConfig::new(Algorithm::Ram, vec![0.0], s1.clone());
    let mut asm = SamplerConfig::new(Algorithm::Asm, vec![0.0], s1);
    asm.schedule = ram.schedule;
    let mut a = Chain::new(&ram, &target).unwrap();
    let mut b = Chain::new(&asm, &target).unwrap();
    let sampler = ProposalSpec::default().sampler(1);
    let mut rng = RngStream::new(23, 0);
    for _ in 0..10_000 {
        let u = sampler.sample(&mut rng);
        let w = rng.uniform();
        a.step_with(u.clone(), w).unwrap();
        b.step_with(u, w).unwrap();
    }
    let diff = (a.state().factor.get(0, 0).ln() - b.state().factor.get(0, 0).ln()).abs();
    assert!(diff < 0.05, "log-factor difference {diff}");
}

#[test]
fn steady_state_gaussian_hpd_coverage() {
    let target = TargetModel::gaussian(
        vec![0.0, 0.0],
        SymmetricMatrix::from_rows(&[vec![3.0, 1.2], vec![1.2, 0.9]]).unwrap(),
    )
    .unwrap();
    let mut rng = RngStream::new(24, 0);
    let x1 = target.sample_exact(&mut rng).unwrap();
    let mut config = SamplerConfig::new(Algorithm::Ram, x1, LowerTriangularFactor::identity(2));
    config.iterations = 400_000;
    config.diagnostics.hpd_threshold = Some(target.quadratic_law().unwrap().quantile(0.9));
    let summary = run_chain(&config, &target, &mut rng, &mut NullSink).unwrap();
    let outside = summary.hpd_outside_fraction.unwrap();
    assert!((outside - 0.10).abs() <= 0.01, "outside fraction {outside}");
}

#[test]
fn mean_field_equivariant_under_triangular_maps() {
    let base = Arc::new(student2d_paper());
    // Lower-triangular A keeps A·S lower-triangular.
    let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![-0.7, 0.5]]).unwrap();
    let b = [3.0, -1.0];
    let image = base.affine_image(&a, &b).unwrap();
    let s = LowerTriangularFactor::from_rows(&[vec![0.8, 0.0], vec![0.3, 1.1]]).unwrap();
    let a_s = LowerTriangularFactor::from_rows(&a.mul(&s.to_matrix()).to_rows()).unwrap();
    let spec = ProposalSpec::default();
    let h = estimate_mean_field(&s, &base, &spec, 0.234, 50_000, &mut RngStream::new(25, 0)).unwrap();
    let h_image = estimate_mean_field(&a_s, &image, &spec, 0.234, 50_000, &mut RngStream::new(25, 0)).unwrap();
    let mapped = a.congruence(&h.matrix);
    let err = mapped.sub(&h_image.matrix).frobenius_norm();
    assert!(err < 1e-9 * mapped.frobenius_norm().max(1e-3), "err {err}");
}

#[test]
fn mean_field_invariant_under_rotation() {
    let target = student2d_paper();
    let s = LowerTriangularFactor::from_rows(&[vec![0.8, 0.0], vec![0.3, 1.1]]).unwrap();
    let (c, sn) = (0.6f64, 0.8f64);
    let q = Matrix::from_rows(&[vec![c, -sn], vec![sn, c]]).unwrap();
    let spec = ProposalSpec::default();
    let n = 200_000;
    let h = estimate_mean_field(&s, &target, &spec, 0.234, n, &mut RngStream::new(26, 0)).unwrap();
    // h(SQ) with U ↦ QU: same law as h(S), estimated on fresh randomness.
    let sq = s.to_matrix().mul(&q);
    let sampler: IncrementSampler = spec.sampler(2);
    let mut rng = RngStream::new(27, 0);
    let mut sum = [[0.0f64; 2]; 2];
    for _ in 0..n {
        let x = target.sample_exact(&mut rng).unwrap();
        let u = sampler.sample(&mut rng);
        let z = sq.mul_vec(&u);
        let y = [x[0] + z[0], x[1] + z[1]];
        let alpha = ramcmc::targets::acceptance_ratio(&target, &y, &x).unwrap();
        let w = (alpha - 0.234) / (u[0] * u[0] + u[1] * u[1]);
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += w * z[i] * z[j];
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let rotated = sum[i][j] / n as f64;
            let se = h.standard_errors.get(i, j) * 2f64.sqrt();
            assert!(
                (rotated - h.matrix.get(i, j)).abs() < 4.0 * se,
                "({i},{j}): {rotated} vs {}",
                h.matrix.get(i, j)
            );
        }
    }
}

#[test]
fn rwm_and_adaptive_chains_are_reproducible() {
    let target = student2d_paper();
    for algorithm in Algorithm::ALL {
        let mut config = SamplerConfig::new(algorithm, vec![1.0, 2.0], LowerTriangularFactor::identity(2));
        config.burn_in = 100;
        config.iterations = 2_000;
        let run = || {
            let mut sink = VecSink::new(50);
            let summary = run_chain(&config, &target, &mut RngStream::new(28, 3), &mut sink).unwrap();
            (summary, sink.records)
        };
        assert_eq!(run(), run(), "{algorithm}");
    }
}
