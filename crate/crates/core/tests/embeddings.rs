use compressed_tucker::embeddings::{
    dct2_matrix, is_eps_jl, jl_failure_rate, make_embedding, random_unit_vector, EmbeddingKind, LinearEmbedding,
    ModeMix, MixOperators, VectorSet,
};
use compressed_tucker::rng::{stream_rng, Stream};
use compressed_tucker::{DenseTensor, Matrix};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, Stream::Synth);
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

#[test]
fn srft_operator_matches_its_explicit_matrix() {
    for (n, m, seed) in [(16, 5, 1), (33, 33, 2), (64, 20, 3)] {
        let e = make_embedding(EmbeddingKind::Srft, n, m, seed).unwrap();
        let a = e.to_matrix();
        let x = gaussian(n, 7, seed);
        let fast = e.apply(&x).unwrap();
        let slow = a.matmul(&x).unwrap();
        assert!(fast.sub(&slow).unwrap().frobenius_norm() <= 1e-12 * slow.frobenius_norm());

        let t = DenseTensor::from_fn(vec![3, n, 2], |i| (i[0] as f64 - i[1] as f64 * 0.1 + i[2] as f64).cos()).unwrap();
        let lhs = e.apply_to_tensor(&t, 1).unwrap();
        let rhs = t.mode_multiply(&a, 1).unwrap();
        assert!(lhs.distance(&rhs).unwrap() <= 1e-12 * rhs.norm());
        assert_eq!(e.apply(&Matrix::zeros(n, 3)).unwrap(), Matrix::zeros(m, 3));
    }
}

#[test]
fn full_sampling_srft_is_scaled_mixing() {
    let n = 12;
    let e = make_embedding(EmbeddingKind::Srft, n, n, 5).unwrap();
    let f = dct2_matrix(n);
    let signs = e.signs().unwrap().to_vec();
    let rows = e.sample_rows().unwrap().to_vec();
    assert_eq!(rows, (0..n).collect::<Vec<_>>());
    let a = e.apply(&Matrix::identity(n)).unwrap();
    for i in 0..n {
        for c in 0..n {
            assert!((a.get(i, c) - e.scale() * f.get(rows[i], c) * signs[c]).abs() < 1e-15);
        }
    }
    assert!(a.orthonormality_defect() < 1e-12);
}

#[test]
fn srft_parts_are_well_formed() {
    let e = make_embedding(EmbeddingKind::Srft, 50, 17, 9).unwrap();
    let rows = e.sample_rows().unwrap();
    assert_eq!(rows.len(), 17);
    assert!(rows.windows(2).all(|w| w[0] < w[1]) && rows[16] < 50);
    assert!(e.signs().unwrap().iter().all(|&s| s == 1.0 || s == -1.0));
    assert!((e.scale() - (50.0f64 / 17.0).sqrt()).abs() < 1e-15);
    assert!(make_embedding(EmbeddingKind::Srft, 5, 6, 0).is_err());
    assert!(make_embedding(EmbeddingKind::Gaussian, 5, 0, 0).is_err());
}

#[test]
fn same_seed_same_operator() {
    for kind in [EmbeddingKind::Srft, EmbeddingKind::Gaussian] {
        let a = make_embedding(kind, 40, 10, 77).unwrap();
        let b = make_embedding(kind, 40, 10, 77).unwrap();
        let c = make_embedding(kind, 40, 10, 78).unwrap();
        assert_eq!(a.to_matrix(), b.to_matrix());
        assert_ne!(a.to_matrix(), c.to_matrix());
    }
}

#[test]
fn gaussian_family_is_unbiased_in_norm() {
    let mut rng = stream_rng(123, Stream::Synth);
    let x = random_unit_vector(64, &mut rng);
    let mean = (0..2000u64)
        .map(|s| {
            let y = make_embedding(EmbeddingKind::Gaussian, 64, 32, s).unwrap().apply_vector(&x).unwrap();
            y.iter().map(|v| v * v).sum::<f64>()
        })
        .sum::<f64>()
        / 2000.0;
    assert!((0.95..=1.05).contains(&mean), "mean {mean}");
}

#[test]
fn trivial_mixing_leaves_tensor_unchanged() {
    let x = DenseTensor::from_fn(vec![3, 4], |i| (i[0] * 4 + i[1]) as f64).unwrap();
    let ops = MixOperators::from_modes(vec![
        Some(ModeMix::new(Matrix::identity(3), vec![1.0; 3]).unwrap()),
        Some(ModeMix::new(Matrix::identity(4), vec![1.0; 4]).unwrap()),
    ]);
    assert_eq!(ops.mix(&x).unwrap(), x);
    assert!(ModeMix::new(Matrix::identity(3).scaled(2.0), vec![1.0; 3]).is_err());
    assert!(ModeMix::new(Matrix::identity(3), vec![1.0, 0.5, -1.0]).is_err());
}

#[test]
fn jl_check_reference_cases() {
    let e = make_embedding(EmbeddingKind::Srft, 32, 32, 1).unwrap();
    let mut rng = stream_rng(4, Stream::Synth);
    let set: Vec<Vec<f64>> = (0..5).map(|_| random_unit_vector(32, &mut rng)).collect();
    let r = is_eps_jl(&e, &set, 1e-3).unwrap();
    assert!(r.all_passed && r.distortions.iter().all(|d| d.abs() < 1e-12));

    let g = make_embedding(EmbeddingKind::Gaussian, 32, 4, 1).unwrap();
    assert!(is_eps_jl(&g, &[vec![0.0; 32]], 0.01).unwrap().all_passed);
    assert!(is_eps_jl(&g, &[vec![0.0; 31]], 0.01).is_err());
}

#[test]
fn gaussian_jl_on_a_fixed_set_mostly_passes() {
    let mut rng = stream_rng(8, Stream::Synth);
    let set: Vec<Vec<f64>> = (0..10).map(|_| random_unit_vector(256, &mut rng)).collect();
    let rate = jl_failure_rate(EmbeddingKind::Gaussian, 256, 64, &VectorSet::Fixed(set), 0.5, 200, 8).unwrap();
    assert!(rate < 0.1, "failure rate {rate}");
}

#[test]
fn failure_rate_cases() {
    let set = VectorSet::RandomUnit { count: 6 };
    assert_eq!(jl_failure_rate(EmbeddingKind::Srft, 24, 24, &set, 1e-6, 20, 3).unwrap(), 0.0);
    let a = jl_failure_rate(EmbeddingKind::Gaussian, 64, 16, &set, 0.3, 50, 3).unwrap();
    assert_eq!(a, jl_failure_rate(EmbeddingKind::Gaussian, 64, 16, &set, 0.3, 50, 3).unwrap());

    let rates: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&m| jl_failure_rate(EmbeddingKind::Gaussian, 256, m, &set, 0.3, 200, 5).unwrap())
        .collect();
    assert!(rates[0] >= rates[1] - 0.05 && rates[1] >= rates[2] - 0.05, "{rates:?}");
    assert!(rates[0] > rates[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixing_preserves_norm_and_unmixing_inverts(seed in any::<u64>(), n0 in 2usize..9, n1 in 2usize..9) {
        let dims = [n0, n1, 3];
        let mut rng = stream_rng(seed, Stream::Synth);
        let x = DenseTensor::from_fn(dims.to_vec(), |_| rng.sample(StandardNormal)).unwrap();
        let ops = MixOperators::generate(&dims, &[0, 1], seed).unwrap();
        let y = ops.mix(&x).unwrap();
        prop_assert!((y.norm() - x.norm()).abs() <= 1e-12 * x.norm());
        for j in 0..2 {
            let g = gaussian(dims[j], 2, seed ^ j as u64);
            let back = ops.unmix_factor(&ops.mix_factor(&g, j).unwrap(), j).unwrap();
            prop_assert!(back.sub(&g).unwrap().max_abs() <= 1e-12 * g.max_abs());
        }
    }
}
