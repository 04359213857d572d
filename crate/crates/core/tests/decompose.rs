use compressed_tucker::bench::synth_tensor;
use compressed_tucker::decompose::{
    decompose, hooi, hooi_re, hooi_re_star, hosvd, reconstruction_error, relative_error, DecomposerConfig, Init,
    Method,
};
use compressed_tucker::rng::{stream_rng, Stream};
use compressed_tucker::TuckerDecomposition;
use proptest::prelude::*;

fn exact(dims: &[usize], ranks: &[usize], seed: u64) -> compressed_tucker::DenseTensor {
    synth_tensor(dims, ranks, 0.0, seed).unwrap()
}

#[test]
fn hosvd_recovers_exact_low_rank() {
    let x = exact(&[20, 20, 20], &[3, 3, 3], 1);
    let t = hosvd(&x, &[3, 3, 3]).unwrap();
    assert!(relative_error(&x, &t).unwrap() <= 1e-10);
    let full = hosvd(&x, &[20, 20, 20]).unwrap();
    assert!(relative_error(&x, &full).unwrap() <= 1e-12);
    assert!(hosvd(&x, &[21, 3, 3]).is_err());
}

#[test]
fn hosvd_error_shrinks_with_rank() {
    let x = synth_tensor(&[16, 16, 16], &[8, 8, 8], 0.05, 2).unwrap();
    let errs: Vec<f64> = [2, 4, 8].iter().map(|&r| relative_error(&x, &hosvd(&x, &[r; 3]).unwrap()).unwrap()).collect();
    assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
}

#[test]
fn hooi_exact_and_full_rank() {
    let x = exact(&[30, 30, 30], &[4, 4, 4], 3);
    let (_, rep) = hooi(&x, &DecomposerConfig::new(Method::Hooi, vec![4; 3])).unwrap();
    assert!(rep.relative_error <= 1e-8 && rep.iterations <= 10);

    let y = synth_tensor(&[5, 6, 4], &[2, 2, 2], 0.3, 3).unwrap();
    let (_, rep) = hooi(&y, &DecomposerConfig::new(Method::Hooi, vec![5, 6, 4]).with_max_iters(1)).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!(rep.relative_error <= 1e-10);
}

#[test]
fn hooi_improves_on_hosvd_for_noisy_data() {
    // Signal energy 125 against noise σ² ∏n: σ chosen for SNR 10.
    let sigma = (125.0f64 / (10.0 * 64000.0)).sqrt();
    let x = synth_tensor(&[40, 40, 40], &[5, 5, 5], sigma, 4).unwrap();
    let e_hosvd = reconstruction_error(&x, &hosvd(&x, &[5; 3]).unwrap()).unwrap();
    let (_, rep) = hooi(&x, &DecomposerConfig::new(Method::Hooi, vec![5; 3])).unwrap();
    assert!(rep.final_error <= e_hosvd + 1e-12, "{} vs {e_hosvd}", rep.final_error);
}

#[test]
fn hooi_fit_trace_is_monotone() {
    let x = synth_tensor(&[14, 12, 10], &[6, 6, 6], 0.2, 5).unwrap();
    for init in [Init::Hosvd, Init::RandomOrthonormal] {
        let cfg = DecomposerConfig::new(Method::Hooi, vec![3, 3, 3]).with_init(init).with_rel_tol(1e-12).with_seed(5);
        let (_, rep) = hooi(&x, &cfg).unwrap();
        assert!(rep.iterations >= 2);
        assert!(rep.fit_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", rep.fit_trace);
    }
}

#[test]
fn full_sampling_reproduces_plain_hooi() {
    let x = exact(&[18, 16, 14], &[3, 3, 3], 6);
    let (_, plain) = hooi(&x, &DecomposerConfig::new(Method::Hooi, vec![3; 3])).unwrap();
    for method in [Method::HooiRe, Method::HooiReStar] {
        let (_, rep) = decompose(&x, &DecomposerConfig::new(method, vec![3; 3]).with_dr(1.0).with_seed(6)).unwrap();
        assert!((rep.final_error - plain.final_error).abs() <= 1e-8 * x.norm());
        assert_eq!(rep.embedding_dims, vec![18, 16, 14]);
    }
}

#[test]
fn sketched_recovery_of_exact_tensor() {
    let x = exact(&[30, 30, 30], &[4, 4, 4], 7);
    for seed in 0..3 {
        let (_, rep) = hooi_re(&x, &DecomposerConfig::new(Method::HooiRe, vec![4; 3]).with_dr(0.5).with_seed(seed)).unwrap();
        assert_eq!(rep.embedding_dims, vec![15; 3]);
        assert!(rep.relative_error <= 1e-6, "seed {seed}: {}", rep.relative_error);
    }
}

#[test]
fn undersampled_regime_prefers_full_core() {
    let x = synth_tensor(&[40, 40, 40], &[10, 10, 10], 0.02, 8).unwrap();
    let cfg = DecomposerConfig::new(Method::HooiRe, vec![10; 3]).with_dr(0.15).with_seed(8);
    let (t, re) = hooi_re(&x, &cfg).unwrap();
    assert_eq!(re.embedding_dims, vec![6; 3]);
    assert!(re.final_error.is_finite());
    for f in t.factors() {
        assert!(f.orthonormality_defect() <= 1e-9);
    }
    let (_, star) = hooi_re_star(&x, &DecomposerConfig { method: Method::HooiReStar, ..cfg }).unwrap();
    assert!(star.final_error < re.final_error, "{} vs {}", star.final_error, re.final_error);
}

#[test]
fn uncompressed_modes_are_left_alone() {
    let x = exact(&[20, 8, 20], &[3, 3, 3], 9);
    let cfg = DecomposerConfig::new(Method::HooiRe, vec![3; 3]).with_dr(0.5).with_compress_modes(vec![0, 2]);
    let (_, rep) = hooi_re(&x, &cfg).unwrap();
    assert_eq!(rep.embedding_dims, vec![10, 8, 10]);
    assert!(rep.relative_error <= 1e-6);
}

#[test]
fn reports_are_deterministic_and_serializable() {
    let x = synth_tensor(&[15, 14, 13], &[3, 3, 3], 0.1, 10).unwrap();
    let cfg = DecomposerConfig::new(Method::HooiRe, vec![3; 3]).with_dr(0.4).with_seed(10);
    let (ta, a) = hooi_re(&x, &cfg).unwrap();
    let (tb, b) = hooi_re(&x, &cfg).unwrap();
    assert_eq!(a.final_error.to_bits(), b.final_error.to_bits());
    assert_eq!(a.fit_trace, b.fit_trace);
    assert_eq!(ta, tb);
    let json: serde_json::Value = serde_json::to_value(&a).unwrap();
    for key in ["method", "ranks", "dr", "seed", "iterations", "final_error", "fit_trace", "stage_times", "preprocess_ms"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["method"], "hooi-re");
    assert_eq!(a.stage_times.len(), a.iterations);
}

#[test]
fn error_expansion_cross_check() {
    let x = synth_tensor(&[7, 6, 5], &[3, 3, 3], 0.5, 11).unwrap();
    let t = TuckerDecomposition::random_orthogonal(&[7, 6, 5], &[2, 3, 2], &mut stream_rng(11, Stream::Init { mode: 0 })).unwrap();
    let xh = t.reconstruct().unwrap();
    let e = reconstruction_error(&x, &t).unwrap();
    let expanded = x.norm_sq() - 2.0 * x.inner(&xh).unwrap() + xh.norm_sq();
    assert!((e * e - expanded).abs() <= 1e-10 * x.norm_sq());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_method_returns_orthonormal_factors(seed in any::<u64>(), m in 0usize..4, dr in 0.1f64..1.0) {
        let method = Method::ALL[m];
        let x = synth_tensor(&[9, 8, 7], &[3, 3, 3], 0.1, seed).unwrap();
        let cfg = DecomposerConfig::new(method, vec![3, 2, 3]).with_dr(dr).with_seed(seed).with_max_iters(15);
        let (t, rep) = decompose(&x, &cfg).unwrap();
        prop_assert!(rep.final_error.is_finite());
        for f in t.factors() {
            prop_assert!(f.orthonormality_defect() <= 1e-9);
        }
    }
}
