use compressed_tucker::bench::{
    read_rows, run_bench, summarize, synth_tensor, write_rows, BenchConfig, BenchRow, Stats, CSV_HEADER,
};
use compressed_tucker::decompose::Method;
use compressed_tucker::io::save_tensor;

fn small() -> compressed_tucker::DenseTensor {
    synth_tensor(&[14, 12, 10], &[3, 3, 3], 0.1, 1).unwrap()
}

#[test]
fn synth_noise_matches_expected_snr() {
    let signal = synth_tensor(&[40, 40, 40], &[5, 5, 5], 0.0, 3).unwrap();
    let noisy = synth_tensor(&[40, 40, 40], &[5, 5, 5], 0.1, 3).unwrap();
    let noise = noisy.sub(&signal).unwrap();
    let sample = signal.norm_sq() / noise.norm_sq();
    let analytic = signal.norm_sq() / (0.01 * 64000.0);
    assert!((sample / analytic - 1.0).abs() <= 0.1, "{sample} vs {analytic}");
    let x = hosvd_rel_error(&signal);
    assert!(x <= 1e-10);
}

fn hosvd_rel_error(x: &compressed_tucker::DenseTensor) -> f64 {
    let t = compressed_tucker::decompose::hosvd(x, &[5, 5, 5]).unwrap();
    compressed_tucker::decompose::relative_error(x, &t).unwrap()
}

#[test]
fn synth_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.tkr"), dir.path().join("b.tkr"));
    save_tensor(&a, &synth_tensor(&[6, 5, 4], &[2, 2, 2], 0.1, 9).unwrap()).unwrap();
    save_tensor(&b, &synth_tensor(&[6, 5, 4], &[2, 2, 2], 0.1, 9).unwrap()).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn deterministic_method_has_zero_spread() {
    let rows = run_bench(
        &small(),
        &BenchConfig {
            methods: vec![Method::Hooi],
            ranks: vec![3],
            dr_grid: vec![0.5],
            reps: 2,
            ..BenchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].error.to_bits(), rows[1].error.to_bits());
    assert_eq!(rows[0].dr, 1.0);
    assert_eq!(summarize(&rows).cells[0].error.sd, 0.0);
}

#[test]
fn randomized_method_varies_across_reps() {
    let rows = run_bench(
        &small(),
        &BenchConfig {
            methods: vec![Method::HooiRe],
            ranks: vec![3],
            dr_grid: vec![0.5],
            reps: 5,
            seed: 2,
            ..BenchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(rows.len(), 5);
    let mut errs: Vec<u64> = rows.iter().map(|r| r.error.to_bits()).collect();
    errs.sort_unstable();
    errs.dedup();
    assert_eq!(errs.len(), 5);
    assert!(summarize(&rows).cells[0].error.sd > 0.0);
}

#[test]
fn failed_runs_become_nan_rows() {
    let rows = run_bench(
        &small(),
        &BenchConfig {
            methods: vec![Method::Hosvd],
            ranks: vec![3, 11],
            reps: 1,
            ..BenchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0].is_failure());
    assert!(rows[1].is_failure() && rows[1].iters == 0);
    let s = summarize(&rows);
    assert_eq!(s.cell(Method::Hosvd, 11, 1.0).unwrap().failures, 1);
}

#[test]
fn csv_round_trip_and_aggregates() {
    let rows = run_bench(
        &small(),
        &BenchConfig {
            methods: vec![Method::Hosvd, Method::HooiRe, Method::HooiReStar],
            ranks: vec![2, 3],
            dr_grid: vec![0.4, 0.8],
            reps: 3,
            seed: 5,
            threads: 2,
            ..BenchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(rows.len(), 2 * 3 + 2 * 2 * 2 * 3);

    let mut buf = Vec::new();
    write_rows(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let back: Vec<BenchRow> = read_rows(buf.as_slice()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!((a.method, a.rank, a.rep, a.seed, a.iters), (b.method, b.rank, b.rep, b.seed, b.iters));
        assert_eq!(a.error.to_bits(), b.error.to_bits());
        assert_eq!(a.dr.to_bits(), b.dr.to_bits());
    }

    for cell in summarize(&rows).cells {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == cell.method && r.rank == cell.rank && r.dr == cell.dr)
            .map(|r| r.error)
            .collect();
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((cell.error.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((cell.error.sd - sd).abs() <= 1e-12 * mean.abs().max(1.0));
        assert_eq!(cell.runs, 3);
    }
    assert!(read_rows("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn thread_count_does_not_change_errors() {
    let base = BenchConfig {
        methods: vec![Method::HooiRe],
        ranks: vec![3],
        dr_grid: vec![0.5],
        reps: 4,
        seed: 3,
        ..BenchConfig::default()
    };
    let serial = run_bench(&small(), &base).unwrap();
    let parallel = run_bench(&small(), &BenchConfig { threads: 3, ..base }).unwrap();
    let bits = |r: &[BenchRow]| r.iter().map(|x| x.error.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&serial), bits(&parallel));
}

#[test]
fn stats_median_of_odd_count() {
    assert_eq!(Stats::of(&[3.0, 1.0, 2.0]).median, 2.0);
}
