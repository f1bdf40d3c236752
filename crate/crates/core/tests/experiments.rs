use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use ringqed::cavity::CouplingMode;
use ringqed::experiments::arrays::{
    array_stats, compare_line_ring, default_array_height, sweep_array_map, sweep_disorder, ArrayRun, DisorderAxis,
};
use ringqed::experiments::cloud::{cloud_stats, default_cloud, CloudRun};
use ringqed::experiments::lorentz::lorentzian;
use ringqed::experiments::spectrum::{compute_spectrum, default_detunings, SpectrumOptions, SpectrumRun, SpectrumSource};
use ringqed::experiments::{fit_lorentzian, Excitation, RunningStats};
use ringqed::geometry::{ArrayParams, ArrayShape};
use ringqed::units::Calibration;

#[test]
fn lorentzian_fit_recovers_width_under_noise() {
    let x: Vec<f64> = (0..201).map(|k| -10.0 + 0.1 * k as f64).collect();
    let noise = Normal::new(0.0, 0.01).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| lorentzian(v, 0.3, 2.2, 1.0, 0.05) + noise.sample(&mut rng))
            .collect();
        let fit = fit_lorentzian(&x, &y).unwrap();
        assert!(fit.converged, "seed {seed}");
        assert!((fit.fwhm / 2.2 - 1.0).abs() < 0.03, "seed {seed}: {}", fit.fwhm);
        assert!((fit.center - 0.3).abs() < 0.05);
    }
}

#[test]
fn lorentzian_fit_is_exact_without_noise() {
    let x: Vec<f64> = (0..101).map(|k| -5.0 + 0.1 * k as f64).collect();
    let y: Vec<f64> = x.iter().map(|&v| lorentzian(v, -0.4, 1.3, -0.7, 1.0)).collect();
    let fit = fit_lorentzian(&x, &y).unwrap();
    assert!((fit.fwhm - 1.3).abs() < 1e-6);
    assert!((fit.amplitude + 0.7).abs() < 1e-6);
}

#[test]
fn merged_statistics_match_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dist = Normal::new(3.0, 2.0).unwrap();
    let xs: Vec<f64> = (0..5000).map(|_| dist.sample(&mut rng)).collect();
    let mut parts: Vec<RunningStats> = Vec::new();
    for chunk in xs.chunks(337) {
        let mut s = RunningStats::default();
        chunk.iter().for_each(|&x| s.push(x));
        parts.push(s);
    }
    let mut merged = RunningStats::default();
    parts.iter().for_each(|p| merged.merge(p));

    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert_eq!(merged.count, 5000);
    assert!((merged.mean - mean).abs() < 1e-12 * mean.abs());
    assert!((merged.variance() - var).abs() < 1e-12 * var);
    assert_eq!(merged.min, xs.iter().cloned().fold(f64::INFINITY, f64::min));
    assert_eq!(merged.max, xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
}

fn cloud_run(trials: u64) -> CloudRun {
    CloudRun::new(default_cloud(12, &Calibration::default()), 0.05, Excitation::Tds, trials, 17)
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let run = cloud_run(40);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| cloud_stats(&run, None).unwrap());
    let three = pool(3).install(|| cloud_stats(&run, None).unwrap());
    assert_eq!(one, three);
}

#[test]
fn ensemble_depends_on_seed() {
    let a = cloud_stats(&cloud_run(10), None).unwrap();
    let mut r = cloud_run(10);
    r.seed += 1;
    let b = cloud_stats(&r, None).unwrap();
    assert_ne!(a.metric("gamma_f").unwrap().mean(), b.metric("gamma_f").unwrap().mean());
}

#[test]
fn uniform_cloud_cavity_rate_is_collective() {
    let mut run = cloud_run(20);
    run.coupling = CouplingMode::Uniform;
    let stats = cloud_stats(&run, None).unwrap();
    let gc = &stats.metric("gamma_c").unwrap().stats;
    assert!((gc.mean - 0.6).abs() < 1e-10 && gc.variance() < 1e-20);
    assert_eq!(stats.accepted(), 20);
}

#[test]
fn height_calibration_matches_mean_cooperativity() {
    // With one atom per trial, ⟨γ_c⟩ estimates the ensemble-mean C.
    let mut run = CloudRun::new(default_cloud(1, &Calibration::default()), 0.05, Excitation::Tds, 20_000, 4);
    run.free_space = false;
    let stats = cloud_stats(&run, None).unwrap();
    let gc = &stats.metric("gamma_c").unwrap().stats;
    assert!((gc.mean - 0.05).abs() < 4.0 * gc.std_err(), "{} ± {}", gc.mean, gc.std_err());
}

fn array_run(n: usize) -> ArrayRun {
    let z = default_array_height(&Calibration::default());
    ArrayRun::new(ArrayParams::perfect(ArrayShape::Line, n, 0.3, z), 0.05, 8, 3)
}

#[test]
fn array_map_cells_cover_the_grid() {
    let grid = sweep_array_map(&array_run(6), &[0.2, 0.3, 0.5], &[1.2, 1.69]).unwrap();
    assert_eq!(grid.shape(), vec![3, 2]);
    assert!(grid.is_complete());
    assert_eq!(grid.empty_cells(), 0);
    for (k, cell) in grid.cells.iter().enumerate() {
        assert_eq!(cell.index, vec![k / 2, k % 2]);
        assert_eq!(cell.trials, 1);
        assert_eq!(cell.excluded, 0);
    }
}

#[test]
fn disorder_cells_count_both_ensembles() {
    let grid = sweep_disorder(&array_run(10), DisorderAxis::Filling, &[0.5, 1.0], &[5]).unwrap();
    assert_eq!(grid.cells.len(), 2);
    assert_eq!(grid.cells[0].trials, 16);
    assert_eq!(grid.cells[1].trials, 2);
    for cell in &grid.cells {
        assert!(cell.metrics.contains_key("zdep_gamma_f") && cell.metrics.contains_key("uniform_gamma_f"));
    }
    // Every atom sits at the reference height, so both couplings agree.
    let c = &grid.cells[0];
    assert!((c.mean("zdep_gamma_f") - c.mean("uniform_gamma_f")).abs() < 1e-12);
}

#[test]
fn perfect_array_runs_once() {
    let stats = array_stats(&array_run(5)).unwrap();
    assert_eq!(stats.requested, 1);
}

#[test]
fn line_and_ring_agree_for_one_atom() {
    let grid = compare_line_ring(&array_run(1), &[1, 8]).unwrap();
    let c = &grid.cells[0];
    assert!((c.mean("line_gamma_f") - 1.0).abs() < 1e-12);
    assert!((c.mean("ring_gamma_f") - 1.0).abs() < 1e-12);
    let c = &grid.cells[1];
    assert!(c.mean("line_gamma_f") < 1.0 && c.mean("ring_gamma_f") < 1.0);
}

#[test]
fn single_atom_spectrum_width_is_one_plus_c() {
    let mut cloud = default_cloud(1, &Calibration::default());
    cloud.sigma_z = 0.0;
    let run = SpectrumRun {
        source: SpectrumSource::Cloud(cloud),
        cavity: Default::default(),
        c1: 0.05,
        options: SpectrumOptions::default(),
        detunings: default_detunings(1, 0.05, 241),
        trials: 1,
        seed: 1,
    };
    let result = compute_spectrum(&run).unwrap();
    assert!(result.fit_converged());
    let w = result.fwhm().unwrap();
    assert!((w - 1.05).abs() < 0.02 * 1.05, "{w}");
}
