//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::time::Instant;

use ndarray_linalg::Eig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringqed::cavity::{build_cavity_matrix, CavityParams, CouplingMode};
use ringqed::dynamics::{decay_metrics, photon_budget, weights_tds};
use ringqed::experiments::arrays::{
    compare_line_ring, default_array_height, sweep_array_map, sweep_disorder, ArrayRun, DisorderAxis,
};
use ringqed::experiments::cloud::{calibrate_cloud, cloud_stats, default_cloud, CloudRun};
use ringqed::experiments::spectrum::{compute_spectrum, default_detunings, SpectrumOptions, SpectrumRun, SpectrumSource};
use ringqed::experiments::{derive_seed, EnsembleStats, Excitation, ModelOptions, Realization};
use ringqed::geometry::{build_array, sample_cloud, ArrayParams, ArrayShape, AtomConfig};
use ringqed::oracle::{compare_models, Tolerances};
use ringqed::units::Calibration;

const C1: f64 = 0.05;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn cal() -> Calibration {
    Calibration::default()
}

fn mean(stats: &EnsembleStats, metric: &str) -> f64 {
    stats.metric(metric).map_or(f64::NAN, |m| m.mean())
}

fn cloud_run(n: usize, excitation: Excitation, trials: u64, seed: u64) -> CloudRun {
    CloudRun::new(default_cloud(n, &cal()), C1, excitation, trials, seed)
}

fn array_run(shape: ArrayShape, n: usize, trials: u64) -> ArrayRun {
    let z = default_array_height(&cal());
    ArrayRun::new(ArrayParams::perfect(shape, n, 0.3, z), C1, trials, 11)
}

fn uniform_options() -> ModelOptions {
    ModelOptions {
        coupling: CouplingMode::Uniform,
        ..ModelOptions::default()
    }
}

fn uniform_params() -> CavityParams {
    CavityParams {
        c_ref: C1,
        ..CavityParams::default()
    }
}

fn spectrum_fwhm(n: usize, free_space: bool, trials: u64) -> f64 {
    let run = SpectrumRun {
        source: SpectrumSource::Cloud(default_cloud(n, &cal())),
        cavity: CavityParams::default(),
        c1: C1,
        options: SpectrumOptions {
            free_space,
            stochastic: false,
            ..SpectrumOptions::default()
        },
        detunings: default_detunings(n, C1, 241),
        trials,
        seed: 5,
    };
    let result = compute_spectrum(&run).expect("spectrum");
    if result.fit_converged() {
        result.fwhm().unwrap_or(f64::NAN)
    } else {
        f64::NAN
    }
}

fn ac1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let pos = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.06..1.5)];
        let cfg = AtomConfig::new("one", vec![pos]).unwrap();
        // The atom defines the reference height, so its cooperativity is C1
        // under either coupling law.
        let p = CavityParams {
            z_ref: pos[2],
            ..uniform_params()
        };
        for options in [uniform_options(), ModelOptions::default()] {
            let m = Realization::new(&cfg, &p, &options).unwrap().metrics(Excitation::Tds, p.eta).unwrap();
            worst = worst
                .max((m.gamma_f.unwrap() - 1.0).abs())
                .max((m.gamma_c.unwrap() - C1).abs());
        }
    }
    let w = spectrum_fwhm(1, true, 1);
    let rel = (w / (1.0 + C1) - 1.0).abs();
    verdict(
        worst < 1e-10 && rel < 0.01,
        format!("max |γ - limit| = {worst:.1e}, FWHM = {w:.4} Γ0 (rel. error {rel:.1e})"),
    )
}

fn ac2() -> Verdict {
    let mut worst_rate = 0.0f64;
    let mut worst_dark = 0.0f64;
    for (k, n) in [1usize, 2, 5, 10, 20, 30, 40].into_iter().enumerate() {
        let cfg = sample_cloud(&default_cloud(n, &cal()), k as u64).unwrap();
        let cav = build_cavity_matrix(&cfg, &uniform_params(), CouplingMode::Uniform).unwrap();
        let (evals, _) = cav.matrix.eig().unwrap();
        let mut mods: Vec<(f64, f64)> = evals.iter().map(|l| (l.norm(), 2.0 * l.im.abs())).collect();
        mods.sort_by(|a, b| b.0.total_cmp(&a.0));
        worst_rate = worst_rate.max((mods[0].1 - n as f64 * C1).abs());
        worst_dark = worst_dark.max(mods.iter().skip(1).map(|m| m.0).fold(0.0, f64::max));
    }
    verdict(
        worst_rate < 1e-9 && worst_dark < 1e-10,
        format!("bright rate error {worst_rate:.1e}, largest dark |λ| = {worst_dark:.1e}"),
    )
}

fn ac3() -> Verdict {
    let mut worst = 0.0f64;
    let mut configs: Vec<AtomConfig> = (0..20)
        .map(|s| sample_cloud(&default_cloud(60, &cal()), s).unwrap())
        .collect();
    for shape in [ArrayShape::Line, ArrayShape::Ring] {
        configs.push(build_array(&ArrayParams::perfect(shape, 40, 0.3, 0.4), 0).unwrap());
    }
    for cfg in &configs {
        let m = Realization::new(cfg, &uniform_params(), &uniform_options())
            .unwrap()
            .metrics(Excitation::Tds, 1.0)
            .unwrap();
        worst = worst.max((m.gamma_c.unwrap() - cfg.len() as f64 * C1).abs());
    }
    let stats = cloud_stats(&cloud_run(60, Excitation::Tds, 2000, 3), None).unwrap();
    let gc = mean(&stats, "gamma_c");
    let rel = (gc / (60.0 * C1) - 1.0).abs();
    verdict(
        worst < 1e-9 && rel < 0.15,
        format!("uniform-C max error {worst:.1e}; z-dependent N=60 ⟨γ_c⟩ = {gc:.3} Γ0 (NC1 = 3.000, rel. {rel:.3})"),
    )
}

fn ac4() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, trials) in [(10usize, 2000u64), (30, 2000), (60, 5000)] {
        let stats = cloud_stats(&cloud_run(n, Excitation::Tds, trials, 4), Some(1.7)).unwrap();
        let gf = mean(&stats, "gamma_f");
        pass &= (gf - 1.0).abs() < 0.1;
        parts.push(format!("N={n}: {gf:.3}"));
    }
    verdict(pass, format!("⟨γ_f⟩ at k = 1.7 k0: {}", parts.join(", ")))
}

fn ac5() -> Verdict {
    let mut gfs = Vec::new();
    let mut gc60 = f64::NAN;
    for n in [5usize, 15, 30, 60] {
        let stats = cloud_stats(&cloud_run(n, Excitation::Ss, 1000, derive_seed(5, n as u64)), None).unwrap();
        gfs.push(mean(&stats, "gamma_f"));
        gc60 = mean(&stats, "gamma_c");
    }
    let monotone = gfs.windows(2).all(|w| w[1] < w[0]);
    let rel = (gc60 / (20.0 * C1) - 1.0).abs();
    verdict(
        monotone && rel < 0.25,
        format!("SS ⟨γ_f⟩ over N = 5, 15, 30, 60: {gfs:.3?}; ⟨γ_c⟩(60) = {gc60:.3} Γ0 (20 C1 = 1.000)"),
    )
}

fn ac6() -> Verdict {
    let start = Instant::now();
    let grid = sweep_array_map(&array_run(ArrayShape::Line, 20, 1), &[0.3], &[1.69]).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let gf = grid.cells[0].mean("gamma_f");
    verdict(
        (gf - 0.035).abs() <= 0.002 && grid.cells[0].trials == 1 && elapsed < 1.0,
        format!("γ_f = {gf:.4} Γ0 in {elapsed:.3} s"),
    )
}

fn ac7() -> Verdict {
    let fills: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let grid = sweep_disorder(&array_run(ArrayShape::Line, 20, 500), DisorderAxis::Filling, &fills, &[20, 40]).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, n) in [20, 40].into_iter().enumerate() {
        let curve: Vec<f64> = (0..fills.len()).map(|i| grid.cells[i * 2 + j].mean("zdep_gamma_f")).collect();
        let half = curve[4];
        pass &= (half - 0.5).abs() <= 0.05 && curve.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("N={n}: γ_f(50%) = {half:.3}, γ_f(100%) = {:.4}", curve[9]));
    }
    verdict(pass, parts.join("; "))
}

fn ac8() -> Verdict {
    let dz = cal().nm_to_internal(50.0);
    let grid = sweep_disorder(&array_run(ArrayShape::Line, 20, 500), DisorderAxis::DeltaZ, &[0.0, dz], &[20, 40]).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, n) in [20, 40].into_iter().enumerate() {
        let (c0, c1) = (&grid.cells[j], &grid.cells[2 + j]);
        let zdep = c1.mean("zdep_gamma_f") - c0.mean("zdep_gamma_f");
        let uniform = c1.mean("uniform_gamma_f") - c0.mean("uniform_gamma_f");
        let ratio = zdep / uniform;
        pass &= (ratio / 8.0 - 1.0).abs() <= 0.3;
        parts.push(format!("N={n}: ratio {ratio:.2}"));
    }
    verdict(pass, format!("{} (target 8 ± 30%)", parts.join(", ")))
}

fn ac9() -> Verdict {
    let ns = [1usize, 10, 20, 30, 40, 50, 60];
    let widths: Vec<f64> = ns.iter().map(|&n| spectrum_fwhm(n, false, 1)).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, widths.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&widths).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = widths.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    let with_gf = spectrum_fwhm(60, true, 100);
    let without = widths[widths.len() - 1];
    let pass = r2 > 0.999 && (slope / C1 - 1.0).abs() < 0.02 && with_gf < without;
    verdict(
        pass,
        format!("slope {slope:.4} Γ0 (C1 = {C1}), R² = {r2:.6}; FWHM(60) {with_gf:.3} with G_f vs {without:.3} without"),
    )
}

fn ac10() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [10usize, 30, 60] {
        let theta = |excitation| {
            let mut run = cloud_run(n, excitation, 500, derive_seed(10, n as u64));
            run.coupling = CouplingMode::Uniform;
            mean(&cloud_stats(&run, None).unwrap(), "theta")
        };
        let (tds, ss) = (theta(Excitation::Tds), theta(Excitation::Ss));
        pass &= tds < 1.0 && ss > 1.0;
        parts.push(format!("N={n}: TDS {tds:.3}, SS {ss:.3}"));
    }
    verdict(pass, format!("⟨θ⟩ {}", parts.join("; ")))
}

fn ac11() -> Verdict {
    let (mut eigen, mut full, mut shrink, mut pass) = (0.0f64, 0.0f64, true, true);
    for i in 0..20u64 {
        let mut cloud = default_cloud(1 + i as usize % 4, &cal());
        cloud.poisson_n = false;
        let atoms = sample_cloud(&cloud, derive_seed(1, i)).unwrap();
        let params = calibrate_cloud(&CavityParams::default(), &cloud, C1, CouplingMode::HeightDependent);
        let r = compare_models(&atoms, &params, CouplingMode::HeightDependent, 2.0, Tolerances::default()).unwrap();
        eigen = eigen.max(r.eigen_vs_eliminated.max());
        full = full.max(r.eliminated_vs_full.max());
        shrink &= r.adiabatic_pass;
        pass &= r.passed();
    }
    verdict(
        pass && eigen <= 1e-6 && full <= 0.03 && shrink,
        format!("20 instances: eigen/RK4 {eigen:.1e}, eliminated/full {full:.1e}, shrinks with κ×10: {shrink}"),
    )
}

fn ac12() -> Verdict {
    let (mut biortho, mut skew, mut budget, mut scaling) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut min_rate = f64::INFINITY;
    let mut symmetric = true;
    let params = CavityParams {
        z_ref: 0.47,
        ..uniform_params()
    };
    for s in 0..20u64 {
        let n = 2 + (s as usize * 7) % 30;
        let cfg = sample_cloud(&default_cloud(n, &cal()), 100 + s).unwrap();
        let r = Realization::new(&cfg, &params, &ModelOptions::default()).unwrap();
        biortho = biortho.max(r.eigen.biorthogonality_error);
        symmetric &= r.free.matrix() == r.free.matrix().t();
        let g = &r.cavity.matrix;
        for i in 0..n {
            for j in 0..n {
                skew = skew.max((g[[i, j]] + g[[j, i]].conj()).norm());
            }
        }
        min_rate = min_rate.min(r.eigen.decay_rates().iter().cloned().fold(f64::INFINITY, f64::min));
        let st = weights_tds(&r.eigen, &r.cavity.drive(params.eta), 0.01).unwrap();
        let total = photon_budget(&r.eigen, &st.weights, &r.channels);
        budget = budget.max((total.re - st.excitation()).abs() / st.excitation());

        let gf = decay_metrics(&st.sigma, &r.coupling, &r.channels).unwrap().gamma_f.unwrap();
        let scaled = CavityParams {
            c_ref: params.c_ref * 9.0,
            ..params.clone()
        };
        let r2 = Realization::new(&cfg, &scaled, &ModelOptions::default()).unwrap();
        let gf2 = r2.metrics(Excitation::Tds, params.eta).unwrap().gamma_f.unwrap();
        scaling = scaling.max((gf - gf2).abs());
    }
    let pass = biortho < 1e-10 && symmetric && skew < 1e-14 && min_rate >= -1e-10 && budget < 1e-6 && scaling < 1e-12;
    verdict(
        pass,
        format!(
            "biorthogonality {biortho:.1e}, G_f symmetric {symmetric}, skew {skew:.1e}, min Γ_α {min_rate:.3}, budget {budget:.1e}, g-scaling {scaling:.1e}"
        ),
    )
}

fn ac13() -> Verdict {
    let ns = [1usize, 2, 5, 10, 20, 30, 40, 60, 80, 100];
    let grid = compare_line_ring(&array_run(ArrayShape::Line, 1, 1), &ns).unwrap();
    let line = grid.series("line_gamma_f");
    let ring = grid.series("ring_gamma_f");
    let ordered = ns.iter().zip(line.iter().zip(&ring)).filter(|(n, _)| **n >= 20).all(|(_, (l, r))| r < l);
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    verdict(
        ordered && monotone(&line) && monotone(&ring),
        format!("N=100: line {:.3e}, ring {:.3e}; monotone line {}, ring {}", line[9], ring[9], monotone(&line), monotone(&ring)),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
        ("AC11", ac11),
        ("AC12", ac12),
        ("AC13", ac13),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let v = f();
        println!(
            "{name} {} {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
