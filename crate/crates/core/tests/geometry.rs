use proptest::prelude::*;
use ringqed::geometry::{build_array, sample_cloud, ArrayParams, ArrayShape, CloudParams, Z_MIN};

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn ring_chords_are_equal() {
    let cfg = build_array(&ArrayParams::perfect(ArrayShape::Ring, 24, 0.3, 0.33), 0).unwrap();
    let n = cfg.len();
    let radius = 24.0 * 0.3 / std::f64::consts::TAU;
    let chord = 2.0 * radius * (std::f64::consts::PI / n as f64).sin();
    for k in 0..n {
        let d = dist(&cfg.positions[k], &cfg.positions[(k + 1) % n]);
        assert!((d - chord).abs() < 1e-12);
        let r = cfg.positions[k][0].hypot(cfg.positions[k][1]);
        assert!((r - radius).abs() < 1e-12);
    }
}

#[test]
fn line_sites_are_evenly_spaced() {
    let cfg = build_array(&ArrayParams::perfect(ArrayShape::Line, 10, 0.3, 0.33), 0).unwrap();
    for (k, p) in cfg.positions.iter().enumerate() {
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 0.3 * k as f64).abs() < 1e-14);
        assert_eq!(p[2], 0.33);
    }
}

#[test]
fn perfect_array_ignores_seed() {
    let p = ArrayParams::perfect(ArrayShape::Ring, 30, 0.25, 0.33);
    assert_eq!(build_array(&p, 1).unwrap().positions, build_array(&p, 99).unwrap().positions);
}

#[test]
fn cloud_is_reproducible_per_seed() {
    let p = CloudParams {
        n_atoms: 40,
        sigma_x: 0.12,
        sigma_y: 2.3,
        sigma_z: 0.5,
        z_mean: 0.47,
        poisson_n: false,
    };
    assert_eq!(sample_cloud(&p, 7).unwrap().positions, sample_cloud(&p, 7).unwrap().positions);
    assert_ne!(sample_cloud(&p, 7).unwrap().positions, sample_cloud(&p, 8).unwrap().positions);
}

#[test]
fn cloud_second_moments_match_widths() {
    let p = CloudParams {
        n_atoms: 20_000,
        sigma_x: 0.12,
        sigma_y: 2.3,
        sigma_z: 0.05,
        z_mean: 1.0,
        poisson_n: false,
    };
    let cfg = sample_cloud(&p, 3).unwrap();
    let n = cfg.len() as f64;
    let mean = |k: usize| cfg.positions.iter().map(|r| r[k]).sum::<f64>() / n;
    let var = |k: usize| {
        let m = mean(k);
        cfg.positions.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / (n - 1.0)
    };
    let cov_xy = {
        let (mx, my) = (mean(0), mean(1));
        cfg.positions.iter().map(|r| (r[0] - mx) * (r[1] - my)).sum::<f64>() / (n - 1.0)
    };
    // Sample std of a variance estimate is about sqrt(2/n) relative.
    assert!((var(0).sqrt() / 0.12 - 1.0).abs() < 0.03);
    assert!((var(1).sqrt() / 2.3 - 1.0).abs() < 0.03);
    assert!((var(2).sqrt() / 0.05 - 1.0).abs() < 0.03);
    assert!((mean(2) - 1.0).abs() < 0.002);
    assert!(cov_xy.abs() / (0.12 * 2.3) < 0.04);
}

#[test]
fn poisson_atom_number_has_requested_mean() {
    let p = CloudParams {
        n_atoms: 20,
        sigma_x: 0.1,
        sigma_y: 1.0,
        sigma_z: 0.2,
        z_mean: 0.5,
        poisson_n: true,
    };
    let counts: Vec<f64> = (0..2000).map(|s| sample_cloud(&p, s).unwrap().len() as f64).collect();
    let m = counts.iter().sum::<f64>() / counts.len() as f64;
    let v = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (counts.len() as f64 - 1.0);
    assert!((m - 20.0).abs() < 0.5, "{m}");
    assert!((v / 20.0 - 1.0).abs() < 0.15, "{v}");
}

#[test]
fn invalid_parameters_are_named() {
    let mut p = ArrayParams::perfect(ArrayShape::Line, 5, -0.3, 0.33);
    assert!(build_array(&p, 0).unwrap_err().to_string().contains("spacing"));
    p.spacing = 0.3;
    p.filling_fraction = 1.5;
    assert!(build_array(&p, 0).unwrap_err().to_string().contains("filling"));
}

#[test]
fn target_atoms_grows_the_array() {
    let p = ArrayParams {
        filling_fraction: 0.4,
        target_atoms: Some(25),
        ..ArrayParams::perfect(ArrayShape::Ring, 0, 0.3, 0.33)
    };
    let cfg = build_array(&p, 5).unwrap();
    assert_eq!(cfg.len(), 25);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heights_stay_above_surface(seed in any::<u64>(), z in 0.06f64..1.0, sz in 0.0f64..1.0) {
        let p = CloudParams { n_atoms: 50, sigma_x: 0.1, sigma_y: 1.0, sigma_z: sz, z_mean: z, poisson_n: false };
        prop_assert!(sample_cloud(&p, seed).unwrap().heights().all(|h| h > Z_MIN || (sz == 0.0 && h == z)));
    }

    #[test]
    fn filled_sites_lie_on_lattice(seed in any::<u64>(), fill in 0.2f64..1.0, n in 5usize..60) {
        let p = ArrayParams { filling_fraction: fill, ..ArrayParams::perfect(ArrayShape::Line, n, 0.3, 0.33) };
        if let Ok(cfg) = build_array(&p, seed) {
            prop_assert!(cfg.len() <= n);
            for (pos, s) in cfg.positions.iter().zip(&cfg.path) {
                let k = s / 0.3;
                prop_assert!((k - k.round()).abs() < 1e-9);
                prop_assert!((pos[1] - s).abs() < 1e-12);
            }
        }
    }
}
